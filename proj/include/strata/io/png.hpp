#pragma once

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "strata/core/error.hpp"
#include "strata/eval/segmentation.hpp"
#include "strata/geometry/types.hpp"

namespace strata::io {

/// Single-channel image with 8- or 16-bit samples, widened to 16 bits.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;  // row-major
};

namespace detail {

struct FileCloser {
  FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

inline GrayImage read_gray_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw Error(ErrorKind::Io, "cannot open " + path);
  detail::FileCloser closer{fp};
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8)) throw Error(ErrorKind::Io, path + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Io, "libpng initialisation failed");
  }
  GrayImage img;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> raw;
  volatile bool bad_format = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Io, path + ": corrupt PNG");
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    bad_format = true;
  } else {
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_swap(png);  // little-endian host order
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * img.height);
    rows.resize(img.height);
    for (int r = 0; r < img.height; ++r) rows[r] = raw.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        std::size_t k = static_cast<std::size_t>(r) * img.width + c;
        if (depth == 16) {
          const unsigned char* p = rows[r] + 2 * c;
          img.pixels[k] = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        } else {
          img.pixels[k] = rows[r][c];
        }
      }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (bad_format) throw Error(ErrorKind::Io, path + ": expected a single-channel grayscale PNG");
  return img;
}

inline void write_gray16_png(const std::string& path, const GrayImage& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw Error(ErrorKind::Shape, "image size does not match its resolution");
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error(ErrorKind::Io, "cannot write " + path);
  detail::FileCloser closer{fp};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng initialisation failed");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.width) * img.height * 2);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) {
    raw[2 * k] = static_cast<unsigned char>(img.pixels[k] >> 8);  // PNG is big-endian
    raw[2 * k + 1] = static_cast<unsigned char>(img.pixels[k] & 0xff);
  }
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r) rows[r] = raw.data() + static_cast<std::size_t>(r) * img.width * 2;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "PNG encoding failed for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline LabelImage read_label_png(const std::string& path) {
  auto g = read_gray_png(path);
  return LabelImage(g.width, g.height, std::vector<int>(g.pixels.begin(), g.pixels.end()));
}

inline void write_label_png(const std::string& path, const LabelImage& img) {
  GrayImage g{img.width, img.height, {}};
  g.pixels.reserve(img.labels.size());
  for (int l : img.labels) {
    if (l < 0 || l > 65535) throw Error(ErrorKind::Shape, "label outside the 16-bit range");
    g.pixels.push_back(static_cast<std::uint16_t>(l));
  }
  write_gray16_png(path, g);
}

struct Intrinsics {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  double depth_scale = 1000.0;  // stored units per meter (millimeters by default)
};

inline Intrinsics read_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    auto j = nlohmann::json::parse(in);
    Intrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.depth_scale = j.value("depth_scale", 1000.0);
    if (!(k.fx > 0 && k.fy > 0 && k.depth_scale > 0)) throw Error(ErrorKind::Io, path + ": non-positive intrinsics");
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, path + ": " + e.what());
  }
}

/// Back-projects every nonzero depth pixel into the camera frame (x right,
/// y down, z forward) and records the pixel of origin.
inline PointCloud depth_to_cloud(const GrayImage& depth, const Intrinsics& k) {
  PointCloud cloud;
  for (int r = 0; r < depth.height; ++r)
    for (int c = 0; c < depth.width; ++c) {
      std::uint16_t d = depth.pixels[static_cast<std::size_t>(r) * depth.width + c];
      if (d == 0) continue;
      double z = d / k.depth_scale;
      cloud.points.emplace_back((c - k.cx) * z / k.fx, (r - k.cy) * z / k.fy, z);
      cloud.pixels.push_back({r, c});
    }
  return cloud;
}

inline PointCloud read_depth(const std::string& png_path, const std::string& intrinsics_path) {
  return depth_to_cloud(read_gray_png(png_path), read_intrinsics(intrinsics_path));
}

}  // namespace strata::io
