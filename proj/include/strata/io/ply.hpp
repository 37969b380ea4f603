#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/types.hpp"

namespace strata::io {

/// ASCII PLY: the vertex element's x, y, z and optional red, green, blue.
/// Other vertex properties and later elements are skipped.
inline PointCloud read_ply(std::istream& in, const std::string& name = "<stream>") {
  auto fail = [&](const std::string& m) { throw Error(ErrorKind::Io, name + ": " + m); };
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) fail("not a PLY file");
  bool ascii = false, in_vertex = false, seen_vertex = false;
  std::size_t vertex_count = 0;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
      if (!ascii) fail("only ASCII PLY is supported (got " + fmt + ")");
    } else if (word == "element") {
      std::string kind;
      ls >> kind;
      in_vertex = kind == "vertex";
      if (in_vertex) {
        if (seen_vertex) fail("duplicate vertex element");
        if (!(ls >> vertex_count)) fail("bad vertex count");
        seen_vertex = true;
      } else if (!seen_vertex) {
        fail("elements before the vertex element are not supported");
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type, pname;
      ls >> type;
      if (type == "list") fail("list properties on vertices are not supported");
      ls >> pname;
      props.push_back(pname);
    } else if (word == "end_header") {
      break;
    } else if (word != "comment" && word != "obj_info" && !word.empty()) {
      fail("unexpected header line '" + line + "'");
    }
  }
  if (!ascii) fail("missing format line");
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (int k = 0; k < static_cast<int>(props.size()); ++k) {
    const auto& p = props[k];
    if (p == "x") ix = k;
    else if (p == "y") iy = k;
    else if (p == "z") iz = k;
    else if (p == "red" || p == "r") ir = k;
    else if (p == "green" || p == "g") ig = k;
    else if (p == "blue" || p == "b") ib = k;
  }
  if (ix < 0 || iy < 0 || iz < 0) fail("vertex element lacks x, y or z");
  const bool color = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> vals(props.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!std::getline(in, line)) fail("file ends after " + std::to_string(v) + " of " + std::to_string(vertex_count) + " vertices");
    std::istringstream ls(line);
    for (auto& x : vals)
      if (!(ls >> x)) fail("malformed vertex line " + std::to_string(v));
    cloud.points.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (color)
      cloud.colors.push_back({static_cast<std::uint8_t>(vals[ir]), static_cast<std::uint8_t>(vals[ig]),
                              static_cast<std::uint8_t>(vals[ib])});
  }
  return cloud;
}

inline PointCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_ply(in, path);
}

/// Coordinates are written with 17 significant digits so a reload is exact.
inline void write_ply(std::ostream& out, const PointCloud& cloud) {
  const bool color = cloud.colors.size() == cloud.size() && !cloud.empty();
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x(), p.y(), p.z());
    out << buf;
    if (color) out << ' ' << int(cloud.colors[i].r) << ' ' << int(cloud.colors[i].g) << ' ' << int(cloud.colors[i].b);
    out << '\n';
  }
}

inline void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  write_ply(out, cloud);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace strata::io
