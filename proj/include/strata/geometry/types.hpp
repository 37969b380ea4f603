#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "strata/core/error.hpp"

namespace strata {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct PixelCoord {
  int row = 0;
  int col = 0;
  bool operator==(const PixelCoord&) const = default;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

/// Point positions in meters with optional depth-image provenance and color.
/// Color is carried through IO but never used by inference.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<PixelCoord> pixels;  // empty or same size as points
  std::vector<Rgb> colors;         // empty or same size as points

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_pixels() const { return !pixels.empty(); }
};

/// Ground normal, always unit length.
class GravityPrior {
 public:
  GravityPrior() = default;
  explicit GravityPrior(const Vec3& up) {
    double n = up.norm();
    if (!(n > 0) || !std::isfinite(n)) throw Error(ErrorKind::Precondition, "gravity vector must be non-zero and finite");
    up_ = up / n;
  }

  const Vec3& up() const { return up_; }
  double height(const Vec3& p) const { return up_.dot(p); }

 private:
  Vec3 up_ = Vec3::UnitZ();
};

/// Orthonormal in-plane basis (u, v) with u x v = normal. For non-horizontal
/// planes u is horizontal, so the 2D y axis tracks height.
struct PlaneFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();

  Vec2 to_2d(const Vec3& p) const {
    Vec3 d = p - origin;
    return {d.dot(u), d.dot(v)};
  }
  Vec3 to_3d(const Vec2& q) const { return origin + q.x() * u + q.y() * v; }
};

inline PlaneFrame make_plane_frame(const Vec3& normal, const Vec3& origin, const Vec3& up) {
  PlaneFrame f;
  f.origin = origin;
  f.normal = normal.normalized();
  Vec3 u = up.cross(f.normal);
  if (u.norm() < 1e-6) {
    // Horizontal plane: pick the world axis least aligned with the normal.
    Eigen::Index axis = 0;
    f.normal.cwiseAbs().minCoeff(&axis);
    Vec3 e = Vec3::Zero();
    e[axis] = 1.0;
    u = e - e.dot(f.normal) * f.normal;
  }
  f.u = u.normalized();
  f.v = f.normal.cross(f.u);
  return f;
}

/// Fitted plane {x : normal.x + offset = 0} with its inliers and convex boundary.
struct PlanePrimitive {
  int id = 0;
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::vector<std::uint32_t> inliers;  // indices into the source cloud
  std::vector<Vec3> hull;              // CCW in frame(up) 2D coordinates
  Vec3 centroid = Vec3::Zero();
  bool is_horizontal = false;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
  Vec3 project(const Vec3& p) const { return p - signed_distance(p) * normal; }
  PlaneFrame frame(const Vec3& up) const { return make_plane_frame(normal, project(centroid), up); }
};

/// Gravity-aligned oriented box. axes[2] is the up direction.
struct Bbox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);
  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

  bool contains(const Vec3& p, double slack = 1e-9) const {
    Vec3 d = p - center;
    for (int k = 0; k < 3; ++k)
      if (std::abs(d.dot(axes[k])) > half_extents[k] + slack) return false;
    return true;
  }
  double volume() const { return 8.0 * half_extents.prod(); }
  double bottom_height(const GravityPrior& g) const { return g.height(center) - half_extents[2]; }

  /// Bottom face corners, CCW seen from above.
  std::array<Vec3, 4> bottom_face() const {
    Vec3 c = center - half_extents[2] * axes[2];
    Vec3 a = half_extents[0] * axes[0];
    Vec3 b = half_extents[1] * axes[1];
    return {c - a - b, c + a - b, c + a + b, c - a + b};
  }
};

inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  double c = a.normalized().dot(b.normalized());
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

/// True when the plane normal is within `theta_angle_deg` of up (or of -up).
inline bool is_horizontal_normal(const Vec3& normal, const GravityPrior& g, double theta_angle_deg) {
  double a = angle_between_deg(normal, g.up());
  return a < theta_angle_deg || a > 180.0 - theta_angle_deg;
}

}  // namespace strata
