#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/types.hpp"

// Planar polygon helpers. Polygons are vertex lists, convex and CCW unless
// noted otherwise.
namespace strata {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) { return cross2(a - o, b - o); }

/// Andrew's monotone chain. Drops collinear points, so no three consecutive
/// output vertices are collinear. Throws DegenerateHull on < 3 points or a
/// collinear set.
inline std::vector<Vec2> convex_hull_2d(std::span<const Vec2> input) {
  if (input.size() < 3) throw Error(ErrorKind::DegenerateHull, "need at least 3 points for a hull");
  std::vector<Vec2> pts(input.begin(), input.end());
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a == b; }), pts.end());
  if (pts.size() < 3) throw Error(ErrorKind::DegenerateHull, "fewer than 3 distinct points");

  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  // Relative tolerance for the turn test; keeps noise-level kinks out.
  const double eps = 1e-12 * std::max(1.0, scale * scale);

  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= eps) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw Error(ErrorKind::DegenerateHull, "points are collinear");
  return hull;
}

inline double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross2(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline bool is_convex_ccw(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (cross2(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]) <= 0.0) return false;
  return polygon_area(poly) > 0.0;
}

/// Inside-or-on test for a convex CCW polygon, with an outward slack `tol`.
inline bool point_in_convex(std::span<const Vec2> poly, const Vec2& p, double tol = 0.0) {
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    Vec2 e = poly[(i + 1) % n] - poly[i];
    double len = e.norm();
    if (len == 0.0) continue;
    if (cross2(e, p - poly[i]) / len < -tol) return false;
  }
  return true;
}

inline double point_segment_distance_2d(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double l2 = ab.squaredNorm();
  double t = l2 > 0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

/// Sutherland-Hodgman clip of `subject` by the convex CCW polygon `clip`.
inline std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (std::size_t i = 0, n = clip.size(); i < n && !out.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % n];
    std::vector<Vec2> in = std::move(out);
    out.clear();
    for (std::size_t j = 0, m = in.size(); j < m; ++j) {
      const Vec2& p = in[j];
      const Vec2& q = in[(j + 1) % m];
      double sp = cross2(a, b, p);
      double sq = cross2(a, b, q);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

inline double convex_overlap_area(std::span<const Vec2> a, std::span<const Vec2> b) {
  auto c = clip_convex(a, b);
  return c.size() < 3 ? 0.0 : std::abs(polygon_area(c));
}

/// Parameter interval [t0, t1] of the line p + t*d inside the convex CCW
/// polygon grown outward by `tol` (each edge pushed out along its normal).
inline std::optional<std::pair<double, double>> clip_line_convex(std::span<const Vec2> poly, const Vec2& p,
                                                                 const Vec2& d, double tol) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    Vec2 e = poly[(i + 1) % n] - poly[i];
    double len = e.norm();
    if (len == 0.0) continue;
    Vec2 inward(-e.y() / len, e.x() / len);
    // inward . (x - a) + tol >= 0
    double num = inward.dot(p - poly[i]) + tol;
    double den = inward.dot(d);
    if (std::abs(den) < 1e-15) {
      if (num < 0) return std::nullopt;
      continue;
    }
    double t = -num / den;
    if (den > 0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

struct Rect2 {
  Vec2 center = Vec2::Zero();
  Vec2 axis_u = Vec2::UnitX();  // unit; axis_v is its CCW perpendicular
  Vec2 half = Vec2::Zero();
  double area() const { return 4.0 * half.x() * half.y(); }
  Vec2 axis_v() const { return {-axis_u.y(), axis_u.x()}; }
};

/// Minimum-area enclosing rectangle via rotating calipers: one side is always
/// flush with a hull edge, so testing every edge direction is exhaustive.
inline Rect2 min_area_rect(std::span<const Vec2> points) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "min_area_rect on empty set");
  std::vector<Vec2> hull;
  try {
    hull = convex_hull_2d(points);
  } catch (const Error&) {
    // Collinear or tiny input: fall back to the extreme points.
    hull.assign(points.begin(), points.end());
  }
  Rect2 best;
  double best_area = std::numeric_limits<double>::infinity();
  auto consider = [&](Vec2 u) {
    if (u.norm() < 1e-15) return;
    u.normalize();
    if (u.x() < 0 || (u.x() == 0 && u.y() < 0)) u = -u;
    Vec2 v(-u.y(), u.x());
    double lo_u = std::numeric_limits<double>::infinity(), hi_u = -lo_u, lo_v = lo_u, hi_v = -lo_u;
    for (const auto& p : hull) {
      lo_u = std::min(lo_u, p.dot(u));
      hi_u = std::max(hi_u, p.dot(u));
      lo_v = std::min(lo_v, p.dot(v));
      hi_v = std::max(hi_v, p.dot(v));
    }
    double area = (hi_u - lo_u) * (hi_v - lo_v);
    if (area < best_area - 1e-15) {
      best_area = area;
      best.axis_u = u;
      best.half = {0.5 * (hi_u - lo_u), 0.5 * (hi_v - lo_v)};
      best.center = 0.5 * (lo_u + hi_u) * u + 0.5 * (lo_v + hi_v) * v;
    }
  };
  consider(Vec2::UnitX());
  for (std::size_t i = 0, n = hull.size(); i < n; ++i) consider(hull[(i + 1) % n] - hull[i]);
  return best;
}

}  // namespace strata
