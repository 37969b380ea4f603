#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "strata/geometry/polygon2d.hpp"
#include "strata/geometry/types.hpp"

// Distances and intersections between planar convex polygons in 3D.
namespace strata {

struct Segment3 {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double length() const { return (b - a).norm(); }
};

inline std::vector<Vec2> hull_2d(const PlanePrimitive& prim, const PlaneFrame& frame) {
  std::vector<Vec2> out;
  out.reserve(prim.hull.size());
  for (const auto& p : prim.hull) out.push_back(frame.to_2d(p));
  return out;
}

inline double hull_area(const PlanePrimitive& prim, const Vec3& up) {
  auto poly = hull_2d(prim, prim.frame(up));
  return std::abs(polygon_area(poly));
}

inline double hull_diameter(const PlanePrimitive& prim) {
  double d = 0.0;
  for (std::size_t i = 0; i < prim.hull.size(); ++i)
    for (std::size_t j = i + 1; j < prim.hull.size(); ++j) d = std::max(d, (prim.hull[i] - prim.hull[j]).norm());
  return d;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double l2 = ab.squaredNorm();
  double t = l2 > 0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

/// Closest distance between segments [p1,q1] and [p2,q2] (Ericson, RTCD 5.1.9).
inline double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  constexpr double tiny = 1e-30;
  double s = 0.0, t = 0.0;
  if (a <= tiny && e <= tiny) return r.norm();
  if (a <= tiny) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= tiny) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > tiny ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + s * d1) - (p2 + t * d2)).norm();
}

/// Distance from a point to the filled convex polygon of `prim`.
inline double point_polygon_distance(const Vec3& p, const PlanePrimitive& prim, const PlaneFrame& frame,
                                     const std::vector<Vec2>& poly2) {
  Vec2 q = frame.to_2d(p);
  double h = std::abs(prim.signed_distance(p));
  if (point_in_convex(poly2, q)) return h;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = prim.hull.size(); i < n; ++i)
    best = std::min(best, point_segment_distance(p, prim.hull[i], prim.hull[(i + 1) % n]));
  return best;
}

/// Whether segment [a,b] touches the filled polygon of `prim` (crossing its plane inside it).
inline bool segment_hits_polygon(const Vec3& a, const Vec3& b, const PlanePrimitive& prim, const PlaneFrame& frame,
                                 const std::vector<Vec2>& poly2) {
  double da = prim.signed_distance(a), db = prim.signed_distance(b);
  if ((da > 0 && db > 0) || (da < 0 && db < 0)) return false;
  if (da == db) return false;  // lies in the plane; covered by the coplanar distance terms
  double t = da / (da - db);
  Vec3 x = a + t * (b - a);
  return point_in_convex(poly2, frame.to_2d(x));
}

/// Exact minimum Euclidean distance between the two hull polygons (0 when they meet).
inline double primitive_distance(const PlanePrimitive& a, const PlanePrimitive& b) {
  if (a.hull.size() < 3 || b.hull.size() < 3) throw Error(ErrorKind::DegenerateHull, "primitive_distance on invalid hull");
  const Vec3 up = Vec3::UnitZ();  // frames only need to be consistent per call
  const PlaneFrame fa = a.frame(up), fb = b.frame(up);
  const auto pa = hull_2d(a, fa), pb = hull_2d(b, fb);
  const std::size_t na = a.hull.size(), nb = b.hull.size();

  for (std::size_t i = 0; i < na; ++i)
    if (segment_hits_polygon(a.hull[i], a.hull[(i + 1) % na], b, fb, pb)) return 0.0;
  for (std::size_t j = 0; j < nb; ++j)
    if (segment_hits_polygon(b.hull[j], b.hull[(j + 1) % nb], a, fa, pa)) return 0.0;

  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : a.hull) best = std::min(best, point_polygon_distance(v, b, fb, pb));
  for (const auto& v : b.hull) best = std::min(best, point_polygon_distance(v, a, fa, pa));
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      best = std::min(best, segment_segment_distance(a.hull[i], a.hull[(i + 1) % na], b.hull[j], b.hull[(j + 1) % nb]));
  return best;
}

/// Moves `p` onto the plane of `prim` along gravity, or orthogonally when the
/// plane is too steep for a vertical projection to be stable.
inline Vec3 project_along_gravity(const Vec3& p, const PlanePrimitive& prim, const GravityPrior& g) {
  double nu = prim.normal.dot(g.up());
  if (std::abs(nu) < 0.1) return prim.project(p);
  return p - (prim.signed_distance(p) / nu) * g.up();
}

/// Line/hull chord for a contact segment. t is the parameter along q1 + t (q2 - q1):
/// q1 sits at t = 0 and q2 at t = 1.
struct Chord {
  double t0 = 0.0;
  double t1 = 0.0;
  Vec3 p1 = Vec3::Zero();
  Vec3 p2 = Vec3::Zero();
  double length = 0.0;  // |p1 p2|
};

/// Intersects the supporting line of `seg` (after projecting it onto the plane
/// of `prim`) with the hull, tolerating `eps` of boundary slack. The chord is
/// clamped to the hull's own extent along the line so the slack never
/// lengthens a chord that runs along a hull edge.
inline std::optional<Chord> hull_chord(const Segment3& seg, const PlanePrimitive& prim, const GravityPrior& g,
                                       double eps) {
  const PlaneFrame frame = prim.frame(g.up());
  const auto poly = hull_2d(prim, frame);
  const Vec2 q1 = frame.to_2d(project_along_gravity(seg.a, prim, g));
  const Vec2 q2 = frame.to_2d(project_along_gravity(seg.b, prim, g));
  const Vec2 d = q2 - q1;
  const double l2 = d.squaredNorm();
  if (l2 < 1e-18) return std::nullopt;

  auto iv = clip_line_convex(poly, q1, d, eps);
  if (!iv) return std::nullopt;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& v : poly) {
    double t = (v - q1).dot(d) / l2;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  double t0 = std::max(iv->first, lo), t1 = std::min(iv->second, hi);
  if (t0 > t1) return std::nullopt;
  Chord c;
  c.t0 = t0;
  c.t1 = t1;
  c.p1 = frame.to_3d(q1 + t0 * d);
  c.p2 = frame.to_3d(q1 + t1 * d);
  c.length = (t1 - t0) * std::sqrt(l2);
  return c;
}

/// The 0, 1 or 2 points where the (projected) supporting line of `seg` meets
/// the hull boundary, ordered along the segment direction.
inline std::vector<Vec3> segment_hull_intersections(const Segment3& seg, const PlanePrimitive& prim,
                                                    const GravityPrior& g, double eps_proj) {
  auto c = hull_chord(seg, prim, g, eps_proj);
  if (!c) return {};
  if (c->length < 1e-9) return {c->p1};
  return {c->p1, c->p2};
}

}  // namespace strata
