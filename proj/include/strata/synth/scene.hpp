#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/bbox.hpp"
#include "strata/geometry/ransac.hpp"
#include "strata/geometry/polygon2d.hpp"
#include "strata/geometry/types.hpp"
#include "strata/support/hierarchy.hpp"

namespace strata {

/// Pinhole camera looking from `eye` at `target`, z up. Pixel rows grow downward.
struct Camera {
  Vec3 eye{0.0, -1.0, 0.9};
  Vec3 target{0.0, 0.0, 0.05};
  int width = 320;
  int height = 240;
  double fx = 290.0;
  double fy = 290.0;
  double cx = 159.5;
  double cy = 119.5;

  // camera axes: x right, y down, z forward
  std::array<Vec3, 3> axes() const {
    Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(Vec3::UnitZ());
    if (x.norm() < 1e-9) x = Vec3::UnitX();
    x.normalize();
    Vec3 y = z.cross(x);
    return {x, y, z};
  }

  struct Projection {
    double u = 0.0;  // column
    double v = 0.0;  // row
    double depth = 0.0;
  };

  std::optional<Projection> project(const Vec3& p) const {
    auto [x, y, z] = axes();
    Vec3 d = p - eye;
    double zc = d.dot(z);
    if (zc <= 1e-6) return std::nullopt;
    return Projection{fx * d.dot(x) / zc + cx, fy * d.dot(y) / zc + cy, zc};
  }
};

struct SynthBox {
  Vec2 center = Vec2::Zero();
  double base = 0.0;  // bottom height
  Vec3 size = Vec3::Constant(0.1);
  double yaw = 0.0;
  int supporter = -1;  // index of the box below, -1 for the table
  int depth = 1;       // position in its tower

  Vec2 axis_u() const { return {std::cos(yaw), std::sin(yaw)}; }
  Vec2 axis_v() const { return {-std::sin(yaw), std::cos(yaw)}; }
  double top() const { return base + size.z(); }

  /// Footprint corners, CCW.
  std::vector<Vec2> footprint(double shrink = 0.0) const {
    Vec2 a = (0.5 * size.x() - shrink) * axis_u(), b = (0.5 * size.y() - shrink) * axis_v();
    return {center - a - b, center + a - b, center + a + b, center - a + b};
  }

  bool contains(const Vec3& p, double tol) const {
    Vec2 d = Vec2(p.x(), p.y()) - center;
    return std::abs(d.dot(axis_u())) <= 0.5 * size.x() + tol && std::abs(d.dot(axis_v())) <= 0.5 * size.y() + tol &&
           p.z() >= base - tol && p.z() <= top() + tol;
  }
};

struct SceneSpec {
  double table_x = 0.9;
  double table_y = 0.7;
  int min_objects = 4;
  int max_objects = 8;
  double stack_probability = 0.35;
  int max_stack_depth = 3;  // boxes in one tower
  double footprint_min = 0.08;
  double footprint_max = 0.18;
  double height_min = 0.08;
  double height_max = 0.16;
  double max_yaw_deg = 90.0;
  double stack_yaw_jitter_deg = 15.0;
  double clearance = 0.04;
  double table_inset = 0.05;
  double stack_inset = 0.03;   // keeps stacked walls out of adjacency range of the walls below
  double spacing = 0.004;      // surface sampling grid
  double noise_sigma = 0.001;
  std::size_t max_points = 200000;
  int max_retries = 200;
  bool occlusion = false;
  double occlusion_resolution_deg = 0.1;
  double occlusion_tolerance = 0.01;
  Camera camera;
  std::uint64_t seed = 0;
  std::vector<SynthBox> fixed_boxes;  // when set, used as given instead of random placement
};

/// One sampled planar face of the scene.
struct SynthFace {
  int object = 0;  // 1 = table, boxes 2..
  std::vector<Vec3> polygon;
  Vec3 normal = Vec3::UnitZ();
};

struct GroundTruth {
  std::vector<int> point_primitive;  // face index per point
  std::vector<int> point_object;     // object id per point (1 = table)
  std::vector<SynthFace> faces;
  std::vector<SynthBox> boxes;       // object id of boxes[i] is i + 2
  std::vector<std::pair<int, int>> support;  // (from, to), 0 = root, sorted
  int ground_object = 1;
  double table_x = 0.9;
  double table_y = 0.7;

  int object_count() const { return static_cast<int>(boxes.size()) + 1; }
};

namespace detail {

inline double rect_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (convex_overlap_area(a, b) > 0.0) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (const auto& p : b) d = std::min(d, point_segment_distance_2d(p, a[i], a[(i + 1) % a.size()]));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (const auto& p : a) d = std::min(d, point_segment_distance_2d(p, b[i], b[(i + 1) % b.size()]));
  return d;
}

inline bool inside_rect(const std::vector<Vec2>& outer, const std::vector<Vec2>& inner) {
  for (const auto& p : inner)
    if (!point_in_convex(outer, p)) return false;
  return true;
}

inline std::vector<SynthFace> box_faces(const SynthBox& b, int object) {
  std::vector<SynthFace> faces;
  auto fp = b.footprint();
  auto lift = [](const Vec2& q, double z) { return Vec3(q.x(), q.y(), z); };
  SynthFace top{object, {}, Vec3::UnitZ()};
  for (const auto& q : fp) top.polygon.push_back(lift(q, b.top()));
  faces.push_back(top);
  for (int k = 0; k < 4; ++k) {
    const Vec2& a = fp[k];
    const Vec2& c = fp[(k + 1) % 4];
    Vec2 e = c - a;
    SynthFace side{object, {lift(a, b.base), lift(c, b.base), lift(c, b.top()), lift(a, b.top())},
                   Vec3(e.y(), -e.x(), 0).normalized()};
    faces.push_back(side);
  }
  return faces;
}

inline bool ray_box(const Vec3& o, const Vec3& d, const SynthBox& b, double& t_hit) {
  Vec2 oc = Vec2(o.x(), o.y()) - b.center;
  Vec3 lo(-0.5 * b.size.x(), -0.5 * b.size.y(), b.base), hi(0.5 * b.size.x(), 0.5 * b.size.y(), b.top());
  Vec3 ol(oc.dot(b.axis_u()), oc.dot(b.axis_v()), o.z());
  Vec2 dh(d.x(), d.y());
  Vec3 dl(dh.dot(b.axis_u()), dh.dot(b.axis_v()), d.z());
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dl[k]) < 1e-15) {
      if (ol[k] < lo[k] || ol[k] > hi[k]) return false;
      continue;
    }
    double a = (lo[k] - ol[k]) / dl[k], c = (hi[k] - ol[k]) / dl[k];
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
    if (t0 > t1) return false;
  }
  t_hit = t0;
  return true;
}

}  // namespace detail

/// Distance along the unit ray (o, d) to the first scene surface.
inline double ray_cast_scene(const GroundTruth& gt, const Vec3& o, const Vec3& d) {
  double best = std::numeric_limits<double>::infinity();
  if (std::abs(d.z()) > 1e-15) {
    double t = -o.z() / d.z();
    Vec3 p = o + t * d;
    if (t > 0 && std::abs(p.x()) <= 0.5 * gt.table_x && std::abs(p.y()) <= 0.5 * gt.table_y) best = t;
  }
  for (const auto& b : gt.boxes) {
    double t;
    if (detail::ray_box(o, d, b, t)) best = std::min(best, t);
  }
  return best;
}

/// Removes points hidden from the camera eye. Directions are binned by
/// azimuth/elevation at `resolution_deg`; each bin's depth is the analytic
/// ray cast through its center, and a point survives when it is no farther
/// than that depth plus `tolerance`.
inline std::pair<PointCloud, GroundTruth> render_occlusion(const PointCloud& cloud, const GroundTruth& gt, const Vec3& eye,
                                                           double resolution_deg, double tolerance) {
  const double step = resolution_deg * M_PI / 180.0;
  std::unordered_map<std::int64_t, double> depth;
  PointCloud out;
  GroundTruth g = gt;
  g.point_primitive.clear();
  g.point_object.clear();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    Vec3 d = cloud.points[i] - eye;
    double r = d.norm();
    double az = std::atan2(d.y(), d.x()), el = std::asin(std::clamp(d.z() / r, -1.0, 1.0));
    auto ia = static_cast<std::int64_t>(std::floor(az / step)), ie = static_cast<std::int64_t>(std::floor(el / step));
    std::int64_t key = (ia << 32) ^ (ie & 0xffffffff);
    auto it = depth.find(key);
    if (it == depth.end()) {
      double ca = (ia + 0.5) * step, ce = (ie + 0.5) * step;
      Vec3 dir(std::cos(ce) * std::cos(ca), std::cos(ce) * std::sin(ca), std::sin(ce));
      it = depth.emplace(key, ray_cast_scene(gt, eye, dir)).first;
    }
    if (r <= it->second + tolerance) {
      out.points.push_back(cloud.points[i]);
      if (!cloud.colors.empty()) out.colors.push_back(cloud.colors[i]);
      g.point_primitive.push_back(gt.point_primitive[i]);
      g.point_object.push_back(gt.point_object[i]);
    }
  }
  return {out, g};
}

/// Table plus stacked or free-standing boxes, sampled on every visible face
/// (tops and sides, never bottoms), with Gaussian noise along face normals
/// added after the labels are fixed. Deterministic per seed.
inline std::pair<PointCloud, GroundTruth> generate_scene(const SceneSpec& spec) {
  if (!(spec.table_x > 0 && spec.table_y > 0 && spec.footprint_min > 0 && spec.footprint_max >= spec.footprint_min &&
        spec.height_min > 0 && spec.height_max >= spec.height_min && spec.spacing > 0 && spec.min_objects >= 0 &&
        spec.max_objects >= spec.min_objects))
    throw Error(ErrorKind::Precondition, "invalid scene spec");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  const int count = spec.min_objects + static_cast<int>(rng() % static_cast<std::uint64_t>(spec.max_objects - spec.min_objects + 1));

  GroundTruth gt;
  gt.table_x = spec.table_x;
  gt.table_y = spec.table_y;
  const std::vector<Vec2> table_area{{-0.5 * spec.table_x + spec.table_inset, -0.5 * spec.table_y + spec.table_inset},
                                     {0.5 * spec.table_x - spec.table_inset, -0.5 * spec.table_y + spec.table_inset},
                                     {0.5 * spec.table_x - spec.table_inset, 0.5 * spec.table_y - spec.table_inset},
                                     {-0.5 * spec.table_x + spec.table_inset, 0.5 * spec.table_y - spec.table_inset}};

  auto clear_of_others = [&](const SynthBox& b) {
    auto fp = b.footprint();
    for (const auto& o : gt.boxes) {
      bool overlap_z = std::min(b.top(), o.top()) > std::max(b.base, o.base) + 1e-9;
      if (overlap_z && detail::rect_distance(fp, o.footprint()) < spec.clearance) return false;
    }
    return true;
  };

  if (!spec.fixed_boxes.empty()) {
    for (std::size_t i = 0; i < spec.fixed_boxes.size(); ++i) {
      const auto& b = spec.fixed_boxes[i];
      if (b.supporter >= static_cast<int>(i) || b.size.minCoeff() <= 0)
        throw Error(ErrorKind::Precondition, "fixed boxes need positive sizes and earlier supporters");
    }
    gt.boxes = spec.fixed_boxes;
  }
  for (int i = 0; i < (spec.fixed_boxes.empty() ? count : 0); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      SynthBox b;
      // footprints shrink toward the minimum as attempts run out
      const double fmax = spec.footprint_min + (spec.footprint_max - spec.footprint_min) *
                                                   std::max(0.0, 1.0 - 2.0 * attempt / spec.max_retries);
      b.size = {uni(spec.footprint_min, fmax), uni(spec.footprint_min, fmax), uni(spec.height_min, spec.height_max)};
      int sup = -1;
      if (u01(rng) < spec.stack_probability) {
        std::vector<int> hosts;
        for (std::size_t k = 0; k < gt.boxes.size(); ++k) {
          const SynthBox& s = gt.boxes[k];
          if (s.depth < spec.max_stack_depth && std::min(s.size.x(), s.size.y()) - 2 * spec.stack_inset >= spec.footprint_min)
            hosts.push_back(static_cast<int>(k));
        }
        if (!hosts.empty()) sup = hosts[rng() % hosts.size()];
      }
      if (sup >= 0) {
        const SynthBox& s = gt.boxes[sup];
        const double room_x = s.size.x() - 2 * spec.stack_inset, room_y = s.size.y() - 2 * spec.stack_inset;
        if (room_x < spec.footprint_min || room_y < spec.footprint_min) continue;
        b.size.x() = uni(spec.footprint_min, room_x);
        b.size.y() = uni(spec.footprint_min, room_y);
        b.yaw = s.yaw + uni(-1, 1) * spec.stack_yaw_jitter_deg * M_PI / 180.0;
        b.center = s.center + uni(-0.5, 0.5) * (room_x - b.size.x()) * s.axis_u() + uni(-0.5, 0.5) * (room_y - b.size.y()) * s.axis_v();
        b.base = s.top();
        b.supporter = sup;
        b.depth = s.depth + 1;
        if (!detail::inside_rect(s.footprint(spec.stack_inset), b.footprint())) continue;
      } else {
        b.yaw = uni(0, spec.max_yaw_deg) * M_PI / 180.0;
        b.center = {uni(table_area[0].x(), table_area[2].x()), uni(table_area[0].y(), table_area[2].y())};
        b.base = 0.0;
        if (!detail::inside_rect(table_area, b.footprint())) continue;
      }
      if (!clear_of_others(b)) continue;
      gt.boxes.push_back(b);
      placed = true;
    }
    if (!placed)
      throw Error(ErrorKind::Generation, "could not place box " + std::to_string(i + 1) + " of " + std::to_string(count) +
                                             " after " + std::to_string(spec.max_retries) + " tries (seed " +
                                             std::to_string(spec.seed) + ")");
  }

  // faces: table first, then 5 per box
  gt.faces.push_back({1,
                      {{-0.5 * spec.table_x, -0.5 * spec.table_y, 0},
                       {0.5 * spec.table_x, -0.5 * spec.table_y, 0},
                       {0.5 * spec.table_x, 0.5 * spec.table_y, 0},
                       {-0.5 * spec.table_x, 0.5 * spec.table_y, 0}},
                      Vec3::UnitZ()});
  for (std::size_t b = 0; b < gt.boxes.size(); ++b)
    for (auto& f : detail::box_faces(gt.boxes[b], static_cast<int>(b) + 2)) gt.faces.push_back(std::move(f));

  gt.support.emplace_back(0, 1);
  for (std::size_t b = 0; b < gt.boxes.size(); ++b)
    gt.support.emplace_back(gt.boxes[b].supporter < 0 ? 1 : gt.boxes[b].supporter + 2, static_cast<int>(b) + 2);
  std::sort(gt.support.begin(), gt.support.end());

  PointCloud cloud;
  std::uniform_real_distribution<double> jitter(-0.2 * spec.spacing, 0.2 * spec.spacing);
  std::vector<double> offsets;
  for (std::size_t f = 0; f < gt.faces.size(); ++f) {
    const auto& face = gt.faces[f];
    const Vec3 o = face.polygon[0];
    const Vec3 e1 = face.polygon[1] - o, e2 = face.polygon[3] - o;
    const double l1 = e1.norm(), l2 = e2.norm();
    const Vec3 a1 = e1 / l1, a2 = e2 / l2;
    for (double s = 0.5 * spec.spacing; s < l1; s += spec.spacing)
      for (double t = 0.5 * spec.spacing; t < l2; t += spec.spacing) {
        double js = std::clamp(s + jitter(rng), 0.0, l1), jt = std::clamp(t + jitter(rng), 0.0, l2);
        Vec3 p = o + js * a1 + jt * a2;
        bool hidden = false;
        for (std::size_t b = 0; b < gt.boxes.size() && !hidden; ++b)
          if (static_cast<int>(b) + 2 != face.object && gt.boxes[b].contains(p, 0.001)) hidden = true;
        if (hidden) continue;
        cloud.points.push_back(p);
        gt.point_primitive.push_back(static_cast<int>(f));
        gt.point_object.push_back(face.object);
      }
  }
  if (cloud.size() > spec.max_points) {
    const double stride = static_cast<double>(cloud.size()) / static_cast<double>(spec.max_points);
    PointCloud keep;
    GroundTruth g2 = gt;
    g2.point_primitive.clear();
    g2.point_object.clear();
    for (std::size_t k = 0; k < spec.max_points; ++k) {
      auto i = static_cast<std::size_t>(k * stride);
      keep.points.push_back(cloud.points[i]);
      g2.point_primitive.push_back(gt.point_primitive[i]);
      g2.point_object.push_back(gt.point_object[i]);
    }
    cloud = std::move(keep);
    gt = std::move(g2);
  }
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  if (spec.noise_sigma > 0)
    for (std::size_t i = 0; i < cloud.size(); ++i) cloud.points[i] += noise(rng) * gt.faces[gt.point_primitive[i]].normal;

  if (spec.occlusion)
    return render_occlusion(cloud, gt, spec.camera.eye, spec.occlusion_resolution_deg, spec.occlusion_tolerance);
  return {cloud, gt};
}

/// Two boxes stacked at the table centre: root -> table -> box -> box.
inline SceneSpec two_box_spec(std::uint64_t seed = 0) {
  SceneSpec spec;
  spec.seed = seed;
  SynthBox lower;
  lower.size = {0.18, 0.16, 0.10};
  lower.yaw = 0.3;
  SynthBox upper;
  upper.size = {0.10, 0.09, 0.08};
  upper.yaw = 0.4;
  upper.base = lower.top();
  upper.supporter = 0;
  upper.depth = 2;
  spec.fixed_boxes = {lower, upper};
  return spec;
}

/// Ground-truth scene hierarchy graph: one object per box plus the table.
inline SceneHierarchyGraph ground_truth_hierarchy(const GroundTruth& gt, const GravityPrior& g = GravityPrior{}) {
  SceneHierarchyGraph h;
  for (int id = 1; id <= gt.object_count(); ++id) {
    SceneObject o;
    o.id = id;
    o.contains_ground = id == gt.ground_object;
    std::vector<PlanePrimitive> members;
    for (std::size_t f = 0; f < gt.faces.size(); ++f)
      if (gt.faces[f].object == id) {
        o.primitive_ids.push_back(static_cast<int>(f));
        members.push_back(make_polygon_primitive(static_cast<int>(f), gt.faces[f].polygon, g, 10.0));
      }
    o.bbox = object_bbox(members, g, 0.005);
    h.objects.push_back(o);
  }
  for (auto [from, to] : gt.support)
    h.edges.push_back({from, to, from == 0 ? SupportPhase::Root : SupportPhase::Local, 1.0});
  return h;
}

/// Object-id label image seen by `cam`: every point splats a 3x3 pixel block
/// through a depth test. Points with label <= 0 are ignored.
inline std::vector<int> render_label_mask(const PointCloud& cloud, const std::vector<int>& labels, const Camera& cam) {
  if (labels.size() != cloud.size()) throw Error(ErrorKind::Shape, "label count does not match point count");
  std::vector<int> mask(static_cast<std::size_t>(cam.width) * cam.height, 0);
  std::vector<double> zbuf(mask.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (labels[i] <= 0) continue;
    auto pr = cam.project(cloud.points[i]);
    if (!pr) continue;
    const int cu = static_cast<int>(std::lround(pr->u)), cv = static_cast<int>(std::lround(pr->v));
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        int u = cu + du, v = cv + dv;
        if (u < 0 || v < 0 || u >= cam.width || v >= cam.height) continue;
        std::size_t k = static_cast<std::size_t>(v) * cam.width + u;
        // the center pixel wins ties against splats from farther points
        double z = pr->depth + (du != 0 || dv != 0 ? 1e-4 : 0.0);
        if (z < zbuf[k]) {
          zbuf[k] = z;
          mask[k] = labels[i];
        }
      }
  }
  return mask;
}

}  // namespace strata
