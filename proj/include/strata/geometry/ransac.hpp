#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <unordered_map>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/core/log.hpp"
#include "strata/geometry/polygon2d.hpp"
#include "strata/geometry/types.hpp"

namespace strata {

struct RansacParams {
  double epsilon = 0.005;           // inlier band (m)
  int max_iterations = 1000;        // hypotheses per extracted plane
  std::size_t min_inliers_floor = 200;
  double min_inliers_fraction = 0.005;  // of the points still unexplained
  std::uint64_t seed = 0;
  double sample_radius = 0.05;      // second/third sample drawn near the first
  double cluster_cell = 0.01;       // grid cell for in-plane connectivity
  std::size_t score_subsample = 4000;
  double score_radius = 0.15;       // hypotheses are scored on points this close to the seed
  int candidates_to_verify = 3;
  int refit_iterations = 2;
  double theta_angle_deg = 10.0;
  Vec3 sensor_origin = Vec3::Zero();

  std::size_t min_inliers(std::size_t remaining) const {
    return std::max(min_inliers_floor, static_cast<std::size_t>(std::ceil(min_inliers_fraction * remaining)));
  }
};

namespace detail {

struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  double distance(const Vec3& p) const { return std::abs(normal.dot(p) + offset); }
};

inline std::int64_t cell_key(std::int64_t x, std::int64_t y, std::int64_t z = 0) {
  constexpr std::int64_t bias = 1 << 20;
  return ((x + bias) << 42) ^ ((y + bias) << 21) ^ (z + bias);
}

/// Total-least-squares plane through the given points. Returns false when the
/// points do not span a plane.
inline bool fit_plane_lsq(const std::vector<Vec3>& pts, const std::vector<std::uint32_t>& idx, Plane& out) {
  if (idx.size() < 3) return false;
  Vec3 c = Vec3::Zero();
  for (auto i : idx) c += pts[i];
  c /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : idx) {
    Vec3 d = pts[i] - c;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const auto& ev = es.eigenvalues();
  // Rank check: the two largest directions must both carry spread.
  if (!(ev[1] > 1e-14 * std::max(1.0, ev[2]))) return false;
  out.normal = es.eigenvectors().col(0).normalized();
  out.offset = -out.normal.dot(c);
  return true;
}

/// Connected pieces of `idx` in the plane's 2D frame. Cells link to their
/// 3x3 neighbourhood: pieces more than two cells apart never merge, so the
/// cell must exceed the sampling spacing.
inline std::vector<std::vector<std::uint32_t>> planar_components(const std::vector<Vec3>& pts,
                                                                 const std::vector<std::uint32_t>& idx,
                                                                 const Plane& plane, double cell) {
  PlaneFrame f = make_plane_frame(plane.normal, Vec3::Zero(), Vec3::UnitZ());
  std::unordered_map<std::int64_t, int> cell_of;
  std::vector<std::int64_t> keys(idx.size());
  std::vector<std::pair<std::int64_t, std::int64_t>> coords;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    Vec2 q = f.to_2d(pts[idx[k]]);
    auto cx = static_cast<std::int64_t>(std::floor(q.x() / cell));
    auto cy = static_cast<std::int64_t>(std::floor(q.y() / cell));
    keys[k] = cell_key(cx, cy);
    if (cell_of.emplace(keys[k], static_cast<int>(coords.size())).second) coords.emplace_back(cx, cy);
  }
  std::vector<int> parent(coords.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t c = 0; c < coords.size(); ++c) {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        auto it = cell_of.find(cell_key(coords[c].first + dx, coords[c].second + dy));
        if (it == cell_of.end()) continue;
        int ra = find(static_cast<int>(c)), rb = find(it->second);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
  }
  std::unordered_map<int, std::size_t> comp_index;
  std::vector<std::vector<std::uint32_t>> comps;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    int root = find(cell_of.at(keys[k]));
    auto [it, fresh] = comp_index.emplace(root, comps.size());
    if (fresh) comps.emplace_back();
    comps[it->second].push_back(idx[k]);
  }
  return comps;
}

inline std::vector<std::uint32_t> inliers_of(const std::vector<Vec3>& pts, const std::vector<std::uint32_t>& active,
                                             const Plane& plane, double eps) {
  std::vector<std::uint32_t> out;
  for (auto i : active)
    if (plane.distance(pts[i]) <= eps) out.push_back(i);
  return out;
}

inline const std::vector<std::uint32_t>& largest(const std::vector<std::vector<std::uint32_t>>& comps) {
  static const std::vector<std::uint32_t> none;
  const std::vector<std::uint32_t>* best = &none;
  for (const auto& c : comps)
    if (c.size() > best->size()) best = &c;
  return *best;
}

}  // namespace detail

/// Builds a primitive from points assumed to lie on `normal.x + offset = 0`:
/// snaps them to the plane, orients the normal, computes the CCW hull.
/// Throws DegenerateHull when the projected points are collinear.
inline PlanePrimitive make_primitive(const std::vector<Vec3>& pts, std::vector<std::uint32_t> inliers, Vec3 normal,
                                     double offset, const GravityPrior& g, double theta_angle_deg,
                                     const Vec3& sensor_origin) {
  PlanePrimitive prim;
  Vec3 c = Vec3::Zero();
  for (auto i : inliers) c += pts[i];
  c /= static_cast<double>(std::max<std::size_t>(1, inliers.size()));

  prim.is_horizontal = is_horizontal_normal(normal, g, theta_angle_deg);
  bool flip = prim.is_horizontal ? normal.dot(g.up()) < 0 : normal.dot(sensor_origin - c) < 0;
  if (flip) {
    normal = -normal;
    offset = -offset;
  }
  prim.normal = normal;
  prim.offset = offset;
  prim.centroid = prim.project(c);

  PlaneFrame f = make_plane_frame(prim.normal, prim.centroid, g.up());
  std::vector<Vec2> q;
  q.reserve(inliers.size());
  for (auto i : inliers) q.push_back(f.to_2d(pts[i]));
  auto h = convex_hull_2d(q);
  prim.hull.reserve(h.size());
  for (const auto& v : h) prim.hull.push_back(f.to_3d(v));
  prim.inliers = std::move(inliers);
  return prim;
}

/// Polygon-defined primitive (fixtures, tests, deserialization): fits the
/// plane to `vertices`, projects them and takes their hull.
inline PlanePrimitive make_polygon_primitive(int id, const std::vector<Vec3>& vertices, const GravityPrior& g,
                                             double theta_angle_deg, const Vec3& sensor_origin = Vec3::Zero()) {
  std::vector<std::uint32_t> idx(vertices.size());
  std::iota(idx.begin(), idx.end(), 0u);
  detail::Plane plane;
  if (!detail::fit_plane_lsq(vertices, idx, plane)) throw Error(ErrorKind::DegenerateHull, "polygon vertices do not span a plane");
  auto prim = make_primitive(vertices, idx, plane.normal, plane.offset, g, theta_angle_deg, sensor_origin);
  prim.inliers.clear();
  prim.id = id;
  return prim;
}

/// Iterative fit-and-remove RANSAC. Hypotheses draw their second and third
/// points near the first so small faces in cluttered scenes are still sampled;
/// each accepted plane keeps only its largest connected inlier patch, leaving
/// coplanar faces elsewhere in the pool for later rounds.
inline std::vector<PlanePrimitive> fit_planes_ransac(const PointCloud& cloud, const GravityPrior& g,
                                                     const RansacParams& params) {
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "point cloud has no points");
  const auto& pts = cloud.points;
  for (const auto& p : pts)
    if (!p.allFinite()) throw Error(ErrorKind::Precondition, "point cloud contains non-finite coordinates");

  std::mt19937_64 rng(params.seed);
  std::vector<char> alive(pts.size(), 1);
  std::vector<std::uint32_t> active(pts.size());
  std::iota(active.begin(), active.end(), 0u);

  const double r = params.sample_radius;
  auto voxel = [&](const Vec3& p) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x() / r)),
                                       static_cast<std::int64_t>(std::floor(p.y() / r)),
                                       static_cast<std::int64_t>(std::floor(p.z() / r))};
  };
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells;
  auto rebuild_cells = [&] {
    cells.clear();
    for (auto i : active) {
      auto v = voxel(pts[i]);
      cells[detail::cell_key(v[0], v[1], v[2])].push_back(i);
    }
  };
  rebuild_cells();

  struct Hypothesis {
    std::size_t score = 0;
    int iteration = 0;
    detail::Plane plane;
  };

  std::vector<PlanePrimitive> result;
  while (true) {
    const std::size_t min_in = params.min_inliers(active.size());
    if (active.size() < std::max<std::size_t>(3, min_in)) break;

    std::vector<std::uint32_t> subsample;
    const std::size_t stride = std::max<std::size_t>(1, active.size() / std::max<std::size_t>(1, params.score_subsample));
    for (std::size_t k = 0; k < active.size(); k += stride) subsample.push_back(active[k]);
    const double scale = static_cast<double>(active.size()) / static_cast<double>(subsample.size());

    std::vector<Hypothesis> top;
    std::uniform_int_distribution<std::size_t> pick_active(0, active.size() - 1);
    std::uniform_int_distribution<int> pick_offset(-1, 1);
    for (int it = 0; it < params.max_iterations; ++it) {
      const std::uint32_t i1 = active[pick_active(rng)];
      const Vec3& p1 = pts[i1];
      auto v1 = voxel(p1);
      std::uint32_t nb[2];
      int found = 0;
      for (int tries = 0; tries < 24 && found < 2; ++tries) {
        auto it_cell = cells.find(detail::cell_key(v1[0] + pick_offset(rng), v1[1] + pick_offset(rng), v1[2] + pick_offset(rng)));
        if (it_cell == cells.end()) continue;
        const auto& bucket = it_cell->second;
        std::uniform_int_distribution<std::size_t> pick(0, bucket.size() - 1);
        std::uint32_t c = bucket[pick(rng)];
        if (c == i1 || (found == 1 && c == nb[0]) || (pts[c] - p1).norm() > r) continue;
        nb[found++] = c;
      }
      if (found < 2) continue;
      Vec3 n = (pts[nb[0]] - p1).cross(pts[nb[1]] - p1);
      double len = n.norm();
      if (len < 1e-12) continue;
      detail::Plane h{n / len, 0.0};
      h.offset = -h.normal.dot(p1);
      // Support is counted near the seed only: a global count favours
      // horizontal slabs that graze the sides of every box at once.
      const double r2 = params.score_radius * params.score_radius;
      std::size_t score = 0;
      for (auto s : subsample) score += h.distance(pts[s]) <= params.epsilon && (pts[s] - p1).squaredNorm() <= r2;
      Hypothesis hyp{score, it, h};
      auto pos = std::find_if(top.begin(), top.end(), [&](const Hypothesis& o) { return hyp.score > o.score; });
      top.insert(pos, hyp);
      if (static_cast<int>(top.size()) > params.candidates_to_verify) top.pop_back();
    }
    if (top.empty()) break;
    if (static_cast<double>(top.front().score) * scale < static_cast<double>(min_in)) break;

    std::vector<std::uint32_t> best_pts;
    detail::Plane best_plane;
    for (const auto& hyp : top) {
      detail::Plane plane = hyp.plane;
      auto patch = detail::largest(detail::planar_components(pts, detail::inliers_of(pts, active, plane, params.epsilon),
                                                             plane, params.cluster_cell));
      for (int k = 0; k < params.refit_iterations && patch.size() >= 3; ++k) {
        detail::Plane refit;
        if (!detail::fit_plane_lsq(pts, patch, refit)) break;
        auto comps = detail::planar_components(pts, detail::inliers_of(pts, active, refit, params.epsilon), refit,
                                               params.cluster_cell);
        // Follow the piece that still contains most of the previous patch.
        std::vector<char> mark(pts.size(), 0);
        for (auto i : patch) mark[i] = 1;
        const std::vector<std::uint32_t>* follow = nullptr;
        std::size_t best_overlap = 0;
        for (const auto& c : comps) {
          std::size_t ov = 0;
          for (auto i : c) ov += mark[i];
          if (ov > best_overlap) {
            best_overlap = ov;
            follow = &c;
          }
        }
        if (!follow) break;
        plane = refit;
        patch = *follow;
      }
      if (patch.size() > best_pts.size()) {
        best_pts = patch;
        best_plane = plane;
      }
    }
    if (best_pts.size() < min_in) break;

    std::sort(best_pts.begin(), best_pts.end());
    try {
      result.push_back(make_primitive(pts, best_pts, best_plane.normal, best_plane.offset, g, params.theta_angle_deg,
                                      params.sensor_origin));
    } catch (const Error&) {
      log::debug("ransac: dropped degenerate patch of ", best_pts.size(), " points");
    }
    for (auto i : best_pts) alive[i] = 0;
    std::erase_if(active, [&](std::uint32_t i) { return !alive[i]; });
    rebuild_cells();
  }

  std::stable_sort(result.begin(), result.end(),
                   [](const PlanePrimitive& a, const PlanePrimitive& b) { return a.inliers.size() > b.inliers.size(); });
  for (std::size_t k = 0; k < result.size(); ++k) result[k].id = static_cast<int>(k);
  log::info("ransac: extracted ", result.size(), " planes, ", active.size(), " points unexplained");
  return result;
}

}  // namespace strata
