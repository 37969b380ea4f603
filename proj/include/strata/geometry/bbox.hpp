#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/polygon2d.hpp"
#include "strata/geometry/types.hpp"

namespace strata {

/// Ground-plane basis (e1, e2) with e1 x e2 = up.
inline std::pair<Vec3, Vec3> ground_basis(const GravityPrior& g) {
  PlaneFrame f = make_plane_frame(g.up(), Vec3::Zero(), g.up());
  return {f.u, f.v};
}

/// Gravity-aligned box around the hull vertices of `prims`. The horizontal
/// orientation is the minimum-area rectangle of the ground-projected vertices;
/// every half-extent is at least `min_half_extent` so flat objects keep a
/// non-degenerate box.
inline Bbox object_bbox(std::span<const PlanePrimitive> prims, const GravityPrior& g, double min_half_extent) {
  if (prims.empty()) throw Error(ErrorKind::EmptyInput, "object_bbox needs at least one primitive");
  auto [e1, e2] = ground_basis(g);
  std::vector<Vec2> ground;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : prims)
    for (const auto& v : p.hull) {
      ground.emplace_back(v.dot(e1), v.dot(e2));
      double h = g.height(v);
      lo = std::min(lo, h);
      hi = std::max(hi, h);
    }
  if (ground.empty()) throw Error(ErrorKind::EmptyInput, "primitives carry no hull vertices");

  Rect2 rect = min_area_rect(ground);
  Bbox box;
  Vec2 av = rect.axis_v();
  box.axes[0] = (rect.axis_u.x() * e1 + rect.axis_u.y() * e2).normalized();
  box.axes[1] = (av.x() * e1 + av.y() * e2).normalized();
  box.axes[2] = g.up();
  box.center = rect.center.x() * e1 + rect.center.y() * e2 + 0.5 * (lo + hi) * g.up();
  box.half_extents = {std::max(rect.half.x(), min_half_extent), std::max(rect.half.y(), min_half_extent),
                      std::max(0.5 * (hi - lo), min_half_extent)};
  return box;
}

}  // namespace strata
