#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "strata/core/log.hpp"
#include "strata/pipeline/config.hpp"

namespace strata {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Everything one scene produces, in pipeline order.
struct SceneResult {
  std::vector<PlanePrimitive> primitives;
  PatternGraph patterns;
  QipInstance qip;
  LabelAssignment assignment;  // indexed like patterns.nodes
  SceneHierarchyGraph hierarchy;
  std::vector<StageTiming> timings;
};

namespace detail {

template <class F>
auto timed(std::vector<StageTiming>& out, const char* stage, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = f();
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.push_back({stage, s});
  log::info("stage ", stage, " took ", s, " s");
  return r;
}

}  // namespace detail

inline std::vector<PlanePrimitive> stage_extract(const PointCloud& cloud, const PipelineConfig& cfg) {
  return fit_planes_ransac(cloud, cfg.gravity_prior(), cfg.ransac());
}

inline PatternGraph stage_patterns(std::span<const PlanePrimitive> prims, const PipelineConfig& cfg) {
  return build_pattern_graph(prims, cfg.gravity_prior(), cfg.pattern());
}

inline LabelAssignment solve_qip(const QipInstance& inst, const PipelineConfig& cfg) {
  switch (cfg.solver) {
    case SolverMode::Exact: {
      auto x = solve_exact(inst, cfg.exact_cap);
      check_feasible(inst, x);
      return x;
    }
    case SolverMode::Heuristic: {
      auto x = solve_heuristic(inst, cfg.heuristic());
      check_feasible(inst, x);
      return x;
    }
    case SolverMode::Auto: break;
  }
  return solve_auto(inst, cfg.exact_cap, cfg.heuristic());
}

inline SceneHierarchyGraph stage_infer(std::span<const PlanePrimitive> prims, const PatternGraph& pg,
                                       const LabelAssignment& x, const PipelineConfig& cfg) {
  auto g = cfg.gravity_prior();
  auto objects = assemble_objects(x, pg.nodes, prims, g, cfg.support());
  auto h = infer_hierarchy(std::move(objects), pg, prims, g, cfg.support());
  validate_hierarchy(h);
  return h;
}

inline SceneResult run_scene(const PointCloud& cloud, const PipelineConfig& cfg) {
  cfg.validate();
  SceneResult r;
  r.primitives = detail::timed(r.timings, "extract", [&] { return stage_extract(cloud, cfg); });
  r.patterns = detail::timed(r.timings, "patterns", [&] { return stage_patterns(r.primitives, cfg); });
  r.qip = build_qip(r.patterns, cfg.qip());
  r.assignment = detail::timed(r.timings, "segment", [&] { return solve_qip(r.qip, cfg); });
  r.hierarchy = detail::timed(r.timings, "infer", [&] { return stage_infer(r.primitives, r.patterns, r.assignment, cfg); });
  return r;
}

/// Object id per point (0 for points no primitive explains).
inline std::vector<int> point_object_labels(std::size_t point_count, const SceneHierarchyGraph& h,
                                            std::span<const PlanePrimitive> prims) {
  std::vector<int> labels(point_count, 0);
  for (const auto& o : h.objects)
    for (int pid : o.primitive_ids)
      for (auto i : find_primitive(prims, pid).inliers) labels[i] = o.id;
  return labels;
}

}  // namespace strata
