#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "strata/eval/graph_metrics.hpp"
#include "strata/eval/segmentation.hpp"
#include "strata/io/json_io.hpp"
#include "strata/io/ply.hpp"
#include "strata/io/png.hpp"
#include "strata/pipeline/stages.hpp"

namespace strata {

namespace fs = std::filesystem;

/// Runs fn(0..count-1) on up to `threads` workers (0 = hardware). The first
/// exception is rethrown after all workers stop.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

/// Scene seed k derived from the top-level seed (splitmix64 step).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::string scene_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04zu", k);
  return buf;
}

// stage files -----------------------------------------------------------------

struct LoadedInput {
  PointCloud cloud;
  std::optional<Camera> camera;      // synthetic scenes carry one
  std::optional<std::pair<int, int>> image_size;  // depth input: width, height
};

/// PLY (with an optional camera.json beside it) or a 16-bit depth PNG with
/// intrinsics.json (or <stem>.json) beside it.
inline LoadedInput load_input(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "input does not exist: " + path.string());
  LoadedInput in;
  auto ext = path.extension().string();
  if (ext == ".ply") {
    in.cloud = io::read_ply(path.string());
    auto cam = path.parent_path() / "camera.json";
    if (fs::exists(cam)) in.camera = io::camera_from_json(io::read_json(cam.string()));
  } else if (ext == ".png") {
    fs::path intr = path.parent_path() / (path.stem().string() + ".json");
    if (!fs::exists(intr)) intr = path.parent_path() / "intrinsics.json";
    if (!fs::exists(intr)) throw Error(ErrorKind::Io, "no intrinsics JSON next to " + path.string());
    auto depth = io::read_gray_png(path.string());
    in.cloud = io::depth_to_cloud(depth, io::read_intrinsics(intr.string()));
    in.image_size = std::make_pair(depth.width, depth.height);
  } else {
    throw Error(ErrorKind::Io, "unsupported input type: " + path.string());
  }
  return in;
}

inline void write_primitives(const fs::path& dir, std::span<const PlanePrimitive> prims, const PipelineConfig& cfg) {
  io::write_json((dir / "primitives.json").string(), io::primitives_to_json(prims, config_hash(cfg)));
}

inline void write_patterns(const fs::path& dir, const PatternGraph& pg, const PipelineConfig& cfg, bool dot) {
  io::write_json((dir / "patterns.json").string(), io::pattern_graph_to_json(pg, config_hash(cfg)));
  if (dot) io::write_text((dir / "patterns.dot").string(), pattern_graph_dot(pg));
}

inline void write_assignment(const fs::path& dir, const QipInstance& inst, const LabelAssignment& x, const PipelineConfig& cfg) {
  io::write_json((dir / "assignment.json").string(), io::assignment_to_json(inst, x, to_string(cfg.solver), config_hash(cfg)));
}

inline void write_hierarchy(const fs::path& dir, const SceneHierarchyGraph& h, const PipelineConfig& cfg, bool nested_dot) {
  io::write_json((dir / "hierarchy.json").string(), io::hierarchy_to_json(h, config_hash(cfg)));
  io::write_text((dir / "hierarchy.dot").string(), hierarchy_dot(h, nested_dot));
  io::write_text((dir / "affinity.csv").string(), affinity_csv(h));
}

/// Predicted object mask, rendered through the scene camera or taken from
/// the depth pixels the points came from.
inline void write_prediction_mask(const fs::path& dir, const LoadedInput& in, const SceneResult& r) {
  auto labels = point_object_labels(in.cloud.size(), r.hierarchy, r.primitives);
  if (in.camera) {
    io::write_label_png((dir / "mask.png").string(),
                        LabelImage(in.camera->width, in.camera->height, render_label_mask(in.cloud, labels, *in.camera)));
  } else if (in.image_size && in.cloud.has_pixels()) {
    auto [w, h] = *in.image_size;
    std::vector<int> mask(static_cast<std::size_t>(w) * h, 0);
    for (std::size_t i = 0; i < in.cloud.size(); ++i)
      mask[static_cast<std::size_t>(in.cloud.pixels[i].row) * w + in.cloud.pixels[i].col] = labels[i];
    io::write_label_png((dir / "mask.png").string(), LabelImage(w, h, std::move(mask)));
  }
}

/// Solves, dumping the instance next to the outputs when a component turns
/// out infeasible.
inline LabelAssignment solve_or_dump(const QipInstance& inst, const PipelineConfig& cfg, const fs::path& dir) {
  try {
    return solve_qip(inst, cfg);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Infeasible) {
      io::write_json((dir / "qip_instance.json").string(), io::qip_to_json(inst));
      log::error("instance written to ", (dir / "qip_instance.json").string());
    }
    throw;
  }
}

/// All stages on one input, artifacts into `out`.
inline SceneResult run_pipeline_scene(const fs::path& input, const fs::path& out, const PipelineConfig& cfg, bool dot) {
  cfg.validate();
  fs::create_directories(out);
  auto in = load_input(input);
  SceneResult r;
  r.primitives = detail::timed(r.timings, "extract", [&] { return stage_extract(in.cloud, cfg); });
  write_primitives(out, r.primitives, cfg);
  r.patterns = detail::timed(r.timings, "patterns", [&] { return stage_patterns(r.primitives, cfg); });
  write_patterns(out, r.patterns, cfg, dot);
  r.qip = build_qip(r.patterns, cfg.qip());
  r.assignment = detail::timed(r.timings, "segment", [&] { return solve_or_dump(r.qip, cfg, out); });
  write_assignment(out, r.qip, r.assignment, cfg);
  r.hierarchy = detail::timed(r.timings, "infer", [&] { return stage_infer(r.primitives, r.patterns, r.assignment, cfg); });
  write_hierarchy(out, r.hierarchy, cfg, dot);
  write_prediction_mask(out, in, r);
  return r;
}

/// `input` is a point cloud, a depth PNG, a manifest.json, or a directory
/// holding a manifest.json. Manifest scenes run on the worker pool and land in
/// out/<scene name>/.
inline void run_pipeline(const fs::path& input, const fs::path& out, const PipelineConfig& cfg, bool dot = false) {
  fs::path manifest = fs::is_directory(input) ? input / "manifest.json" : input;
  if (manifest.extension() != ".json") {
    run_pipeline_scene(input, out, cfg, dot);
    return;
  }
  auto j = io::read_json(manifest.string());
  std::vector<std::string> names;
  io::parse_guard("manifest", [&] {
    for (const auto& s : j.at("scenes")) names.push_back(s.at("name").get<std::string>());
    return 0;
  });
  const fs::path root = manifest.parent_path();
  parallel_for(names.size(), cfg.threads, [&](std::size_t k) {
    run_pipeline_scene(root / names[k] / "cloud.ply", out / names[k], cfg, dot);
  });
}

// synthetic datasets ---------------------------------------------------------

inline void write_synthetic_scene(const fs::path& dir, const PointCloud& cloud, const GroundTruth& gt, const SceneSpec& spec) {
  fs::create_directories(dir);
  io::write_ply((dir / "cloud.ply").string(), cloud);
  io::write_json((dir / "gt.json").string(), io::ground_truth_to_json(gt));
  io::write_json((dir / "camera.json").string(), io::camera_to_json(spec.camera));
  io::write_json((dir / "hierarchy.json").string(), io::hierarchy_to_json(ground_truth_hierarchy(gt), "ground-truth"));
  io::write_label_png((dir / "mask.png").string(),
                      LabelImage(spec.camera.width, spec.camera.height, render_label_mask(cloud, gt.point_object, spec.camera)));
}

/// `count` scenes seeded from cfg.seed, plus manifest.json.
inline void run_synth(const fs::path& out, const PipelineConfig& cfg, int count) {
  fs::create_directories(out);
  std::vector<SceneSpec> specs;
  for (int k = 0; k < count; ++k) specs.push_back(cfg.scene(derive_seed(cfg.seed, static_cast<std::uint64_t>(k))));
  parallel_for(specs.size(), cfg.threads, [&](std::size_t k) {
    auto [cloud, gt] = generate_scene(specs[k]);
    write_synthetic_scene(out / scene_name(k), cloud, gt, specs[k]);
  });
  io::json scenes = io::json::array();
  for (std::size_t k = 0; k < specs.size(); ++k)
    scenes.push_back({{"name", scene_name(k)}, {"seed", specs[k].seed}, {"spec", io::scene_spec_to_json(specs[k])}});
  io::write_json((out / "manifest.json").string(), {{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}, {"scenes", scenes}});
}

// evaluation ------------------------------------------------------------------

struct SceneEval {
  std::string name;
  std::string domain;  // "pixels" or "points"
  Prf overlap, boundary;
  double cheeger = 0.0, spectral = 0.0;
  SupportEdgeScore support;
};

struct EvalReport {
  std::vector<SceneEval> scenes;
  std::vector<std::string> skipped;  // scenes without ground truth
};

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(s / v.size());
  return m;
}

/// Point-level labels of a predicted scene directory, from its primitives.
inline std::optional<std::vector<int>> predicted_point_labels(const fs::path& dir, std::size_t point_count) {
  if (!fs::exists(dir / "primitives.json") || !fs::exists(dir / "hierarchy.json")) return std::nullopt;
  auto prims = io::primitives_from_json(io::read_json((dir / "primitives.json").string()));
  auto h = io::hierarchy_from_json(io::read_json((dir / "hierarchy.json").string()));
  for (const auto& p : prims)
    for (auto i : p.inliers)
      if (i >= point_count) return std::nullopt;
  return point_object_labels(point_count, h, prims);
}

inline SceneEval evaluate_scene_dirs(const std::string& name, const fs::path& pred, const fs::path& gt, const PipelineConfig& cfg) {
  SceneEval ev;
  ev.name = name;
  auto hp = io::hierarchy_from_json(io::read_json((pred / "hierarchy.json").string()));
  auto hg = io::hierarchy_from_json(io::read_json((gt / "hierarchy.json").string()));
  LabelImage lp, lg;
  if (fs::exists(pred / "mask.png") && fs::exists(gt / "mask.png")) {
    lp = io::read_label_png((pred / "mask.png").string());
    lg = io::read_label_png((gt / "mask.png").string());
    ev.domain = "pixels";
  } else if (fs::exists(gt / "gt.json")) {
    auto g = io::ground_truth_from_json(io::read_json((gt / "gt.json").string()));
    auto p = predicted_point_labels(pred, g.point_object.size());
    if (!p) throw Error(ErrorKind::Io, name + ": prediction has neither a mask nor primitives matching the ground truth");
    lp = LabelImage::from_points(*p);
    lg = LabelImage::from_points(g.point_object);
    ev.domain = "points";
  } else {
    throw Error(ErrorKind::Io, name + ": ground truth has neither mask.png nor gt.json");
  }
  auto m = match_objects(lp, lg);
  ev.overlap = prf_overlap(lp, lg, m);
  ev.boundary = prf_boundary(lp, lg, m, cfg.dilation_px);
  auto gs = score_graphs(hp, hg, m);
  ev.cheeger = gs.cheeger;
  ev.spectral = gs.spectral;
  ev.support = score_support_edges(hp, hg, m);
  return ev;
}

/// Scenes are the subdirectories of `pred` holding hierarchy.json (or `pred`
/// itself). Scenes without ground truth are skipped with a warning.
inline EvalReport run_eval(const fs::path& pred, const fs::path& gt, const PipelineConfig& cfg) {
  EvalReport rep;
  std::vector<std::string> names;
  if (fs::exists(pred / "hierarchy.json")) {
    names.push_back("");
  } else {
    if (!fs::is_directory(pred)) throw Error(ErrorKind::Io, "prediction directory not found: " + pred.string());
    for (const auto& e : fs::directory_iterator(pred))
      if (e.is_directory() && fs::exists(e.path() / "hierarchy.json")) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
  }
  std::vector<std::optional<SceneEval>> results(names.size());
  std::vector<std::string> kept;
  for (const auto& n : names) {
    if (!fs::exists(gt / n / "hierarchy.json")) {
      log::warn("no ground truth for scene '", n, "'; skipped");
      rep.skipped.push_back(n);
    } else {
      kept.push_back(n);
    }
  }
  results.resize(kept.size());
  parallel_for(kept.size(), cfg.threads,
               [&](std::size_t k) { results[k] = evaluate_scene_dirs(kept[k], pred / kept[k], gt / kept[k], cfg); });
  for (auto& r : results) rep.scenes.push_back(std::move(*r));
  return rep;
}

inline std::string eval_csv(const EvalReport& rep) {
  std::ostringstream os;
  os << "scene,domain,overlap_p,overlap_r,overlap_f,boundary_p,boundary_r,boundary_f,cheeger_section,spectral_section,"
        "support_precision,support_recall,support_exact\n";
  char buf[512];
  for (const auto& s : rep.scenes) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  s.name.c_str(), s.domain.c_str(), s.overlap.precision, s.overlap.recall, s.overlap.f,
                  s.boundary.precision, s.boundary.recall, s.boundary.f, s.cheeger, s.spectral, s.support.precision(),
                  s.support.recall(), s.support.exact ? 1 : 0);
    os << buf;
  }
  return os.str();
}

inline io::json eval_summary(const EvalReport& rep, const PipelineConfig& cfg) {
  std::vector<double> op, orc, of, bp, br, bf, ch, sp;
  std::int64_t tp = 0, actual = 0, predicted = 0, exact = 0;
  for (const auto& s : rep.scenes) {
    op.push_back(s.overlap.precision);
    orc.push_back(s.overlap.recall);
    of.push_back(s.overlap.f);
    bp.push_back(s.boundary.precision);
    br.push_back(s.boundary.recall);
    bf.push_back(s.boundary.f);
    ch.push_back(s.cheeger);
    sp.push_back(s.spectral);
    tp += s.support.true_positives;
    actual += s.support.actual;
    predicted += s.support.predicted;
    exact += s.support.exact;
  }
  auto prf = [](const std::vector<double>& p, const std::vector<double>& r, const std::vector<double>& f) {
    return io::json{{"P", mean_std(p).mean}, {"R", mean_std(r).mean}, {"F", mean_std(f).mean}};
  };
  auto ms = [](const std::vector<double>& v) {
    auto m = mean_std(v);
    return io::json{{"mean", m.mean}, {"std", m.std}};
  };
  return {{"config_hash", config_hash(cfg)},
          {"scenes", rep.scenes.size()},
          {"skipped", rep.skipped},
          {"overlap", prf(op, orc, of)},
          {"boundary", prf(bp, br, bf)},
          {"cheeger_section", ms(ch)},
          {"spectral_section", ms(sp)},
          {"support_edges",
           {{"precision", predicted ? static_cast<double>(tp) / predicted : 1.0},
            {"recall", actual ? static_cast<double>(tp) / actual : 1.0},
            {"exact_scenes", exact}}}};
}

inline void write_eval(const fs::path& out, const EvalReport& rep, const PipelineConfig& cfg) {
  fs::create_directories(out);
  io::write_text((out / "eval.csv").string(), eval_csv(rep));
  io::write_json((out / "eval_summary.json").string(), eval_summary(rep, cfg));
}

}  // namespace strata
