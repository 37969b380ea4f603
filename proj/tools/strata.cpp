// strata: command-line front end for every pipeline stage.

#include <iostream>

#include "CLI11.hpp"
#include "strata/pipeline/run.hpp"

using namespace strata;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool exact = false;
  bool heuristic = false;
  std::string out = ".";
  bool dot = false;
  std::vector<std::string> overrides;

  PipelineConfig config() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (seed) cfg.seed = *seed;
    if (exact) cfg.solver = SolverMode::Exact;
    if (heuristic) cfg.solver = SolverMode::Heuristic;
    cfg.validate();
    log::info("config hash ", config_hash(cfg));
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "top-level random seed");
  auto* ex = cmd->add_flag("--exact", c.exact, "force the exact solver");
  auto* he = cmd->add_flag("--heuristic", c.heuristic, "force the heuristic solver");
  ex->excludes(he);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_flag("--dot", c.dot, "also write DOT renderings");
  cmd->add_option("--set", c.overrides, "override one config key (key=value)");
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io:
    case ErrorKind::EmptyInput:
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Infeasible:
    case ErrorKind::Capacity:
      return 3;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-primitive segmentation and support-hierarchy inference for tabletop point clouds"};
  app.require_subcommand(1);
  Common c;

  std::string input;
  auto* extract = app.add_subcommand("extract", "fit plane primitives to a PLY cloud or depth PNG");
  extract->add_option("input", input, "input cloud")->required();
  add_common(extract, c);

  std::string prims_path;
  auto* patterns = app.add_subcommand("patterns", "classify adjacent primitive pairs");
  patterns->add_option("primitives", prims_path, "primitives.json")->required()->check(CLI::ExistingFile);
  add_common(patterns, c);

  std::string graph_path;
  bool dump_qip = false;
  auto* segment = app.add_subcommand("segment", "solve the labeling program (patterns.json or a QIP dump)");
  segment->add_option("graph", graph_path, "patterns.json or qip.json")->required()->check(CLI::ExistingFile);
  segment->add_flag("--dump-qip", dump_qip, "also write the instance as qip.json");
  add_common(segment, c);

  std::string stage_dir;
  auto* infer = app.add_subcommand("infer", "build the scene hierarchy from a directory of stage outputs");
  infer->add_option("dir", stage_dir, "directory with primitives.json, patterns.json and assignment.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_common(infer, c);

  std::string pred_dir, gt_dir;
  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("pred", pred_dir, "prediction directory")->required();
  eval->add_option("gt", gt_dir, "ground-truth directory")->required();
  add_common(eval, c);

  int count = -1;
  bool occlusion = false;
  auto* synth = app.add_subcommand("synth", "generate synthetic tabletop scenes with ground truth");
  synth->add_option("--count", count, "number of scenes (default: synth_scenes)");
  synth->add_flag("--occlusion", occlusion, "cull points hidden from the scene camera");
  add_common(synth, c);

  auto* pipeline = app.add_subcommand("pipeline", "run every stage on a cloud, depth image or manifest");
  pipeline->add_option("input", input, "PLY, depth PNG, manifest.json or dataset directory")->required();
  add_common(pipeline, c);

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = c.config();
    const fs::path out = c.out;
    fs::create_directories(out);

    if (*extract) {
      auto in = load_input(input);
      write_primitives(out, stage_extract(in.cloud, cfg), cfg);
    } else if (*patterns) {
      auto prims = io::primitives_from_json(io::read_json(prims_path));
      write_patterns(out, stage_patterns(prims, cfg), cfg, c.dot);
    } else if (*segment) {
      auto j = io::read_json(graph_path);
      QipInstance inst = j.contains("pairs") ? io::qip_from_json(j) : build_qip(io::pattern_graph_from_json(j), cfg.qip());
      if (dump_qip) io::write_json((out / "qip.json").string(), io::qip_to_json(inst));
      write_assignment(out, inst, solve_or_dump(inst, cfg, out), cfg);
    } else if (*infer) {
      const fs::path d = stage_dir;
      auto prims = io::primitives_from_json(io::read_json((d / "primitives.json").string()));
      auto pg = io::pattern_graph_from_json(io::read_json((d / "patterns.json").string()));
      auto x = io::assignment_from_json(io::read_json((d / "assignment.json").string()), pg.nodes);
      write_hierarchy(out, stage_infer(prims, pg, x, cfg), cfg, c.dot);
    } else if (*eval) {
      auto rep = run_eval(pred_dir, gt_dir, cfg);
      write_eval(out, rep, cfg);
      auto s = eval_summary(rep, cfg);
      std::cout << "scenes " << rep.scenes.size() << ", skipped " << rep.skipped.size() << "\n"
                << "overlap F " << s["overlap"]["F"] << ", boundary F " << s["boundary"]["F"] << "\n"
                << "cheeger section " << s["cheeger_section"]["mean"] << ", spectral section "
                << s["spectral_section"]["mean"] << "\n";
    } else if (*synth) {
      PipelineConfig sc = cfg;
      if (occlusion) sc.synth_occlusion = true;
      run_synth(out, sc, count >= 0 ? count : cfg.synth_scenes);
    } else if (*pipeline) {
      run_pipeline(input, out, cfg, c.dot);
    }
  } catch (const Error& e) {
    std::cerr << "strata: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "strata: io error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
