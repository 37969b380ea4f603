#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/ransac.hpp"
#include "strata/labeling/qip.hpp"
#include "strata/labeling/solvers.hpp"
#include "strata/pattern/pattern_graph.hpp"
#include "strata/support/hierarchy.hpp"
#include "strata/synth/scene.hpp"

namespace strata {

enum class SolverMode { Auto, Exact, Heuristic };

inline const char* to_string(SolverMode m) {
  switch (m) {
    case SolverMode::Auto: return "auto";
    case SolverMode::Exact: return "exact";
    case SolverMode::Heuristic: return "heuristic";
  }
  return "?";
}

/// Every threshold and constant of the pipeline. Defaults form the `defaults`
/// profile.
struct PipelineConfig {
  // pattern graph
  double theta_adj = 0.02;
  double theta_angle_deg = 10.0;
  double tau = 0.86;
  double contact_tol = 0.01;
  double contact_band = 0.01;
  // labeling
  double delta = 0.2;
  double w_d = 0.3;
  double w_r = 0.7;
  double d0 = 1.0;
  double f0 = 1.0;
  double f1 = 1000.0;
  SolverMode solver = SolverMode::Auto;
  int exact_cap = kDefaultExactCap;
  int heuristic_restarts = 16;
  // extraction
  double eps_ransac = 0.005;
  int ransac_max_iterations = 1000;
  int ransac_min_inliers = 200;
  double ransac_min_fraction = 0.005;
  double ransac_sample_radius = 0.05;
  double ransac_cluster_cell = 0.01;
  // support inference
  double eps_gap = 0.04;
  double rho_min = 0.3;
  double ground_min_area = 0.1;
  // evaluation
  int dilation_px = 2;
  // global
  std::uint64_t seed = 0;
  Vec3 gravity = Vec3::UnitZ();
  Vec3 sensor_origin{0.0, -1.0, 0.9};
  int threads = 0;  // 0 = hardware concurrency
  // synthetic data
  int synth_scenes = 10;
  int synth_min_objects = 4;
  int synth_max_objects = 8;
  double synth_noise = 0.001;
  bool synth_occlusion = false;

  PatternConfig pattern() const {
    PatternConfig c;
    c.theta_adj = theta_adj;
    c.theta_angle_deg = theta_angle_deg;
    c.tau = tau;
    c.contact_tol = contact_tol;
    c.contact_band = contact_band;
    return c;
  }

  QipConstants qip() const {
    QipConstants c;
    c.d0 = d0;
    c.f0 = f0;
    c.f1 = f1;
    c.w_d = w_d;
    c.w_r = w_r;
    c.delta = delta;
    c.tau = tau;
    c.theta_adj = theta_adj;
    return c;
  }

  RansacParams ransac() const {
    RansacParams p;
    p.epsilon = eps_ransac;
    p.max_iterations = ransac_max_iterations;
    p.min_inliers_floor = static_cast<std::size_t>(ransac_min_inliers);
    p.min_inliers_fraction = ransac_min_fraction;
    p.sample_radius = ransac_sample_radius;
    p.cluster_cell = ransac_cluster_cell;
    p.theta_angle_deg = theta_angle_deg;
    p.seed = seed;
    p.sensor_origin = sensor_origin;
    return p;
  }

  SupportConfig support() const {
    SupportConfig c;
    c.theta_adj = theta_adj;
    c.eps_gap = eps_gap;
    c.rho_min = rho_min;
    c.ground_min_area = ground_min_area;
    c.min_half_extent = eps_ransac;
    return c;
  }

  HeuristicParams heuristic() const {
    HeuristicParams h;
    h.seed = seed;
    h.restarts = heuristic_restarts;
    return h;
  }

  SceneSpec scene(std::uint64_t scene_seed) const {
    SceneSpec s;
    s.min_objects = synth_min_objects;
    s.max_objects = synth_max_objects;
    s.noise_sigma = synth_noise;
    s.occlusion = synth_occlusion;
    s.seed = scene_seed;
    return s;
  }

  GravityPrior gravity_prior() const { return GravityPrior(gravity); }

  /// Throws Config errors for violated invariants.
  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
    if (std::abs(w_d + w_r - 1.0) > 1e-9) fail("w_d + w_r must equal 1");
    if (!(0 < delta && delta < tau && tau < 1)) fail("need 0 < delta < tau < 1");
    if (!(d0 == f0 && f0 < f1)) fail("need d0 = f0 < f1");
    if (!(theta_adj > 0)) fail("theta_adj must be positive");
    if (!(eps_ransac > 0)) fail("eps_ransac must be positive");
    if (exact_cap < 1) fail("exact_cap must be at least 1");
    if (dilation_px < 0) fail("dilation_px must be non-negative");
    if (!(gravity.norm() > 0)) fail("gravity must be non-zero");
    if (synth_min_objects < 0 || synth_max_objects < synth_min_objects) fail("bad synthetic object range");
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "key '" + key + "': expected a number, got '" + s + "'");
  }
}

inline std::int64_t parse_int(const std::string& key, const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::Config, "key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorKind::Config, "key '" + key + "': expected a boolean, got '" + s + "'");
}

inline Vec3 parse_vec3(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  std::string a, b, c, extra;
  is >> a >> b >> c;
  if (c.empty() || (is >> extra)) throw Error(ErrorKind::Config, "key '" + key + "': expected three numbers");
  return {parse_double(key, a), parse_double(key, b), parse_double(key, c)};
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigField {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
};

inline const std::map<std::string, ConfigField>& config_fields() {
  using C = PipelineConfig;
  static const std::map<std::string, ConfigField> fields = [] {
    std::map<std::string, ConfigField> f;
    auto dbl = [&](const char* name, double C::*m) {
      f[name] = {[m](const C& c) { return fmt_double(c.*m); },
                 [m](C& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); }};
    };
    auto integer = [&](const char* name, int C::*m) {
      f[name] = {[m](const C& c) { return std::to_string(c.*m); },
                 [m](C& c, const std::string& k, const std::string& v) { c.*m = static_cast<int>(parse_int(k, v)); }};
    };
    auto vec = [&](const char* name, Vec3 C::*m) {
      f[name] = {[m](const C& c) {
                   return fmt_double((c.*m).x()) + " " + fmt_double((c.*m).y()) + " " + fmt_double((c.*m).z());
                 },
                 [m](C& c, const std::string& k, const std::string& v) { c.*m = parse_vec3(k, v); }};
    };
    dbl("theta_adj", &C::theta_adj);
    dbl("theta_angle_deg", &C::theta_angle_deg);
    dbl("tau", &C::tau);
    dbl("contact_tol", &C::contact_tol);
    dbl("contact_band", &C::contact_band);
    dbl("delta", &C::delta);
    dbl("w_d", &C::w_d);
    dbl("w_r", &C::w_r);
    dbl("d0", &C::d0);
    dbl("f0", &C::f0);
    dbl("f1", &C::f1);
    f["solver"] = {[](const C& c) { return std::string(to_string(c.solver)); },
                   [](C& c, const std::string& k, const std::string& v) {
                     if (v == "auto") c.solver = SolverMode::Auto;
                     else if (v == "exact") c.solver = SolverMode::Exact;
                     else if (v == "heuristic") c.solver = SolverMode::Heuristic;
                     else throw Error(ErrorKind::Config, "key '" + k + "': expected auto, exact or heuristic");
                   }};
    integer("exact_cap", &C::exact_cap);
    integer("heuristic_restarts", &C::heuristic_restarts);
    dbl("eps_ransac", &C::eps_ransac);
    integer("ransac_max_iterations", &C::ransac_max_iterations);
    integer("ransac_min_inliers", &C::ransac_min_inliers);
    dbl("ransac_min_fraction", &C::ransac_min_fraction);
    dbl("ransac_sample_radius", &C::ransac_sample_radius);
    dbl("ransac_cluster_cell", &C::ransac_cluster_cell);
    dbl("eps_gap", &C::eps_gap);
    dbl("rho_min", &C::rho_min);
    dbl("ground_min_area", &C::ground_min_area);
    integer("dilation_px", &C::dilation_px);
    f["seed"] = {[](const C& c) { return std::to_string(c.seed); },
                 [](C& c, const std::string& k, const std::string& v) {
                   std::uint64_t s = 0;
                   auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
                   if (ec != std::errc() || ptr != v.data() + v.size())
                     throw Error(ErrorKind::Config, "key '" + k + "': expected an unsigned integer");
                   c.seed = s;
                 }};
    vec("gravity", &C::gravity);
    vec("sensor_origin", &C::sensor_origin);
    integer("threads", &C::threads);
    integer("synth_scenes", &C::synth_scenes);
    integer("synth_min_objects", &C::synth_min_objects);
    integer("synth_max_objects", &C::synth_max_objects);
    dbl("synth_noise", &C::synth_noise);
    f["synth_occlusion"] = {[](const C& c) { return std::string(c.synth_occlusion ? "true" : "false"); },
                            [](C& c, const std::string& k, const std::string& v) { c.synth_occlusion = parse_bool(k, v); }};
    return f;
  }();
  return fields;
}

}  // namespace detail

/// `key = value` lines; `#` starts a comment. A `[defaults]` header is
/// accepted and ignored (it names the built-in profile the file starts from).
inline PipelineConfig parse_config(const std::string& text, PipelineConfig base = {}) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  const auto& fields = detail::config_fields();
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[defaults]") throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": unknown profile " + line);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second.set(base, key, value);
  }
  base.validate();
  return base;
}

inline std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream os;
  for (const auto& [key, field] : detail::config_fields()) os << key << " = " << field.get(c) << '\n';
  return os.str();
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Applies one `key=value` override (CLI --set).
inline void apply_override(PipelineConfig& c, const std::string& assignment) {
  c = parse_config(assignment, c);
}

/// 64-bit FNV-1a of the serialized config, as 16 hex digits. The worker
/// count is left out: it never changes a result.
inline std::string config_hash(const PipelineConfig& c) {
  PipelineConfig k = c;
  k.threads = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(k)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace strata
