#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "strata/core/error.hpp"
#include "strata/labeling/qip.hpp"
#include "strata/pattern/pattern_graph.hpp"
#include "strata/support/hierarchy.hpp"
#include "strata/synth/scene.hpp"

namespace strata::io {

using json = nlohmann::json;

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Io, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, path + ": " + e.what());
  }
}

/// Pretty-printed with a trailing newline; key order is fixed by the json
/// object's sorted keys, so equal content gives equal bytes.
inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

// Converts json library errors on malformed documents into Io errors.
template <class F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed ") + what + ": " + e.what());
  }
}

// primitives --------------------------------------------------------------

inline json primitive_to_json(const PlanePrimitive& p) {
  json hull = json::array();
  for (const auto& v : p.hull) hull.push_back(to_json(v));
  return {{"id", p.id},
          {"normal", to_json(p.normal)},
          {"offset", p.offset},
          {"centroid", to_json(p.centroid)},
          {"is_horizontal", p.is_horizontal},
          {"hull", hull},
          {"inlier_count", p.inliers.size()},
          {"inliers", p.inliers}};
}

inline PlanePrimitive primitive_from_json(const json& j) {
  return parse_guard("primitive", [&] {
    PlanePrimitive p;
    p.id = j.at("id").get<int>();
    p.normal = vec3_from_json(j.at("normal"));
    p.offset = j.at("offset").get<double>();
    p.centroid = vec3_from_json(j.at("centroid"));
    p.is_horizontal = j.at("is_horizontal").get<bool>();
    for (const auto& v : j.at("hull")) p.hull.push_back(vec3_from_json(v));
    if (j.contains("inliers")) p.inliers = j.at("inliers").get<std::vector<std::uint32_t>>();
    return p;
  });
}

inline json primitives_to_json(std::span<const PlanePrimitive> prims, const std::string& config_hash) {
  json arr = json::array();
  for (const auto& p : prims) arr.push_back(primitive_to_json(p));
  return {{"config_hash", config_hash}, {"primitives", arr}};
}

inline std::vector<PlanePrimitive> primitives_from_json(const json& j) {
  std::vector<PlanePrimitive> out;
  parse_guard("primitives file", [&] {
    for (const auto& p : j.at("primitives")) out.push_back(primitive_from_json(p));
    return 0;
  });
  return out;
}

// pattern graph -----------------------------------------------------------

inline json pattern_graph_to_json(const PatternGraph& pg, const std::string& config_hash) {
  json edges = json::array();
  for (const auto& e : pg.edges)
    edges.push_back({{"i", e.first},
                     {"j", e.second},
                     {"pattern", static_cast<int>(e.pattern)},
                     {"connection", to_string(e.connection())},
                     {"ratio", e.ratio ? json(*e.ratio) : json(nullptr)},
                     {"distance", e.distance}});
  return {{"config_hash", config_hash}, {"nodes", pg.nodes}, {"edges", edges}};
}

inline PatternGraph pattern_graph_from_json(const json& j) {
  return parse_guard("pattern graph", [&] {
    PatternGraph pg;
    pg.nodes = j.at("nodes").get<std::vector<int>>();
    for (const auto& e : j.at("edges")) {
      PatternEdge pe;
      pe.first = e.at("i").get<int>();
      pe.second = e.at("j").get<int>();
      pe.pattern = pattern_from_int(e.at("pattern").get<int>());
      if (!e.at("ratio").is_null()) pe.ratio = e.at("ratio").get<double>();
      pe.distance = e.at("distance").get<double>();
      pg.edges.push_back(pe);
    }
    return pg;
  });
}

// QIP instances and assignments ---------------------------------------------

inline json qip_to_json(const QipInstance& inst) {
  const auto& c = inst.constants;
  json data = json::array(), excluded = json::array(), pairs = json::array();
  for (int v = 0; v < inst.n; ++v) {
    json row = json::array();
    for (const auto& [l, w] : inst.data[v]) row.push_back({l, w});
    data.push_back(row);
    excluded.push_back(inst.excluded[v]);
  }
  for (const auto& [e, w] : inst.pair_weight) pairs.push_back({e.first, e.second, w});
  return {{"n", inst.n},
          {"ids", inst.ids},
          {"constants",
           {{"d0", c.d0}, {"f0", c.f0}, {"f1", c.f1}, {"w_d", c.w_d}, {"w_r", c.w_r}, {"delta", c.delta}, {"tau", c.tau},
            {"theta_adj", c.theta_adj}}},
          {"data", data},
          {"excluded", excluded},
          {"pairs", pairs}};
}

inline QipInstance qip_from_json(const json& j) {
  return parse_guard("QIP instance", [&] {
    QipInstance inst;
    inst.n = j.at("n").get<int>();
    inst.ids = j.at("ids").get<std::vector<int>>();
    const auto& c = j.at("constants");
    inst.constants = {c.at("d0").get<double>(),    c.at("f0").get<double>(),  c.at("f1").get<double>(),
                      c.at("w_d").get<double>(),   c.at("w_r").get<double>(), c.at("delta").get<double>(),
                      c.at("tau").get<double>(),   c.at("theta_adj").get<double>()};
    if (static_cast<int>(inst.ids.size()) != inst.n || static_cast<int>(j.at("data").size()) != inst.n ||
        static_cast<int>(j.at("excluded").size()) != inst.n)
      throw Error(ErrorKind::MalformedGraph, "QIP instance arrays do not match n");
    inst.data.resize(inst.n);
    inst.excluded.resize(inst.n);
    for (int v = 0; v < inst.n; ++v) {
      for (const auto& cell : j.at("data")[v]) inst.data[v][cell.at(0).get<int>()] = cell.at(1).get<double>();
      for (const auto& l : j.at("excluded")[v]) inst.excluded[v].insert(l.get<int>());
    }
    for (const auto& p : j.at("pairs")) {
      int a = p.at(0).get<int>(), b = p.at(1).get<int>();
      if (a < 0 || b >= inst.n || a >= b) throw Error(ErrorKind::MalformedGraph, "bad pair index in QIP instance");
      inst.pair_weight[{a, b}] = p.at(2).get<double>();
    }
    return inst;
  });
}

/// {primitive_id: label}; labels are the solver's raw label indices.
inline json assignment_to_json(const QipInstance& inst, const LabelAssignment& x, const std::string& solver,
                               const std::string& config_hash) {
  json map = json::object();
  for (int v = 0; v < inst.n; ++v) map[std::to_string(inst.ids[v])] = x.labels[v];
  return {{"config_hash", config_hash},
          {"solver", solver},
          {"objective", objective_value(inst, x)},
          {"assignment", map}};
}

/// Labels ordered like `ids`.
inline LabelAssignment assignment_from_json(const json& j, const std::vector<int>& ids) {
  return parse_guard("assignment", [&] {
    LabelAssignment x;
    const auto& map = j.at("assignment");
    for (int id : ids) {
      auto key = std::to_string(id);
      if (!map.contains(key)) throw Error(ErrorKind::Infeasible, "assignment lacks primitive " + key);
      x.labels.push_back(map.at(key).get<int>());
    }
    return x;
  });
}

// hierarchy ---------------------------------------------------------------

inline json bbox_to_json(const Bbox& b) {
  return {{"center", to_json(b.center)},
          {"half_extents", to_json(b.half_extents)},
          {"axes", json::array({to_json(b.axes[0]), to_json(b.axes[1]), to_json(b.axes[2])})}};
}

inline Bbox bbox_from_json(const json& j) {
  Bbox b;
  b.center = vec3_from_json(j.at("center"));
  b.half_extents = vec3_from_json(j.at("half_extents"));
  for (int k = 0; k < 3; ++k) b.axes[k] = vec3_from_json(j.at("axes").at(k));
  return b;
}

inline json hierarchy_to_json(const SceneHierarchyGraph& h, const std::string& config_hash) {
  json objects = json::array(), edges = json::array();
  for (const auto& o : h.objects)
    objects.push_back(
        {{"id", o.id}, {"primitive_ids", o.primitive_ids}, {"bbox", bbox_to_json(o.bbox)}, {"contains_ground", o.contains_ground}});
  for (const auto& e : h.edges)
    edges.push_back({{"from", e.from}, {"to", e.to}, {"phase", to_string(e.phase)}, {"evidence", e.evidence}});
  return {{"config_hash", config_hash}, {"objects", objects}, {"edges", edges}, {"diagnostics", h.diagnostics}};
}

inline SceneHierarchyGraph hierarchy_from_json(const json& j) {
  return parse_guard("hierarchy", [&] {
    SceneHierarchyGraph h;
    for (const auto& o : j.at("objects")) {
      SceneObject so;
      so.id = o.at("id").get<int>();
      so.primitive_ids = o.at("primitive_ids").get<std::vector<int>>();
      if (o.contains("bbox")) so.bbox = bbox_from_json(o.at("bbox"));
      so.contains_ground = o.at("contains_ground").get<bool>();
      h.objects.push_back(std::move(so));
    }
    for (const auto& e : j.at("edges"))
      h.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(),
                         support_phase_from_string(e.at("phase").get<std::string>()), e.value("evidence", 0.0)});
    if (j.contains("diagnostics")) h.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    detail::sort_edges(h.edges);
    return h;
  });
}

// synthetic scenes --------------------------------------------------------

inline json camera_to_json(const Camera& c) {
  return {{"eye", to_json(c.eye)}, {"target", to_json(c.target)}, {"width", c.width}, {"height", c.height},
          {"fx", c.fx},            {"fy", c.fy},                  {"cx", c.cx},       {"cy", c.cy}};
}

inline Camera camera_from_json(const json& j) {
  return parse_guard("camera", [&] {
    Camera c;
    c.eye = vec3_from_json(j.at("eye"));
    c.target = vec3_from_json(j.at("target"));
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    return c;
  });
}

inline json box_to_json(const SynthBox& b) {
  return {{"center", {b.center.x(), b.center.y()}}, {"base", b.base},           {"size", to_json(b.size)},
          {"yaw", b.yaw},                           {"supporter", b.supporter}, {"depth", b.depth}};
}

inline SynthBox box_from_json(const json& b) {
  SynthBox box;
  box.center = {b.at("center").at(0).get<double>(), b.at("center").at(1).get<double>()};
  box.base = b.at("base").get<double>();
  box.size = vec3_from_json(b.at("size"));
  box.yaw = b.at("yaw").get<double>();
  box.supporter = b.at("supporter").get<int>();
  box.depth = b.at("depth").get<int>();
  return box;
}

// Every field, so a manifest entry regenerates its scene exactly.
inline json scene_spec_to_json(const SceneSpec& s) {
  json fixed = json::array();
  for (const auto& b : s.fixed_boxes) fixed.push_back(box_to_json(b));
  return {{"table_x", s.table_x},
          {"table_y", s.table_y},
          {"min_objects", s.min_objects},
          {"max_objects", s.max_objects},
          {"stack_probability", s.stack_probability},
          {"max_stack_depth", s.max_stack_depth},
          {"footprint_min", s.footprint_min},
          {"footprint_max", s.footprint_max},
          {"height_min", s.height_min},
          {"height_max", s.height_max},
          {"max_yaw_deg", s.max_yaw_deg},
          {"stack_yaw_jitter_deg", s.stack_yaw_jitter_deg},
          {"clearance", s.clearance},
          {"table_inset", s.table_inset},
          {"stack_inset", s.stack_inset},
          {"spacing", s.spacing},
          {"noise_sigma", s.noise_sigma},
          {"max_points", s.max_points},
          {"max_retries", s.max_retries},
          {"occlusion", s.occlusion},
          {"occlusion_resolution_deg", s.occlusion_resolution_deg},
          {"occlusion_tolerance", s.occlusion_tolerance},
          {"camera", camera_to_json(s.camera)},
          {"seed", s.seed},
          {"fixed_boxes", fixed}};
}

inline SceneSpec scene_spec_from_json(const json& j) {
  return parse_guard("scene spec", [&] {
    SceneSpec s;
    s.table_x = j.value("table_x", s.table_x);
    s.table_y = j.value("table_y", s.table_y);
    s.min_objects = j.value("min_objects", s.min_objects);
    s.max_objects = j.value("max_objects", s.max_objects);
    s.stack_probability = j.value("stack_probability", s.stack_probability);
    s.max_stack_depth = j.value("max_stack_depth", s.max_stack_depth);
    s.footprint_min = j.value("footprint_min", s.footprint_min);
    s.footprint_max = j.value("footprint_max", s.footprint_max);
    s.height_min = j.value("height_min", s.height_min);
    s.height_max = j.value("height_max", s.height_max);
    s.max_yaw_deg = j.value("max_yaw_deg", s.max_yaw_deg);
    s.stack_yaw_jitter_deg = j.value("stack_yaw_jitter_deg", s.stack_yaw_jitter_deg);
    s.clearance = j.value("clearance", s.clearance);
    s.table_inset = j.value("table_inset", s.table_inset);
    s.stack_inset = j.value("stack_inset", s.stack_inset);
    s.spacing = j.value("spacing", s.spacing);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.max_points = j.value("max_points", s.max_points);
    s.max_retries = j.value("max_retries", s.max_retries);
    s.occlusion = j.value("occlusion", s.occlusion);
    s.occlusion_resolution_deg = j.value("occlusion_resolution_deg", s.occlusion_resolution_deg);
    s.occlusion_tolerance = j.value("occlusion_tolerance", s.occlusion_tolerance);
    if (j.contains("camera")) s.camera = camera_from_json(j.at("camera"));
    s.seed = j.value("seed", s.seed);
    if (j.contains("fixed_boxes"))
      for (const auto& b : j.at("fixed_boxes")) s.fixed_boxes.push_back(box_from_json(b));
    return s;
  });
}

/// Per-point labels, faces, boxes and support edges of a generated scene.
inline json ground_truth_to_json(const GroundTruth& gt) {
  json faces = json::array(), boxes = json::array(), support = json::array();
  for (const auto& f : gt.faces) {
    json poly = json::array();
    for (const auto& v : f.polygon) poly.push_back(to_json(v));
    faces.push_back({{"object", f.object}, {"polygon", poly}, {"normal", to_json(f.normal)}});
  }
  for (const auto& b : gt.boxes) boxes.push_back(box_to_json(b));
  for (const auto& [a, b] : gt.support) support.push_back({a, b});
  return {{"ground_object", gt.ground_object},
          {"table", {gt.table_x, gt.table_y}},
          {"faces", faces},
          {"boxes", boxes},
          {"support", support},
          {"point_primitive", gt.point_primitive},
          {"point_object", gt.point_object}};
}

inline GroundTruth ground_truth_from_json(const json& j) {
  return parse_guard("ground truth", [&] {
    GroundTruth gt;
    gt.ground_object = j.at("ground_object").get<int>();
    gt.table_x = j.at("table").at(0).get<double>();
    gt.table_y = j.at("table").at(1).get<double>();
    for (const auto& f : j.at("faces")) {
      SynthFace face;
      face.object = f.at("object").get<int>();
      for (const auto& v : f.at("polygon")) face.polygon.push_back(vec3_from_json(v));
      face.normal = vec3_from_json(f.at("normal"));
      gt.faces.push_back(std::move(face));
    }
    for (const auto& b : j.at("boxes")) gt.boxes.push_back(box_from_json(b));
    for (const auto& s : j.at("support")) gt.support.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
    gt.point_primitive = j.at("point_primitive").get<std::vector<int>>();
    gt.point_object = j.at("point_object").get<std::vector<int>>();
    return gt;
  });
}

}  // namespace strata::io
