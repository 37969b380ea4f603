#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/core/log.hpp"
#include "strata/geometry/bbox.hpp"
#include "strata/geometry/polygon3d.hpp"
#include "strata/labeling/qip.hpp"
#include "strata/pattern/pattern_graph.hpp"

namespace strata {

struct SupportConfig {
  double theta_adj = 0.02;
  double eps_gap = 0.04;  // 2 * theta_adj
  double rho_min = 0.3;
  double ground_min_area = 0.1;
  double min_half_extent = 0.005;
  std::optional<int> ground_id;  // explicit ground primitive, overrides detection
};

struct SceneObject {
  int id = 0;  // 1..K; 0 is the root
  std::vector<int> primitive_ids;
  Bbox bbox;
  bool contains_ground = false;
};

enum class SupportPhase { Local, Global, Root };

inline const char* to_string(SupportPhase p) {
  switch (p) {
    case SupportPhase::Local: return "local";
    case SupportPhase::Global: return "global";
    case SupportPhase::Root: return "root";
  }
  return "?";
}

inline SupportPhase support_phase_from_string(const std::string& s) {
  if (s == "local") return SupportPhase::Local;
  if (s == "global") return SupportPhase::Global;
  if (s == "root") return SupportPhase::Root;
  throw Error(ErrorKind::MalformedGraph, "unknown support phase '" + s + "'");
}

/// SUPP(from -> to): `from` supports `to`. Node 0 is the invisible root.
struct SupportEdge {
  int from = 0;
  int to = 0;
  SupportPhase phase = SupportPhase::Local;
  double evidence = 0.0;  // larger is stronger; used only to break cycles
};

struct SceneHierarchyGraph {
  static constexpr int kRoot = 0;
  std::vector<SceneObject> objects;  // objects[k].id == k + 1
  std::vector<SupportEdge> edges;    // sorted by (from, to)
  PatternGraph primitive_level;
  std::vector<std::string> diagnostics;

  int node_count() const { return static_cast<int>(objects.size()) + 1; }
  std::vector<int> supporters_of(int node) const {
    std::vector<int> out;
    for (const auto& e : edges)
      if (e.to == node) out.push_back(e.from);
    return out;
  }
  bool has_edge(int from, int to) const {
    return std::any_of(edges.begin(), edges.end(), [&](const SupportEdge& e) { return e.from == from && e.to == to; });
  }
};

/// Lowest horizontal primitive (by centroid height) whose hull area reaches
/// ground_min_area; falls back to the largest horizontal when none does.
inline std::optional<int> designate_ground(std::span<const PlanePrimitive> prims, const GravityPrior& g,
                                           const SupportConfig& cfg) {
  if (cfg.ground_id) return cfg.ground_id;
  const PlanePrimitive* best = nullptr;
  const PlanePrimitive* largest = nullptr;
  double largest_area = -1.0;
  for (const auto& p : prims) {
    if (!p.is_horizontal) continue;
    double a = hull_area(p, g.up());
    if (a > largest_area) {
      largest_area = a;
      largest = &p;
    }
    if (a >= cfg.ground_min_area && (!best || g.height(p.centroid) < g.height(best->centroid))) best = &p;
  }
  if (best) return best->id;
  if (largest) {
    log::warn("no horizontal primitive reaches the ground area threshold; using the largest horizontal ", largest->id);
    return largest->id;
  }
  log::warn("no horizontal primitive found; no ground designated");
  return std::nullopt;
}

/// One object per used label, numbered 1..K in order of first appearance over
/// the primitives of the instance.
inline std::vector<SceneObject> assemble_objects(const LabelAssignment& x, const std::vector<int>& vertex_ids,
                                                 std::span<const PlanePrimitive> prims, const GravityPrior& g,
                                                 const SupportConfig& cfg) {
  if (x.labels.size() != vertex_ids.size()) throw Error(ErrorKind::Infeasible, "assignment does not cover every primitive");
  auto canon = canonical_labels(x);
  int k = canon.empty() ? 0 : *std::max_element(canon.begin(), canon.end()) + 1;
  std::vector<SceneObject> objs(k);
  for (int i = 0; i < k; ++i) objs[i].id = i + 1;
  for (std::size_t v = 0; v < vertex_ids.size(); ++v) objs[canon[v]].primitive_ids.push_back(vertex_ids[v]);

  auto ground = designate_ground(prims, g, cfg);
  for (auto& o : objs) {
    std::vector<PlanePrimitive> members;
    for (int id : o.primitive_ids) members.push_back(find_primitive(prims, id));
    o.bbox = object_bbox(members, g, cfg.min_half_extent);
    o.contains_ground = ground && std::find(o.primitive_ids.begin(), o.primitive_ids.end(), *ground) != o.primitive_ids.end();
  }
  return objs;
}

/// Whether a support-pattern edge runs from a primitive of `ci` (the
/// horizontal supporter side) to a primitive of `cj`. Directional.
inline bool local_support(const SceneObject& ci, const SceneObject& cj, const PatternGraph& pg) {
  auto in = [](const SceneObject& o, int id) {
    return std::find(o.primitive_ids.begin(), o.primitive_ids.end(), id) != o.primitive_ids.end();
  };
  for (const auto& e : pg.edges)
    if (is_support(e.pattern) && in(ci, e.first) && in(cj, e.second)) return true;
  return false;
}

struct GlobalSupportMatch {
  int primitive_id = 0;
  double overlap_area = 0.0;
  double overlap_fraction = 0.0;
  double gap = 0.0;
};

/// Best horizontal primitive of `ci` under the bbox of `cj`: its plane lies at
/// most eps_gap below the bbox bottom (and no more than theta_adj above it,
/// for noise), and its ground-projected hull covers at least rho_min of the
/// bottom face. Ties on overlap go to the smaller gap.
inline std::optional<GlobalSupportMatch> global_support(const SceneObject& ci, const SceneObject& cj,
                                                        std::span<const PlanePrimitive> prims, const GravityPrior& g,
                                                        const SupportConfig& cfg) {
  auto [e1, e2] = ground_basis(g);
  auto flat = [&](const Vec3& p) { return Vec2(p.dot(e1), p.dot(e2)); };
  std::vector<Vec2> bottom;
  for (const auto& c : cj.bbox.bottom_face()) bottom.push_back(flat(c));
  const double bottom_area = std::abs(polygon_area(bottom));
  if (!(bottom_area > 0)) return std::nullopt;
  const double zb = cj.bbox.bottom_height(g);
  const Vec3 below = cj.bbox.center - cj.bbox.half_extents[2] * g.up();

  std::optional<GlobalSupportMatch> best;
  for (int id : ci.primitive_ids) {
    const auto& p = find_primitive(prims, id);
    if (!p.is_horizontal) continue;
    const double gap = zb - g.height(project_along_gravity(below, p, g));
    if (gap > cfg.eps_gap || gap < -cfg.theta_adj) continue;
    std::vector<Vec2> hull;
    for (const auto& v : p.hull) hull.push_back(flat(v));
    std::vector<Vec2> ccw = convex_hull_2d(hull);
    const double ov = convex_overlap_area(ccw, bottom);
    if (ov < cfg.rho_min * bottom_area) continue;
    GlobalSupportMatch m{id, ov, ov / bottom_area, gap};
    if (!best || ov > best->overlap_area + 1e-12 ||
        (std::abs(ov - best->overlap_area) <= 1e-12 && std::abs(gap) < std::abs(best->gap)))
      best = m;
  }
  return best;
}

namespace detail {

inline void sort_edges(std::vector<SupportEdge>& edges) {
  std::sort(edges.begin(), edges.end(),
            [](const SupportEdge& a, const SupportEdge& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
}

// A directed cycle among object nodes, as edge indices, or empty.
inline std::vector<std::size_t> find_cycle(const std::vector<SupportEdge>& edges, int nodes) {
  std::vector<std::vector<std::size_t>> out(nodes);
  for (std::size_t k = 0; k < edges.size(); ++k) out[edges[k].from].push_back(k);
  std::vector<int> state(nodes, 0);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> cycle;
  std::function<bool(int)> dfs = [&](int u) {
    state[u] = 1;
    for (std::size_t k : out[u]) {
      int v = edges[k].to;
      stack.push_back(k);
      if (state[v] == 1) {
        auto it = std::find_if(stack.begin(), stack.end(), [&](std::size_t s) { return edges[s].from == v; });
        cycle.assign(it, stack.end());
        return true;
      }
      if (state[v] == 0 && dfs(v)) return true;
      stack.pop_back();
    }
    state[u] = 2;
    return false;
  };
  for (int s = 0; s < nodes; ++s)
    if (state[s] == 0 && dfs(s)) return cycle;
  return {};
}

}  // namespace detail

/// Local support, then global support for pairs still unlinked, then root
/// attachment of every object without a supporter. Cycles (possible only
/// through global edges or noisy local ones) are broken at their weakest edge.
inline SceneHierarchyGraph infer_hierarchy(std::vector<SceneObject> objects, const PatternGraph& pg,
                                           std::span<const PlanePrimitive> prims, const GravityPrior& g,
                                           const SupportConfig& cfg) {
  SceneHierarchyGraph h;
  h.objects = std::move(objects);
  h.primitive_level = pg;
  const int k = static_cast<int>(h.objects.size());
  for (int i = 0; i < k; ++i)
    if (h.objects[i].id != i + 1) throw Error(ErrorKind::MalformedGraph, "objects must be numbered 1..K in order");

  // phase 1
  for (const auto& ci : h.objects)
    for (const auto& cj : h.objects) {
      if (ci.id == cj.id || cj.contains_ground) continue;
      if (!local_support(ci, cj, pg)) continue;
      int count = 0;
      for (const auto& e : pg.edges)
        if (is_support(e.pattern) && std::count(ci.primitive_ids.begin(), ci.primitive_ids.end(), e.first) &&
            std::count(cj.primitive_ids.begin(), cj.primitive_ids.end(), e.second))
          ++count;
      h.edges.push_back({ci.id, cj.id, SupportPhase::Local, 1.0 + count});
    }

  // phase 2: against the post-phase-1 state, one best supporter per supportee
  std::vector<SupportEdge> global;
  for (const auto& cj : h.objects) {
    if (cj.contains_ground) continue;
    std::optional<GlobalSupportMatch> best;
    int best_from = -1;
    for (const auto& ci : h.objects) {
      if (ci.id == cj.id || h.has_edge(ci.id, cj.id) || h.has_edge(cj.id, ci.id)) continue;
      auto m = global_support(ci, cj, prims, g, cfg);
      if (m && (!best || m->overlap_area > best->overlap_area + 1e-12 ||
                (std::abs(m->overlap_area - best->overlap_area) <= 1e-12 && std::abs(m->gap) < std::abs(best->gap)))) {
        best = m;
        best_from = ci.id;
      }
    }
    if (best) global.push_back({best_from, cj.id, SupportPhase::Global, best->overlap_fraction});
  }
  h.edges.insert(h.edges.end(), global.begin(), global.end());
  detail::sort_edges(h.edges);

  while (true) {
    auto cycle = detail::find_cycle(h.edges, k + 1);
    if (cycle.empty()) break;
    std::size_t weakest = cycle.front();
    for (std::size_t e : cycle) {
      const auto& a = h.edges[e];
      const auto& b = h.edges[weakest];
      if (a.evidence < b.evidence || (a.evidence == b.evidence && std::tie(a.from, a.to) > std::tie(b.from, b.to)))
        weakest = e;
    }
    std::ostringstream msg;
    msg << "support cycle broken by removing " << h.edges[weakest].from << " -> " << h.edges[weakest].to << " ("
        << to_string(h.edges[weakest].phase) << ")";
    h.diagnostics.push_back(msg.str());
    log::warn(msg.str());
    h.edges.erase(h.edges.begin() + static_cast<std::ptrdiff_t>(weakest));
  }

  // phase 3
  for (const auto& o : h.objects)
    if (h.supporters_of(o.id).empty()) h.edges.push_back({SceneHierarchyGraph::kRoot, o.id, SupportPhase::Root, 0.0});
  detail::sort_edges(h.edges);
  return h;
}

/// Checks the structural invariants; throws MalformedGraph on violation.
inline void validate_hierarchy(const SceneHierarchyGraph& h) {
  const int n = h.node_count();
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  int ground_objects = 0;
  for (const auto& o : h.objects) ground_objects += o.contains_ground;
  if (ground_objects > 1) throw Error(ErrorKind::MalformedGraph, "more than one object contains the ground");
  for (const auto& e : h.edges) {
    if (e.from == e.to) throw Error(ErrorKind::MalformedGraph, "self support edge on " + std::to_string(e.from));
    if (e.from < 0 || e.to < 0 || e.from >= n || e.to >= n) throw Error(ErrorKind::MalformedGraph, "edge endpoint out of range");
    if (e.to == SceneHierarchyGraph::kRoot) throw Error(ErrorKind::MalformedGraph, "root cannot be supported");
    ++indeg[e.to];
    out[e.from].push_back(e.to);
  }
  for (int v = 1; v < n; ++v)
    if (indeg[v] == 0) throw Error(ErrorKind::MalformedGraph, "object " + std::to_string(v) + " has no supporter");
  for (const auto& o : h.objects)
    if (o.contains_ground) {
      auto s = h.supporters_of(o.id);
      if (s != std::vector<int>{SceneHierarchyGraph::kRoot})
        throw Error(ErrorKind::MalformedGraph, "ground object must be supported by the root only");
    }
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : out[u])
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
  }
  for (int v = 0; v < n; ++v)
    if (!seen[v]) throw Error(ErrorKind::MalformedGraph, "object " + std::to_string(v) + " unreachable from root");
}

/// Rows are supported nodes, columns supporting nodes, index 0 the root.
inline std::vector<std::vector<int>> to_affinity_matrix(const SceneHierarchyGraph& h) {
  const int n = h.node_count();
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 0));
  for (const auto& e : h.edges) m[e.to][e.from] = 1;
  return m;
}

/// Support edges encoded by an affinity matrix, sorted by (from, to). Phases
/// are not recoverable: edges out of the root are tagged root, others local.
inline std::vector<SupportEdge> edges_from_affinity(const std::vector<std::vector<int>>& m) {
  std::vector<SupportEdge> edges;
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() != m.size()) throw Error(ErrorKind::Shape, "affinity matrix must be square");
    for (std::size_t c = 0; c < m.size(); ++c)
      if (m[r][c]) edges.push_back({static_cast<int>(c), static_cast<int>(r), c == 0 ? SupportPhase::Root : SupportPhase::Local, 0.0});
  }
  detail::sort_edges(edges);
  return edges;
}

inline std::string affinity_csv(const SceneHierarchyGraph& h) {
  auto m = to_affinity_matrix(h);
  std::ostringstream os;
  os << "supported\\supporting";
  for (int c = 0; c < h.node_count(); ++c) os << ',' << (c == 0 ? std::string("root") : "C" + std::to_string(c));
  os << '\n';
  for (int r = 0; r < h.node_count(); ++r) {
    os << (r == 0 ? std::string("root") : "C" + std::to_string(r));
    for (int c = 0; c < h.node_count(); ++c) os << ',' << m[r][c];
    os << '\n';
  }
  return os.str();
}

/// Object-level DOT graph; with `nested`, each object becomes a cluster holding
/// its primitives and their intra-object pattern edges.
inline std::string hierarchy_dot(const SceneHierarchyGraph& h, bool nested = false) {
  std::ostringstream os;
  os << "digraph hierarchy {\n  compound=true;\n  root [shape=doublecircle, label=\"root\"];\n";
  for (const auto& o : h.objects) {
    if (nested) {
      os << "  subgraph cluster_C" << o.id << " {\n    label=\"C" << o.id << (o.contains_ground ? " (ground)" : "")
         << "\";\n    C" << o.id << " [shape=point];\n";
      for (int p : o.primitive_ids) os << "    p" << p << " [shape=box, label=\"prim " << p << "\"];\n";
      for (const auto& e : h.primitive_level.edges)
        if (std::count(o.primitive_ids.begin(), o.primitive_ids.end(), e.first) &&
            std::count(o.primitive_ids.begin(), o.primitive_ids.end(), e.second))
          os << "    p" << e.first << " -> p" << e.second << " [dir=none, style="
             << (e.connection() == Connection::LocalInner ? "dashed" : "solid") << "];\n";
      os << "  }\n";
    } else {
      os << "  C" << o.id << " [shape=ellipse, label=\"C" << o.id << (o.contains_ground ? " (ground)" : "") << "\"];\n";
    }
  }
  for (const auto& e : h.edges) {
    os << "  " << (e.from == 0 ? std::string("root") : "C" + std::to_string(e.from)) << " -> C" << e.to;
    os << " [label=\"" << to_string(e.phase) << "\"";
    if (e.phase == SupportPhase::Global) os << ", style=dashed";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace strata
