#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/pattern/pattern_graph.hpp"

namespace strata {

struct QipConstants {
  double d0 = 1.0;
  double f0 = 1.0;
  double f1 = 1000.0;
  double w_d = 0.3;
  double w_r = 0.7;
  double delta = 0.2;
  double tau = 0.86;
  double theta_adj = 0.02;
};

/// Signed watertightness score: the ratio itself when it is at least delta,
/// its negation below that.
inline double f_transform(double rto, double delta) { return rto >= delta ? rto : -rto; }

/// Labeling program over N vertices and N labels (label j is "vertex j's own").
/// Vertex k corresponds to primitive ids[k]. Hard exclusions replace the
/// minus-infinity data cells.
struct QipInstance {
  int n = 0;
  std::vector<int> ids;
  std::vector<std::map<int, double>> data;  // per vertex: label -> weight (absent = 0)
  std::vector<std::set<int>> excluded;      // per vertex: forbidden labels
  std::map<std::pair<int, int>, double> pair_weight;  // i < j, adjacency edges only
  QipConstants constants;

  double data_at(int v, int l) const {
    auto it = data[v].find(l);
    return it == data[v].end() ? 0.0 : it->second;
  }
  bool is_excluded(int v, int l) const { return excluded[v].count(l) > 0; }

  /// Connected components over pair-weight edges; each sorted ascending.
  std::vector<std::vector<int>> components() const {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (const auto& [e, w] : pair_weight) {
      int a = find(e.first), b = find(e.second);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<int, std::vector<int>> groups;
    for (int v = 0; v < n; ++v) groups[find(v)].push_back(v);
    std::vector<std::vector<int>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
  }
};

/// One label per vertex, indexed by vertex position in QipInstance::ids.
struct LabelAssignment {
  std::vector<int> labels;
  bool operator==(const LabelAssignment&) const = default;
};

inline int vertex_index(const QipInstance& inst, int id) {
  auto it = std::find(inst.ids.begin(), inst.ids.end(), id);
  if (it == inst.ids.end()) throw Error(ErrorKind::MalformedGraph, "edge references unknown node " + std::to_string(id));
  return static_cast<int>(it - inst.ids.begin());
}

/// Data and smooth terms from the classified pattern graph. Contributions of
/// several edges to one cell add up; support edges forbid the two cross cells
/// and carry -f1 as pair weight.
inline QipInstance build_qip(const PatternGraph& pg, const QipConstants& c) {
  QipInstance inst;
  inst.n = static_cast<int>(pg.nodes.size());
  inst.ids = pg.nodes;
  inst.data.resize(inst.n);
  inst.excluded.resize(inst.n);
  inst.constants = c;

  for (const auto& e : pg.edges) {
    const int i = vertex_index(inst, e.first), j = vertex_index(inst, e.second);
    if (i == j) throw Error(ErrorKind::MalformedGraph, "self edge on node " + std::to_string(e.first));
    const int pt = static_cast<int>(e.pattern);
    if (pattern_needs_ratio(e.pattern) && !e.ratio)
      throw Error(ErrorKind::MalformedGraph, "pattern P" + std::to_string(pt) + " edge " + std::to_string(e.first) + "-" +
                                                 std::to_string(e.second) + " has no ratio");
    const double rto = e.ratio.value_or(0.0);
    const double dist = std::clamp(1.0 - e.distance / c.theta_adj, 0.0, 1.0);
    auto& pw = inst.pair_weight[{std::min(i, j), std::max(i, j)}];
    if (pt <= 4) {
      inst.data[i][i] += c.d0;
      inst.excluded[i].insert(j);
      inst.excluded[j].insert(i);
      pw += -c.f1;
    } else if (pt == 5) {
      inst.data[i][i] += c.d0 * rto;
      inst.excluded[i].insert(j);
      inst.excluded[j].insert(i);
      pw += -c.f1;
    } else if (pt == 6 || pt == 7) {
      inst.data[i][j] += c.d0 * rto;
      inst.data[j][i] += c.d0 * rto;
      pw += (c.w_d * dist + c.w_r * rto) * c.f0;
    } else {
      const double fr = f_transform(rto, c.delta);
      inst.data[i][j] += c.d0 * fr;
      inst.data[j][i] += c.d0 * fr;
      pw += (c.w_d * dist + c.w_r * fr) * c.f0;
    }
  }
  for (int v = 0; v < inst.n; ++v)
    for (int l : inst.excluded[v]) inst.data[v].erase(l);
  return inst;
}

inline void check_feasible(const QipInstance& inst, const LabelAssignment& x) {
  if (static_cast<int>(x.labels.size()) != inst.n) throw Error(ErrorKind::Infeasible, "assignment size does not match instance");
  for (int v = 0; v < inst.n; ++v) {
    int l = x.labels[v];
    if (l < 0 || l >= inst.n) throw Error(ErrorKind::Infeasible, "label out of range for vertex " + std::to_string(v));
    if (inst.is_excluded(v, l))
      throw Error(ErrorKind::Infeasible, "vertex " + std::to_string(v) + " assigned excluded label " + std::to_string(l));
  }
}

/// E_data + E_smooth. Each unordered same-label edge counts once. The
/// summation order is fixed (vertices, then edges by index) so equal
/// assignments always produce bit-identical values.
inline double objective_value(const QipInstance& inst, const LabelAssignment& x) {
  check_feasible(inst, x);
  double e = 0.0;
  for (int v = 0; v < inst.n; ++v) e += inst.data_at(v, x.labels[v]);
  for (const auto& [edge, w] : inst.pair_weight)
    if (x.labels[edge.first] == x.labels[edge.second]) e += w;
  return e;
}

/// Same as objective_value restricted to one component's vertices and edges.
inline double component_value(const QipInstance& inst, const std::vector<int>& comp, const std::vector<int>& labels) {
  double e = 0.0;
  for (int v : comp) e += inst.data_at(v, labels[v]);
  for (const auto& [edge, w] : inst.pair_weight)
    if (labels[edge.first] == labels[edge.second] && std::binary_search(comp.begin(), comp.end(), edge.first)) e += w;
  return e;
}

/// Renumbers labels 0..K-1 in order of first appearance over vertices.
inline std::vector<int> canonical_labels(const LabelAssignment& x) {
  std::map<int, int> seen;
  std::vector<int> out(x.labels.size());
  for (std::size_t v = 0; v < x.labels.size(); ++v) {
    auto [it, fresh] = seen.emplace(x.labels[v], static_cast<int>(seen.size()));
    out[v] = it->second;
  }
  return out;
}

}  // namespace strata
