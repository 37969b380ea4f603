#pragma once

// Independent reference implementations used only by tests.

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "strata/eval/spectral.hpp"
#include "strata/labeling/qip.hpp"
#include "strata/pattern/pattern_graph.hpp"

namespace strata::oracle {

/// Connected random pattern graph on n nodes: a random spanning tree plus
/// extra edges with probability `extra`. Patterns, ratios and distances are
/// uniform over their ranges.
inline PatternGraph random_pattern_graph(std::mt19937_64& rng, int n, double extra = 0.3, double theta_adj = 0.02) {
  PatternGraph pg;
  for (int v = 0; v < n; ++v) pg.nodes.push_back(v);
  std::uniform_int_distribution<int> pat(1, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto add = [&](int a, int b) {
    PatternEdge e;
    if (u01(rng) < 0.5) std::swap(a, b);
    e.first = a;
    e.second = b;
    e.pattern = pattern_from_int(pat(rng));
    if (pattern_needs_ratio(e.pattern)) e.ratio = u01(rng);
    e.distance = theta_adj * u01(rng);
    pg.edges.push_back(e);
  };
  std::vector<std::vector<char>> has(n, std::vector<char>(n, 0));
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    int p = parent(rng);
    has[p][v] = has[v][p] = 1;
    add(p, v);
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (!has[a][b] && u01(rng) < extra) {
        has[a][b] = has[b][a] = 1;
        add(a, b);
      }
  return pg;
}

struct BruteForceResult {
  double value = -std::numeric_limits<double>::infinity();
  LabelAssignment best;
  std::size_t feasible = 0;
};

/// Enumerates all N^N label vectors. The value of each feasible one is summed
/// in the same order objective_value uses, so optima compare exactly.
inline BruteForceResult brute_force_qip(const QipInstance& inst) {
  const int n = inst.n;
  std::vector<double> data(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<char> bad(static_cast<std::size_t>(n) * n, 0);
  for (int v = 0; v < n; ++v)
    for (int l = 0; l < n; ++l) {
      data[v * n + l] = inst.data_at(v, l);
      bad[v * n + l] = inst.is_excluded(v, l);
    }
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;
  for (const auto& [e, w] : inst.pair_weight) {
    edges.push_back(e);
    weights.push_back(w);
  }
  BruteForceResult r;
  std::vector<int> x(n, 0);
  while (true) {
    bool ok = true;
    for (int v = 0; v < n && ok; ++v) ok = !bad[v * n + x[v]];
    if (ok) {
      ++r.feasible;
      double e = 0.0;
      for (int v = 0; v < n; ++v) e += data[v * n + x[v]];
      for (std::size_t k = 0; k < edges.size(); ++k)
        if (x[edges[k].first] == x[edges[k].second]) e += weights[k];
      if (e > r.value) {
        r.value = e;
        r.best.labels = x;
      }
    }
    int pos = n - 1;
    while (pos >= 0 && ++x[pos] == n) x[pos--] = 0;
    if (pos < 0) break;
  }
  return r;
}

/// Random connected graph: spanning tree plus extra edges with probability p.
inline GraphMatrix random_connected_graph(std::mt19937_64& rng, int n, double p) {
  GraphMatrix g(n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int v = 1; v < n; ++v) g.connect(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (u01(rng) < p) g.connect(a, b);
  return g;
}

/// Cheeger constant by enumerating every proper vertex subset:
/// min |E(S, S')| / min(vol S, vol S').
inline double cheeger_constant(const GraphMatrix& g) {
  const int n = g.size();
  std::vector<int> deg(n);
  for (int v = 0; v < n; ++v) deg[v] = g.degree(v);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t s = 1; s + 1 < (1u << n); ++s) {
    int cut = 0, vol_s = 0, vol_c = 0;
    for (int a = 0; a < n; ++a) {
      const bool in_a = (s >> a) & 1u;
      (in_a ? vol_s : vol_c) += deg[a];
      for (int b = a + 1; b < n; ++b)
        if (g.adj[a][b] && in_a != static_cast<bool>((s >> b) & 1u)) ++cut;
    }
    best = std::min(best, static_cast<double>(cut) / std::min(vol_s, vol_c));
  }
  return best;
}

}  // namespace strata::oracle
