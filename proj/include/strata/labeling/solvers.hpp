#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <tuple>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/core/log.hpp"
#include "strata/labeling/qip.hpp"

namespace strata {

inline constexpr int kDefaultExactCap = 14;

namespace detail {

struct Neighbor {
  int v;
  double w;
};

inline std::vector<std::vector<Neighbor>> neighbor_lists(const QipInstance& inst) {
  std::vector<std::vector<Neighbor>> nb(inst.n);
  for (const auto& [e, w] : inst.pair_weight) {
    nb[e.first].push_back({e.second, w});
    nb[e.second].push_back({e.first, w});
  }
  return nb;
}

/// Branch and bound over one component. Labels are restricted to the
/// component's own vertex labels: labels owned by other components carry no
/// data here, so any of them is interchangeable with an unused local one.
class ExactComponentSolver {
 public:
  ExactComponentSolver(const QipInstance& inst, const std::vector<int>& comp,
                       const std::vector<std::vector<Neighbor>>& nb)
      : inst_(inst), comp_(comp), nb_(nb) {
    const int m = static_cast<int>(comp.size());
    pos_.assign(inst.n, -1);
    for (int k = 0; k < m; ++k) pos_[comp[k]] = k;

    // last position (in vertex order) at which each label is touched by data or exclusion
    last_touch_.assign(inst.n, -1);
    for (int k = 0; k < m; ++k) {
      int v = comp[k];
      for (const auto& [l, w] : inst.data[v]) last_touch_[l] = std::max(last_touch_[l], k);
      for (int l : inst.excluded[v]) last_touch_[l] = std::max(last_touch_[l], k);
    }

    rem_bound_.assign(m + 1, 0.0);
    std::vector<double> edge_at(m, 0.0);
    for (const auto& [e, w] : inst.pair_weight)
      if (pos_[e.first] >= 0 && w > 0) edge_at[std::max(pos_[e.first], pos_[e.second])] += w;
    for (int k = m - 1; k >= 0; --k) {
      double best = 0.0;
      for (const auto& [l, w] : inst.data[comp[k]])
        if (pos_[l] >= 0) best = std::max(best, w);
      rem_bound_[k] = rem_bound_[k + 1] + best + edge_at[k];
    }
    labels_.assign(inst.n, -1);
    used_.assign(inst.n, 0);
  }

  std::vector<int> solve() {
    best_value_ = -std::numeric_limits<double>::infinity();
    dfs(0, 0.0);
    return best_;
  }
  double best_value() const { return best_value_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  void dfs(int k, double score) {
    ++nodes_;
    const int m = static_cast<int>(comp_.size());
    if (k == m) {
      if (score < best_value_ - slack()) return;
      double exact = component_value(inst_, comp_, labels_);
      if (exact > best_value_) {
        best_value_ = exact;
        best_ = labels_;
      }
      return;
    }
    if (score + rem_bound_[k] < best_value_ - slack()) return;

    const int v = comp_[k];
    bool fresh_tried = false;
    for (int l : comp_) {
      if (inst_.is_excluded(v, l)) continue;
      if (used_[l] == 0 && last_touch_[l] < k) {
        // untouched free labels are interchangeable; the smallest stands for all
        if (fresh_tried) continue;
        fresh_tried = true;
      }
      double gain = inst_.data_at(v, l);
      for (const auto& nb : nb_[v])
        if (labels_[nb.v] == l) gain += nb.w;
      labels_[v] = l;
      ++used_[l];
      dfs(k + 1, score + gain);
      --used_[l];
      labels_[v] = -1;
    }
  }

  double slack() const { return 1e-9 * std::max(1.0, std::abs(best_value_)); }

  const QipInstance& inst_;
  const std::vector<int>& comp_;
  const std::vector<std::vector<Neighbor>>& nb_;
  std::vector<int> pos_, last_touch_, labels_, used_, best_;
  std::vector<double> rem_bound_;
  double best_value_ = 0.0;
  std::uint64_t nodes_ = 0;
};

}  // namespace detail

/// Global maximizer of objective_value. Components are solved independently;
/// among optimal assignments the lexicographically smallest label vector wins.
inline LabelAssignment solve_exact(const QipInstance& inst, int cap = kDefaultExactCap) {
  LabelAssignment out;
  out.labels.assign(inst.n, -1);
  const auto nb = detail::neighbor_lists(inst);
  for (const auto& comp : inst.components()) {
    if (static_cast<int>(comp.size()) > cap)
      throw Error(ErrorKind::Capacity, "component of " + std::to_string(comp.size()) + " primitives exceeds exact cap " +
                                           std::to_string(cap) + "; use the heuristic solver");
    detail::ExactComponentSolver s(inst, comp, nb);
    auto labels = s.solve();
    if (labels.empty()) throw Error(ErrorKind::Infeasible, "no feasible labeling for component");
    for (int v : comp) out.labels[v] = labels[v];
    log::debug("exact component size ", comp.size(), " nodes ", s.nodes());
  }
  return out;
}

struct HeuristicParams {
  std::uint64_t seed = 0;
  int restarts = 16;
  int max_passes = 200;
};

namespace detail {

/// Block-structured local search on one component.
class HeuristicComponentSolver {
 public:
  HeuristicComponentSolver(const QipInstance& inst, const std::vector<int>& comp,
                           const std::vector<std::vector<Neighbor>>& nb)
      : inst_(inst), comp_(comp), nb_(nb) {}

  std::vector<int> solve(const HeuristicParams& p) {
    labels_.assign(inst_.n, -1);
    for (int v : comp_) labels_[v] = v;
    greedy_merge();
    local_search(p.max_passes);
    std::vector<int> best = labels_;
    double best_value = component_value(inst_, comp_, labels_);

    std::mt19937_64 rng(p.seed ^ (0x9e3779b97f4a7c15ULL * (comp_.front() + 1)));
    const int m = static_cast<int>(comp_.size());
    if (m > 1) {
      for (int r = 0; r < p.restarts; ++r) {
        labels_ = best;
        const int kicks = std::max(1, m / 5);
        std::uniform_int_distribution<int> pick(0, m - 1);
        for (int k = 0; k < kicks; ++k) {
          int v = comp_[pick(rng)];
          int l = comp_[pick(rng)];
          if (!inst_.is_excluded(v, l)) labels_[v] = l;
        }
        local_search(p.max_passes);
        double val = component_value(inst_, comp_, labels_);
        if (val > best_value + 1e-12) {
          best_value = val;
          best = labels_;
        }
      }
    }
    return best;
  }

 private:
  std::vector<int> members(int l) const {
    std::vector<int> out;
    for (int v : comp_)
      if (labels_[v] == l) out.push_back(v);
    return out;
  }

  bool label_used(int l) const {
    for (int v : comp_)
      if (labels_[v] == l) return true;
    return false;
  }

  double block_data(const std::vector<int>& block, int l) const {
    double s = 0.0;
    for (int v : block) s += inst_.data_at(v, l);
    return s;
  }

  bool block_allows(const std::vector<int>& block, int l) const {
    for (int v : block)
      if (inst_.is_excluded(v, l)) return false;
    return true;
  }

  // Sum of pair weights between two blocks (assumed disjoint); sets `hard` on any -f1 edge.
  double cross_weight(const std::vector<int>& a, int lb, bool& hard) const {
    double s = 0.0;
    hard = false;
    for (int v : a)
      for (const auto& nb : nb_[v])
        if (labels_[nb.v] == lb) {
          s += nb.w;
          if (nb.w <= -0.5 * inst_.constants.f1) hard = true;
        }
    return s;
  }

  /// Best label for merging blocks at labels a and b; returns (gain, label).
  std::pair<double, int> best_merge(int a, int b, bool allow_hard) const {
    auto A = members(a), B = members(b);
    bool hard = false;
    double cross = cross_weight(A, b, hard);
    if (hard && !allow_hard) return {-std::numeric_limits<double>::infinity(), -1};
    std::vector<int> U = A;
    U.insert(U.end(), B.begin(), B.end());
    const double base = block_data(A, a) + block_data(B, b);
    double best = -std::numeric_limits<double>::infinity();
    int best_l = -1;
    for (int l : comp_) {
      if (l != a && l != b && label_used(l)) continue;
      if (!block_allows(U, l)) continue;
      double g = block_data(U, l) - base + cross;
      if (g > best + 1e-12) {
        best = g;
        best_l = l;
      }
    }
    return {best, best_l};
  }

  void greedy_merge() {
    std::vector<std::tuple<double, int, int>> edges;
    for (const auto& [e, w] : inst_.pair_weight)
      if (w > 0 && std::binary_search(comp_.begin(), comp_.end(), e.first)) edges.emplace_back(-w, e.first, e.second);
    std::sort(edges.begin(), edges.end());
    for (const auto& [nw, u, v] : edges) {
      int a = labels_[u], b = labels_[v];
      if (a == b) continue;
      auto [gain, l] = best_merge(a, b, false);
      if (l < 0 || gain <= 1e-12) continue;
      for (int w : comp_)
        if (labels_[w] == a || labels_[w] == b) labels_[w] = l;
    }
  }

  bool vertex_moves() {
    bool improved = false;
    for (int v : comp_) {
      const int a = labels_[v];
      double base = inst_.data_at(v, a);
      for (const auto& nb : nb_[v])
        if (labels_[nb.v] == a) base += nb.w;
      double best = 1e-12;
      int best_l = -1;
      bool fresh_tried = false;
      for (int l : comp_) {
        if (l == a || inst_.is_excluded(v, l)) continue;
        bool used = label_used(l);
        if (!used && inst_.data[v].count(l) == 0) {
          if (fresh_tried) continue;
          fresh_tried = true;
        }
        double g = inst_.data_at(v, l);
        for (const auto& nb : nb_[v])
          if (labels_[nb.v] == l) g += nb.w;
        if (g - base > best) {
          best = g - base;
          best_l = l;
        }
      }
      if (best_l >= 0) {
        labels_[v] = best_l;
        improved = true;
      }
    }
    return improved;
  }

  bool block_moves() {
    bool improved = false;
    std::vector<int> used;
    for (int v : comp_)
      if (std::find(used.begin(), used.end(), labels_[v]) == used.end()) used.push_back(labels_[v]);
    // merges
    for (std::size_t i = 0; i < used.size(); ++i)
      for (std::size_t j = i + 1; j < used.size(); ++j) {
        if (!label_used(used[i]) || !label_used(used[j])) continue;
        auto [gain, l] = best_merge(used[i], used[j], false);
        if (l >= 0 && gain > 1e-12) {
          const int a = used[i], b = used[j];
          for (int w : comp_)
            if (labels_[w] == a || labels_[w] == b) labels_[w] = l;
          improved = true;
        }
      }
    // relabel a whole block to a free label
    for (int a : used) {
      if (!label_used(a)) continue;
      auto A = members(a);
      double base = block_data(A, a);
      double best = 1e-12;
      int best_l = -1;
      for (int l : comp_) {
        if (l == a || label_used(l) || !block_allows(A, l)) continue;
        double g = block_data(A, l) - base;
        if (g > best) {
          best = g;
          best_l = l;
        }
      }
      if (best_l >= 0) {
        for (int w : A) labels_[w] = best_l;
        improved = true;
      }
    }
    return improved;
  }

  void local_search(int max_passes) {
    for (int pass = 0; pass < max_passes; ++pass) {
      bool a = vertex_moves();
      bool b = block_moves();
      if (!a && !b) break;
    }
  }

  const QipInstance& inst_;
  const std::vector<int>& comp_;
  const std::vector<std::vector<Neighbor>>& nb_;
  std::vector<int> labels_;
};

}  // namespace detail

/// Greedy edge merging, local search and seeded restarts. Always feasible,
/// deterministic for a given seed, never better than solve_exact.
inline LabelAssignment solve_heuristic(const QipInstance& inst, const HeuristicParams& params = {}) {
  LabelAssignment out;
  out.labels.resize(inst.n);
  for (int v = 0; v < inst.n; ++v) out.labels[v] = v;
  const auto nb = detail::neighbor_lists(inst);
  for (const auto& comp : inst.components()) {
    if (comp.size() == 1) continue;
    detail::HeuristicComponentSolver s(inst, comp, nb);
    auto labels = s.solve(params);
    for (int v : comp) out.labels[v] = labels[v];
  }
  return out;
}

/// Exact branch and bound for components within `cap`, the heuristic for
/// larger ones.
inline LabelAssignment solve_auto(const QipInstance& inst, int cap = kDefaultExactCap, const HeuristicParams& params = {}) {
  LabelAssignment out;
  out.labels.resize(inst.n);
  for (int v = 0; v < inst.n; ++v) out.labels[v] = v;
  const auto nb = detail::neighbor_lists(inst);
  for (const auto& comp : inst.components()) {
    if (comp.size() == 1) continue;
    std::vector<int> labels;
    if (static_cast<int>(comp.size()) <= cap) {
      detail::ExactComponentSolver s(inst, comp, nb);
      labels = s.solve();
      if (labels.empty()) throw Error(ErrorKind::Infeasible, "no feasible labeling for component");
    } else {
      log::info("component of ", comp.size(), " primitives exceeds exact cap ", cap, "; using heuristic");
      detail::HeuristicComponentSolver s(inst, comp, nb);
      labels = s.solve(params);
    }
    for (int v : comp) out.labels[v] = labels[v];
  }
  return out;
}

}  // namespace strata
