#pragma once

#include <set>
#include <utility>
#include <vector>

#include "strata/eval/segmentation.hpp"
#include "strata/eval/spectral.hpp"
#include "strata/support/hierarchy.hpp"

namespace strata {

/// Rule 1 drops every edge touching an unmatched (mis-segmented) object;
/// rule 2 hangs any node left without edges under the root. The result is
/// symmetrized and keeps the root as node 0.
inline GraphMatrix apply_significance_rules(const SceneHierarchyGraph& h, const ObjectMatching& m) {
  const int n = h.node_count();
  auto matched = [&](int node) { return node == SceneHierarchyGraph::kRoot || m.gt_of(node) != 0; };
  GraphMatrix g(n);
  for (const auto& e : h.edges)
    if (matched(e.from) && matched(e.to)) g.connect(e.from, e.to);
  for (int v = 1; v < n; ++v)
    if (g.degree(v) == 0) g.connect(SceneHierarchyGraph::kRoot, v);
  return g;
}

/// Ground-truth graph, symmetrized; every node already has a supporter.
inline GraphMatrix symmetrize(const SceneHierarchyGraph& h) {
  GraphMatrix g(h.node_count());
  for (const auto& e : h.edges) g.connect(e.from, e.to);
  for (int v = 1; v < g.size(); ++v)
    if (g.degree(v) == 0) g.connect(SceneHierarchyGraph::kRoot, v);
  return g;
}

/// Predicted graph re-indexed onto the ground truth's vertex set. Matched
/// predictions take their ground-truth id, unmatched ground-truth objects
/// become root-attached placeholders, unmatched predictions drop out.
inline GraphMatrix align_prediction(const SceneHierarchyGraph& pred, const ObjectMatching& m, int gt_nodes) {
  GraphMatrix g(gt_nodes);
  auto to_gt = [&](int node) { return node == SceneHierarchyGraph::kRoot ? 0 : m.gt_of(node); };
  for (const auto& e : pred.edges) {
    int a = to_gt(e.from), b = to_gt(e.to);
    if ((e.from != 0 && a == 0) || b == 0) continue;
    if (a < gt_nodes && b < gt_nodes) g.connect(a, b);
  }
  for (int v = 1; v < gt_nodes; ++v)
    if (g.degree(v) == 0) g.connect(SceneHierarchyGraph::kRoot, v);
  return g;
}

struct SupportEdgeScore {
  int true_positives = 0;
  int predicted = 0;  // non-root predicted edges between matched objects
  int actual = 0;     // non-root ground-truth edges
  bool exact = false; // every object matched and the full edge sets agree

  double precision() const { return predicted ? static_cast<double>(true_positives) / predicted : 1.0; }
  double recall() const { return actual ? static_cast<double>(true_positives) / actual : 1.0; }
};

/// Support edges compared through the object matching. Precision and recall
/// count object-to-object edges only; root attachments enter `exact` alone.
inline SupportEdgeScore score_support_edges(const SceneHierarchyGraph& pred, const SceneHierarchyGraph& gt,
                                            const ObjectMatching& m) {
  SupportEdgeScore s;
  std::set<std::pair<int, int>> truth, mapped;
  for (const auto& e : gt.edges) truth.insert({e.from, e.to});
  bool all_mapped = true;
  for (const auto& e : pred.edges) {
    int a = e.from == 0 ? 0 : m.gt_of(e.from), b = m.gt_of(e.to);
    if ((e.from != 0 && a == 0) || b == 0) {
      all_mapped = false;
      continue;
    }
    mapped.insert({a, b});
  }
  for (const auto& [a, b] : truth)
    if (a != 0) {
      ++s.actual;
      s.true_positives += mapped.count({a, b});
    }
  for (const auto& [a, b] : mapped) s.predicted += a != 0;
  bool all_gt_matched = true;
  for (const auto& o : gt.objects) all_gt_matched = all_gt_matched && m.pred_of(o.id) != 0;
  s.exact = all_mapped && all_gt_matched && pred.objects.size() == gt.objects.size() && mapped == truth;
  return s;
}

struct GraphScores {
  double cheeger = 0.0;
  double spectral = 0.0;
};

inline GraphScores score_graphs(const SceneHierarchyGraph& pred, const SceneHierarchyGraph& gt, const ObjectMatching& m) {
  // Rule 1 and 2 on the prediction, then alignment onto the gt vertex set.
  SceneHierarchyGraph kept = pred;
  auto sig = apply_significance_rules(pred, m);
  kept.edges.clear();
  for (int a = 0; a < sig.size(); ++a)
    for (int b = a + 1; b < sig.size(); ++b)
      if (sig.adj[a][b]) kept.edges.push_back({a, b, SupportPhase::Local, 0.0});
  auto gs = align_prediction(kept, m, gt.node_count());
  auto gg = symmetrize(gt);
  return {cheeger_section(gs, gg), spectral_section(gs, gg)};
}

}  // namespace strata
