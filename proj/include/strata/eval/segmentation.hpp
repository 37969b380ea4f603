#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "strata/core/error.hpp"

namespace strata {

/// Per-pixel object ids, 0 = background. A point-set labeling is a 1-row image.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major

  LabelImage() = default;
  LabelImage(int w, int h, std::vector<int> l) : width(w), height(h), labels(std::move(l)) {
    if (static_cast<std::size_t>(w) * static_cast<std::size_t>(h) != labels.size())
      throw Error(ErrorKind::Shape, "label image size does not match its resolution");
  }
  static LabelImage from_points(std::vector<int> l) {
    int n = static_cast<int>(l.size());
    return LabelImage(n, 1, std::move(l));
  }

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
  int max_label() const { return labels.empty() ? 0 : std::max(0, *std::max_element(labels.begin(), labels.end())); }
  /// Pixel count per id, index 0 unused.
  std::vector<std::int64_t> areas() const {
    std::vector<std::int64_t> a(max_label() + 1, 0);
    for (int l : labels)
      if (l > 0) ++a[l];
    return a;
  }
};

/// matched[p] = gt id for predicted id p, or 0 when unmatched. Index 0 unused.
struct ObjectMatching {
  std::vector<int> pred_to_gt;
  std::vector<int> gt_to_pred;
  std::int64_t weight = 0;  // total intersection of matched pairs

  int gt_of(int pred) const { return pred > 0 && pred < static_cast<int>(pred_to_gt.size()) ? pred_to_gt[pred] : 0; }
  int pred_of(int gt) const { return gt > 0 && gt < static_cast<int>(gt_to_pred.size()) ? gt_to_pred[gt] : 0; }
};

namespace detail {

/// Minimum-cost perfect assignment on a square matrix (potentials form of the
/// Hungarian method). Returns row -> column.
inline std::vector<int> hungarian_min(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace detail

/// Intersection counts, [pred][gt], index 0 unused.
inline std::vector<std::vector<std::int64_t>> intersection_counts(const LabelImage& pred, const LabelImage& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error(ErrorKind::Shape, "prediction and ground truth resolutions differ");
  std::vector<std::vector<std::int64_t>> m(pred.max_label() + 1, std::vector<std::int64_t>(gt.max_label() + 1, 0));
  for (std::size_t i = 0; i < pred.labels.size(); ++i)
    if (pred.labels[i] > 0 && gt.labels[i] > 0) ++m[pred.labels[i]][gt.labels[i]];
  return m;
}

/// Maximum-weight one-to-one matching on intersection counts. Pairs that do
/// not intersect are never matched.
inline ObjectMatching match_objects(const LabelImage& pred, const LabelImage& gt) {
  auto inter = intersection_counts(pred, gt);
  const int np = pred.max_label(), ng = gt.max_label();
  ObjectMatching out;
  out.pred_to_gt.assign(np + 1, 0);
  out.gt_to_pred.assign(ng + 1, 0);
  const int n = std::max(np, ng);
  if (n == 0) return out;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int p = 1; p <= np; ++p)
    for (int g = 1; g <= ng; ++g) cost[p - 1][g - 1] = -static_cast<double>(inter[p][g]);
  auto assign = detail::hungarian_min(cost);
  for (int p = 1; p <= np; ++p) {
    int g = assign[p - 1] + 1;
    if (g <= ng && inter[p][g] > 0) {
      out.pred_to_gt[p] = g;
      out.gt_to_pred[g] = p;
      out.weight += inter[p][g];
    }
  }
  return out;
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline Prf make_prf(double p, double r) { return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0}; }

inline Prf prf_overlap(const LabelImage& pred, const LabelImage& gt, const ObjectMatching& m) {
  auto inter = intersection_counts(pred, gt);
  auto pa = pred.areas(), ga = gt.areas();
  std::int64_t tp = 0, pd = 0, gd = 0;
  for (std::size_t p = 1; p < pa.size(); ++p) {
    pd += pa[p];
    if (int g = m.gt_of(static_cast<int>(p))) tp += inter[p][g];
  }
  for (std::size_t g = 1; g < ga.size(); ++g) gd += ga[g];
  double prec = pd > 0 ? static_cast<double>(tp) / static_cast<double>(pd) : 0.0;
  double rec = gd > 0 ? static_cast<double>(tp) / static_cast<double>(gd) : 0.0;
  if (pd == 0 && gd == 0) prec = rec = 1.0;
  return make_prf(prec, rec);
}

/// Object pixels with a 4-neighbour of a different label.
inline std::vector<char> boundary_pixels(const LabelImage& img) {
  std::vector<char> b(img.labels.size(), 0);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      int l = img.at(r, c);
      if (l == 0) continue;
      const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || cc < 0 || rr >= img.height || cc >= img.width) continue;
        if (img.at(rr, cc) != l) {
          b[static_cast<std::size_t>(r) * img.width + c] = 1;
          break;
        }
      }
    }
  return b;
}

namespace detail {

// Fraction numerator: boundary pixels of `from` (label a) that lie within
// `d` (Chebyshev) of a boundary pixel of `to` carrying the counterpart label.
inline std::int64_t boundary_hits(const LabelImage& from, const std::vector<char>& bf, const LabelImage& to,
                                  const std::vector<char>& bt, const std::vector<int>& counterpart, int d) {
  std::int64_t hits = 0;
  for (int r = 0; r < from.height; ++r)
    for (int c = 0; c < from.width; ++c) {
      std::size_t i = static_cast<std::size_t>(r) * from.width + c;
      if (!bf[i]) continue;
      int l = from.labels[i];
      int want = l < static_cast<int>(counterpart.size()) ? counterpart[l] : 0;
      if (want == 0) continue;
      bool found = false;
      for (int rr = std::max(0, r - d); rr <= std::min(to.height - 1, r + d) && !found; ++rr)
        for (int cc = std::max(0, c - d); cc <= std::min(to.width - 1, c + d) && !found; ++cc) {
          std::size_t j = static_cast<std::size_t>(rr) * to.width + cc;
          found = bt[j] && to.labels[j] == want;
        }
      hits += found;
    }
  return hits;
}

}  // namespace detail

inline Prf prf_boundary(const LabelImage& pred, const LabelImage& gt, const ObjectMatching& m, int dilation_px) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error(ErrorKind::Shape, "prediction and ground truth resolutions differ");
  auto bp = boundary_pixels(pred), bg = boundary_pixels(gt);
  std::int64_t np = std::count(bp.begin(), bp.end(), 1), ng = std::count(bg.begin(), bg.end(), 1);
  std::int64_t tp_p = detail::boundary_hits(pred, bp, gt, bg, m.pred_to_gt, dilation_px);
  std::int64_t tp_g = detail::boundary_hits(gt, bg, pred, bp, m.gt_to_pred, dilation_px);
  double prec = np > 0 ? static_cast<double>(tp_p) / static_cast<double>(np) : 0.0;
  double rec = ng > 0 ? static_cast<double>(tp_g) / static_cast<double>(ng) : 0.0;
  if (np == 0 && ng == 0) prec = rec = 1.0;
  return make_prf(prec, rec);
}

}  // namespace strata
