#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "strata/core/error.hpp"

namespace strata {

using Matrix = std::vector<std::vector<double>>;

/// Symmetric 0/1 adjacency of an undirected graph (the symmetrized G').
struct GraphMatrix {
  std::vector<std::vector<int>> adj;

  GraphMatrix() = default;
  explicit GraphMatrix(int n) : adj(n, std::vector<int>(n, 0)) {}

  int size() const { return static_cast<int>(adj.size()); }
  void connect(int a, int b) {
    if (a == b) return;
    adj[a][b] = adj[b][a] = 1;
  }
  int degree(int v) const { return std::accumulate(adj[v].begin(), adj[v].end(), 0); }
  int edge_count() const {
    int e = 0;
    for (int v = 0; v < size(); ++v) e += degree(v);
    return e / 2;
  }
};

inline Matrix normalized_laplacian(const GraphMatrix& g) {
  const int n = g.size();
  std::vector<double> d(n);
  for (int v = 0; v < n; ++v) {
    d[v] = g.degree(v);
    if (d[v] == 0) throw Error(ErrorKind::Precondition, "normalized Laplacian needs every node to have an edge");
  }
  Matrix l(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      l[i][j] = (i == j ? 1.0 : 0.0) - (g.adj[i][j] ? 1.0 / std::sqrt(d[i] * d[j]) : 0.0);
  return l;
}

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // vectors[k] is the unit eigenvector of values[k]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is <= tol.
inline EigenDecomposition jacobi_eigen(Matrix a, double tol = 1e-10, int max_sweeps = 100) {
  const int n = static_cast<int>(a.size());
  for (const auto& row : a)
    if (static_cast<int>(row.size()) != n) throw Error(ErrorKind::Shape, "matrix is not square");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(a[i][j] - a[j][i]) > 1e-12 * (1.0 + std::abs(a[i][j])))
        throw Error(ErrorKind::Shape, "matrix is not symmetric");
  Matrix v(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) v[i][i] = 1.0;

  auto off = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) s += a[i][j] * a[i][j];
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < max_sweeps && off() > tol; ++sweep)
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a[x][x] < a[y][y]; });
  EigenDecomposition out;
  for (int k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = v[i][k];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

struct FiedlerPair {
  double lambda1 = 0.0;
  std::vector<double> u1;
  int multiplicity = 1;                    // eigenvalues within 1e-8 of lambda1
  std::vector<std::vector<double>> basis;  // orthonormal basis of that eigenspace
};

/// Second-smallest eigenpair; the vector's first nonzero entry is positive.
inline FiedlerPair fiedler_pair(const Matrix& l) {
  if (l.size() < 2) throw Error(ErrorKind::Precondition, "Fiedler pair needs at least two nodes");
  auto e = jacobi_eigen(l);
  FiedlerPair f;
  f.lambda1 = e.values[1];
  f.u1 = e.vectors[1];
  for (double x : f.u1)
    if (std::abs(x) > 1e-12) {
      if (x < 0)
        for (double& y : f.u1) y = -y;
      break;
    }
  f.multiplicity = 0;
  for (std::size_t k = 0; k < e.values.size(); ++k)
    if (std::abs(e.values[k] - f.lambda1) < 1e-8) {
      ++f.multiplicity;
      f.basis.push_back(k == 1 ? f.u1 : e.vectors[k]);
    }
  return f;
}

struct CheegerBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline CheegerBounds cheeger_bounds(double lambda1) {
  if (lambda1 < -1e-12 || lambda1 > 2.0 + 1e-12) throw Error(ErrorKind::Precondition, "lambda1 must lie in [0, 2]");
  lambda1 = std::clamp(lambda1, 0.0, 2.0);
  return {0.5 * lambda1, std::sqrt(2.0 * lambda1)};
}

/// Projector onto the lambda1 eigenspace (u1 u1^T when simple).
inline Matrix fiedler_projector(const FiedlerPair& f) {
  const std::size_t n = f.u1.size();
  Matrix p(n, std::vector<double>(n, 0.0));
  for (const auto& b : f.basis)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p[i][j] += b[i] * b[j];
  return p;
}

/// |(u_gs - l_gs) - (u_gt - l_gt)| from the two graphs' lambda1.
inline double cheeger_section(const GraphMatrix& gs, const GraphMatrix& gt) {
  auto bs = cheeger_bounds(fiedler_pair(normalized_laplacian(gs)).lambda1);
  auto bt = cheeger_bounds(fiedler_pair(normalized_laplacian(gt)).lambda1);
  return std::abs((bs.upper - bs.lower) - (bt.upper - bt.lower));
}

/// Frobenius distance of the Fiedler projectors over sqrt(|V(gt)|). Graphs
/// should share a vertex set (see align_prediction); a smaller graph is padded
/// with zeros. A repeated lambda1 uses the projector onto its eigenspace.
inline double spectral_section(const GraphMatrix& gs, const GraphMatrix& gt) {
  if (gt.size() == 0 || gs.size() == 0) throw Error(ErrorKind::Precondition, "graphs must be nonempty");
  auto ps = fiedler_projector(fiedler_pair(normalized_laplacian(gs)));
  auto pt = fiedler_projector(fiedler_pair(normalized_laplacian(gt)));
  const int n = std::max(gs.size(), gt.size());
  auto at = [](const Matrix& m, int i, int j) {
    return i < static_cast<int>(m.size()) && j < static_cast<int>(m.size()) ? m[i][j] : 0.0;
  };
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d = at(ps, i, j) - at(pt, i, j);
      s += d * d;
    }
  return std::sqrt(s) / std::sqrt(static_cast<double>(gt.size()));
}

}  // namespace strata
