#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "oracles.hpp"
#include "strata/eval/graph_metrics.hpp"

using namespace strata;

namespace {

LabelImage random_mask(std::mt19937_64& rng, int w, int h, int labels) {
  std::uniform_int_distribution<int> d(0, labels);
  std::vector<int> l(static_cast<std::size_t>(w) * h);
  for (int& x : l) x = d(rng);
  return LabelImage(w, h, l);
}

// Best total intersection over every injective pred -> gt assignment.
std::int64_t brute_force_matching(const LabelImage& pred, const LabelImage& gt) {
  auto inter = intersection_counts(pred, gt);
  const int np = pred.max_label(), ng = gt.max_label();
  const int n = std::max(np, ng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  std::int64_t best = 0;
  do {
    std::int64_t w = 0;
    for (int p = 1; p <= np; ++p)
      if (perm[p - 1] <= ng) w += inter[p][perm[p - 1]];
    best = std::max(best, w);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Boundary precision straight from pixel sets.
double naive_boundary_precision(const LabelImage& a, const LabelImage& b, const std::vector<int>& counterpart, int d) {
  auto boundary = [](const LabelImage& img) {
    std::set<std::tuple<int, int, int>> s;
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) {
        int l = img.at(r, c);
        if (!l) continue;
        bool edge = (r > 0 && img.at(r - 1, c) != l) || (r + 1 < img.height && img.at(r + 1, c) != l) ||
                    (c > 0 && img.at(r, c - 1) != l) || (c + 1 < img.width && img.at(r, c + 1) != l);
        if (edge) s.insert({r, c, l});
      }
    return s;
  };
  auto ba = boundary(a), bb = boundary(b);
  if (ba.empty()) return 0.0;
  int hits = 0;
  for (auto [r, c, l] : ba) {
    int want = counterpart[l];
    bool ok = false;
    for (auto [r2, c2, l2] : bb) ok = ok || (l2 == want && want != 0 && std::abs(r - r2) <= d && std::abs(c - c2) <= d);
    hits += ok;
  }
  return static_cast<double>(hits) / static_cast<double>(ba.size());
}

// Two vertical stripes split at column `split`.
LabelImage stripes(int split) {
  std::vector<int> l(400);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) l[r * 20 + c] = c < split ? 1 : 2;
  return LabelImage(20, 20, l);
}

GraphMatrix complete(int n) {
  GraphMatrix g(n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) g.connect(a, b);
  return g;
}

double residual(const Matrix& l, double lambda, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    double r = -lambda * u[i];
    for (std::size_t j = 0; j < l.size(); ++j) r += l[i][j] * u[j];
    s += r * r;
  }
  return std::sqrt(s);
}

GraphMatrix permuted(const GraphMatrix& g, const std::vector<int>& p) {
  GraphMatrix out(g.size());
  for (int a = 0; a < g.size(); ++a)
    for (int b = 0; b < g.size(); ++b)
      if (g.adj[a][b]) out.connect(p[a], p[b]);
  return out;
}

SceneHierarchyGraph chain_graph(int objects) {
  SceneHierarchyGraph h;
  for (int i = 1; i <= objects; ++i) h.objects.push_back({i, {i}, {}, i == 1});
  h.edges.push_back({0, 1, SupportPhase::Root, 0.0});
  for (int i = 1; i < objects; ++i) h.edges.push_back({i, i + 1, SupportPhase::Local, 1.0});
  return h;
}

ObjectMatching identity_matching(int n) {
  ObjectMatching m;
  m.pred_to_gt.resize(n + 1);
  m.gt_to_pred.resize(n + 1);
  for (int i = 1; i <= n; ++i) m.pred_to_gt[i] = m.gt_to_pred[i] = i;
  return m;
}

}  // namespace

TEST(Matching, IdenticalMasksMatchByIdentity) {
  std::mt19937_64 rng(1);
  auto a = random_mask(rng, 12, 9, 4);
  auto m = match_objects(a, a);
  for (int p = 1; p <= a.max_label(); ++p) EXPECT_EQ(m.gt_of(p), p);
  auto prf = prf_overlap(a, a, m);
  EXPECT_EQ(prf.precision, 1.0);
  EXPECT_EQ(prf.recall, 1.0);
  EXPECT_EQ(prf.f, 1.0);
}

TEST(Matching, SplitObjectMatchesLargerFragment) {
  LabelImage gt(10, 1, std::vector<int>(10, 1));
  LabelImage pred(10, 1, {1, 1, 1, 1, 2, 2, 2, 2, 2, 2});
  auto m = match_objects(pred, gt);
  EXPECT_EQ(m.gt_of(2), 1);
  EXPECT_EQ(m.gt_of(1), 0);
}

TEST(Matching, NeverPairsDisjointObjects) {
  LabelImage gt(4, 1, {1, 1, 0, 0});
  LabelImage pred(4, 1, {0, 0, 1, 1});
  auto m = match_objects(pred, gt);
  EXPECT_EQ(m.gt_of(1), 0);
  EXPECT_EQ(m.weight, 0);
}

TEST(Matching, HungarianEqualsPermutationBruteForce) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    auto pred = random_mask(rng, 5, 5, 1 + t % 5);
    auto gt = random_mask(rng, 5, 5, 1 + (t / 5) % 5);
    EXPECT_EQ(match_objects(pred, gt).weight, brute_force_matching(pred, gt)) << "trial " << t;
  }
}

TEST(Matching, ResolutionMismatchIsShapeError) {
  LabelImage a(2, 2, {1, 1, 1, 1}), b(4, 1, {1, 1, 1, 1});
  try {
    match_objects(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Overlap, HalfCoverage) {
  LabelImage gt(10, 1, std::vector<int>(10, 1));
  LabelImage pred(10, 1, {1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
  auto r = prf_overlap(pred, gt, match_objects(pred, gt));
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f, 2.0 / 3.0);
}

TEST(Overlap, UnmatchedPredictionCountsInPrecisionOnly) {
  LabelImage gt(6, 1, {1, 1, 1, 1, 0, 0});
  LabelImage pred(6, 1, {1, 1, 1, 1, 2, 2});
  auto r = prf_overlap(pred, gt, match_objects(pred, gt));
  EXPECT_DOUBLE_EQ(r.precision, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
}

TEST(Overlap, PrfInvariantsOnRandomMasks) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    auto pred = random_mask(rng, 8, 8, 1 + t % 6), gt = random_mask(rng, 8, 8, 1 + t % 4);
    auto m = match_objects(pred, gt);
    for (auto r : {prf_overlap(pred, gt, m), prf_boundary(pred, gt, m, 1)}) {
      EXPECT_GE(r.precision, 0.0);
      EXPECT_LE(r.precision, 1.0);
      EXPECT_GE(r.recall, 0.0);
      EXPECT_LE(r.recall, 1.0);
      EXPECT_LE(r.f, std::max(r.precision, r.recall) + 1e-15);
      if (r.precision + r.recall > 0) {
        EXPECT_NEAR(r.f, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-15);
      }
    }
  }
}

TEST(Boundary, IdenticalMasks) {
  auto a = stripes(10);
  auto r = prf_boundary(a, a, match_objects(a, a), 2);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
}

TEST(Boundary, ShiftBeyondToleranceGivesZeroPrecision) {
  auto gt = stripes(10), pred = stripes(13);
  auto r = prf_boundary(pred, gt, match_objects(pred, gt), 2);
  EXPECT_EQ(r.precision, 0.0);
}

TEST(Boundary, OnePixelShiftWithinTolerance) {
  auto gt = stripes(10), pred = stripes(11);
  auto r = prf_boundary(pred, gt, match_objects(pred, gt), 2);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f, 1.0);
}

TEST(Boundary, MatchesPixelSetOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    // blocky masks so boundaries are not everywhere
    LabelImage gt(20, 20, std::vector<int>(400)), pred(20, 20, std::vector<int>(400));
    std::uniform_int_distribution<int> lab(0, 3), sh(-3, 3);
    std::vector<int> blocks(16);
    for (int& b : blocks) b = lab(rng);
    int dr = sh(rng), dc = sh(rng);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c) {
        gt.labels[r * 20 + c] = blocks[(r / 5) * 4 + c / 5];
        int rr = std::clamp(r + dr, 0, 19), cc = std::clamp(c + dc, 0, 19);
        pred.labels[r * 20 + c] = blocks[(rr / 5) * 4 + cc / 5];
      }
    auto m = match_objects(pred, gt);
    for (int d : {0, 1, 2, 3}) {
      auto r = prf_boundary(pred, gt, m, d);
      std::vector<int> p2g = m.pred_to_gt, g2p = m.gt_to_pred;
      EXPECT_DOUBLE_EQ(r.precision, naive_boundary_precision(pred, gt, p2g, d)) << t << " d=" << d;
      EXPECT_DOUBLE_EQ(r.recall, naive_boundary_precision(gt, pred, g2p, d)) << t << " d=" << d;
    }
  }
}

TEST(Laplacian, SingleEdge) {
  auto l = normalized_laplacian(complete(2));
  EXPECT_DOUBLE_EQ(l[0][0], 1.0);
  EXPECT_DOUBLE_EQ(l[0][1], -1.0);
  EXPECT_DOUBLE_EQ(l[1][0], -1.0);
  EXPECT_DOUBLE_EQ(l[1][1], 1.0);
}

TEST(Laplacian, Triangle) {
  auto l = normalized_laplacian(complete(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(l[i][j], i == j ? 1.0 : -0.5);
}

TEST(Laplacian, IsolatedNodeIsPreconditionError) {
  GraphMatrix g(3);
  g.connect(0, 1);
  try {
    normalized_laplacian(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(Spectrum, KnownFiedlerValues) {
  auto f2 = fiedler_pair(normalized_laplacian(complete(2)));
  EXPECT_NEAR(f2.lambda1, 2.0, 1e-12);
  auto f3 = fiedler_pair(normalized_laplacian(complete(3)));
  EXPECT_NEAR(f3.lambda1, 1.5, 1e-12);
  EXPECT_EQ(f3.multiplicity, 2);
  for (int n = 4; n <= 7; ++n) EXPECT_NEAR(fiedler_pair(normalized_laplacian(complete(n))).lambda1, n / (n - 1.0), 1e-10);
}

TEST(Spectrum, RandomGraphsResidualAndRange) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto g = oracle::random_connected_graph(rng, 8, 0.3);
    auto l = normalized_laplacian(g);
    auto e = jacobi_eigen(l);
    EXPECT_NEAR(e.values.front(), 0.0, 1e-9);
    EXPECT_LE(e.values.back(), 2.0 + 1e-9);
    for (std::size_t k = 0; k < e.values.size(); ++k) EXPECT_LE(residual(l, e.values[k], e.vectors[k]), 1e-8);
    auto f = fiedler_pair(l);
    EXPECT_LE(residual(l, f.lambda1, f.u1), 1e-8);
    double norm = 0.0;
    for (double x : f.u1) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    auto first = std::find_if(f.u1.begin(), f.u1.end(), [](double x) { return std::abs(x) > 1e-12; });
    EXPECT_GT(*first, 0.0);
  }
}

TEST(Spectrum, JacobiAgreesWithEigen) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + t % 9;
    Matrix a(n, std::vector<double>(n));
    Eigen::MatrixXd ea(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) ea(i, j) = ea(j, i) = a[i][j] = a[j][i] = n01(rng);
    auto mine = jacobi_eigen(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(ea);
    for (int k = 0; k < n; ++k) EXPECT_NEAR(mine.values[k], ref.eigenvalues()[k], 1e-9);
  }
}

TEST(Spectrum, NonSymmetricIsShapeError) {
  Matrix a{{1, 2}, {0, 1}};
  try {
    jacobi_eigen(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
  }
}

TEST(Cheeger, BoundsBySubstitution) {
  auto b = cheeger_bounds(2.0);
  EXPECT_DOUBLE_EQ(b.lower, 1.0);
  EXPECT_DOUBLE_EQ(b.upper, 2.0);
  b = cheeger_bounds(0.5);
  EXPECT_DOUBLE_EQ(b.lower, 0.25);
  EXPECT_DOUBLE_EQ(b.upper, 1.0);
  EXPECT_THROW(cheeger_bounds(2.5), Error);
}

TEST(Cheeger, InequalityOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 10);
  std::uniform_real_distribution<double> dens(0.0, 0.6);
  for (int t = 0; t < 100; ++t) {
    auto g = oracle::random_connected_graph(rng, size(rng), dens(rng));
    auto l = normalized_laplacian(g);
    auto f = fiedler_pair(l);
    ASSERT_LE(residual(l, f.lambda1, f.u1), 1e-8);
    auto b = cheeger_bounds(f.lambda1);
    double h = oracle::cheeger_constant(g);
    EXPECT_LE(b.lower, h + 1e-12) << "graph " << t;
    EXPECT_LT(h, b.upper) << "graph " << t;
  }
}

TEST(Sections, EdgeVersusTriangle) {
  double expected = std::abs((2.0 - 1.0) - (std::sqrt(3.0) - 0.75));
  EXPECT_NEAR(cheeger_section(complete(2), complete(3)), expected, 1e-12);
  EXPECT_NEAR(cheeger_section(complete(3), complete(2)), expected, 1e-12);
}

TEST(Sections, ZeroForIdenticalGraphs) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    auto g = oracle::random_connected_graph(rng, 2 + t % 9, 0.3);
    EXPECT_EQ(cheeger_section(g, g), 0.0);
    EXPECT_EQ(spectral_section(g, g), 0.0);
  }
}

TEST(Sections, ProjectorIgnoresEigenvectorSign) {
  std::mt19937_64 rng(6);
  auto g = oracle::random_connected_graph(rng, 7, 0.2);
  auto f = fiedler_pair(normalized_laplacian(g));
  auto flipped = f;
  for (auto& b : flipped.basis)
    for (double& x : b) x = -x;
  for (double& x : flipped.u1) x = -x;
  auto p = fiedler_projector(f), q = fiedler_projector(flipped);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) EXPECT_NEAR(p[i][j], q[i][j], 1e-15);
}

TEST(Sections, InvariantUnderConsistentRelabeling) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const int n = 3 + t % 8;
    auto a = oracle::random_connected_graph(rng, n, 0.25), b = oracle::random_connected_graph(rng, n, 0.25);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto pa = permuted(a, perm), pb = permuted(b, perm);
    EXPECT_NEAR(cheeger_section(a, b), cheeger_section(pa, pb), 1e-9);
    EXPECT_NEAR(spectral_section(a, b), spectral_section(pa, pb), 1e-9);
  }
}

TEST(Sections, SpectralPadsSmallerGraph) {
  double s = spectral_section(complete(2), complete(3));
  EXPECT_GT(s, 0.0);
  EXPECT_TRUE(std::isfinite(s));
}

TEST(Significance, AllMatchedIsSymmetrizationOnly) {
  auto h = chain_graph(4);
  auto g = apply_significance_rules(h, identity_matching(4));
  auto s = symmetrize(h);
  EXPECT_EQ(g.adj, s.adj);
  EXPECT_EQ(g.edge_count(), 4);
}

TEST(Significance, UnmatchedMidChainObjectIsCutOut) {
  auto h = chain_graph(4);  // root-1-2-3-4
  auto m = identity_matching(4);
  m.pred_to_gt[3] = 0;
  m.gt_to_pred[3] = 0;
  auto g = apply_significance_rules(h, m);
  EXPECT_EQ(g.adj[2][3], 0);
  EXPECT_EQ(g.adj[3][4], 0);
  EXPECT_EQ(g.adj[0][4], 1);  // 4 lost its supporter
  EXPECT_EQ(g.adj[0][3], 1);  // 3 itself is isolated now
  EXPECT_EQ(g.adj[0][1], 1);
  EXPECT_EQ(g.adj[1][2], 1);
  for (int v = 0; v < g.size(); ++v) EXPECT_GT(g.degree(v), 0);
}

TEST(GraphScores, ZeroForIdenticalGraphsUnderIdentityMatching) {
  auto h = chain_graph(5);
  h.edges.push_back({1, 5, SupportPhase::Global, 0.5});
  auto s = score_graphs(h, h, identity_matching(5));
  EXPECT_EQ(s.cheeger, 0.0);
  EXPECT_EQ(s.spectral, 0.0);
  auto e = score_support_edges(h, h, identity_matching(5));
  EXPECT_TRUE(e.exact);
  EXPECT_EQ(e.precision(), 1.0);
  EXPECT_EQ(e.recall(), 1.0);
}

TEST(GraphScores, MissingEdgeLowersRecall) {
  auto gt = chain_graph(4);
  auto pred = gt;
  pred.edges.erase(std::find_if(pred.edges.begin(), pred.edges.end(),
                                [](const SupportEdge& e) { return e.from == 2 && e.to == 3; }));
  pred.edges.push_back({0, 3, SupportPhase::Root, 0.0});
  auto e = score_support_edges(pred, gt, identity_matching(4));
  EXPECT_FALSE(e.exact);
  EXPECT_EQ(e.actual, 3);
  EXPECT_EQ(e.true_positives, 2);
  EXPECT_DOUBLE_EQ(e.precision(), 1.0);
  auto s = score_graphs(pred, gt, identity_matching(4));
  EXPECT_GT(s.cheeger + s.spectral, 0.0);
}
