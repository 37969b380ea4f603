#include <gtest/gtest.h>

#include <random>

#include "strata/geometry/bbox.hpp"
#include "strata/geometry/polygon3d.hpp"
#include "strata/geometry/ransac.hpp"
#include "test_util.hpp"

using namespace strata;
using strata::testing::square;

namespace {

std::vector<Vec2> brute_force_hull(const std::vector<Vec2>& pts) {
  // Every directed pair (a,b) with all points strictly left of or on segment ab is a hull edge.
  std::vector<std::pair<Vec2, Vec2>> edges;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      bool ok = true;
      for (std::size_t k = 0; k < pts.size() && ok; ++k) {
        double c = cross2(pts[i], pts[j], pts[k]);
        if (c < -1e-12) ok = false;
        if (std::abs(c) <= 1e-12) {
          // collinear points must lie within the segment
          double t = (pts[k] - pts[i]).dot(pts[j] - pts[i]) / (pts[j] - pts[i]).squaredNorm();
          if (t < -1e-12 || t > 1 + 1e-12) ok = false;
        }
      }
      if (ok) edges.emplace_back(pts[i], pts[j]);
    }
  std::vector<Vec2> verts;
  for (auto& e : edges) verts.push_back(e.first);
  return verts;
}

bool same_point_set(std::vector<Vec2> a, std::vector<Vec2> b) {
  auto less = [](const Vec2& x, const Vec2& y) { return std::tie(x.x(), x.y()) < std::tie(y.x(), y.y()); };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if ((a[i] - b[i]).norm() > 1e-12) return false;
  return true;
}

double sampled_distance(const PlanePrimitive& a, const PlanePrimitive& b, std::mt19937_64& rng) {
  // uniform-ish samples over each polygon via fan triangles, plus dense boundary samples
  auto sample = [&](const PlanePrimitive& p) {
    std::vector<Vec3> out;
    std::uniform_real_distribution<double> u(0, 1);
    for (int k = 0; k < 60; ++k) {
      double s = u(rng), t = u(rng);
      if (s + t > 1) s = 1 - s, t = 1 - t;
      std::size_t tri = 1 + static_cast<std::size_t>(u(rng) * (p.hull.size() - 2));
      out.push_back(p.hull[0] + s * (p.hull[tri] - p.hull[0]) + t * (p.hull[tri + 1] - p.hull[0]));
    }
    for (std::size_t i = 0; i < p.hull.size(); ++i)
      for (int k = 0; k <= 40; ++k) out.push_back(p.hull[i] + (k / 40.0) * (p.hull[(i + 1) % p.hull.size()] - p.hull[i]));
    return out;
  };
  auto sa = sample(a), sb = sample(b);
  double best = 1e9;
  for (const auto& x : sa)
    for (const auto& y : sb) best = std::min(best, (x - y).norm());
  return best;
}

}  // namespace

TEST(ConvexHull, SquareWithInteriorPoint) {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  auto h = convex_hull_2d(pts);
  ASSERT_EQ(h.size(), 4u);
  EXPECT_TRUE(is_convex_ccw(h));
  EXPECT_NEAR(polygon_area(h), 1.0, 1e-12);
}

TEST(ConvexHull, Pentagon) {
  std::vector<Vec2> pts;
  for (int k = 0; k < 5; ++k) pts.emplace_back(std::cos(2 * M_PI * k / 5), std::sin(2 * M_PI * k / 5));
  auto h = convex_hull_2d(pts);
  EXPECT_EQ(h.size(), 5u);
  EXPECT_TRUE(is_convex_ccw(h));
  EXPECT_TRUE(same_point_set(h, pts));
}

TEST(ConvexHull, MatchesBruteForceOnRandomDisks) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> pts;
    while (pts.size() < 200) {
      Vec2 p(u(rng), u(rng));
      if (p.norm() <= 1) pts.push_back(p);
    }
    auto h = convex_hull_2d(pts);
    EXPECT_TRUE(is_convex_ccw(h));
    EXPECT_TRUE(same_point_set(h, brute_force_hull(pts)));
    auto again = convex_hull_2d(h);
    EXPECT_TRUE(same_point_set(h, again));  // idempotent
  }
}

TEST(ConvexHull, DegenerateInputsThrow) {
  std::vector<Vec2> two{{0, 0}, {1, 1}};
  std::vector<Vec2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_THROW(convex_hull_2d(two), Error);
  try {
    convex_hull_2d(line);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateHull);
  }
}

TEST(PrimitiveDistance, BasicCases) {
  GravityPrior g;
  auto a = square(0, {0.5, 0.5, 0}, 1.0, g);
  auto b = square(1, {1.5, 0.5, 0}, 1.0, g);
  auto c = square(2, {0.5, 0.5, 0.05}, 1.0, g);
  EXPECT_NEAR(primitive_distance(a, b), 0.0, 1e-12);
  EXPECT_NEAR(primitive_distance(a, c), 0.05, 1e-12);
}

TEST(PrimitiveDistance, MatchesSamplingOracle) {
  GravityPrior g;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto poly = [&](int id) {
      Vec3 c(u(rng), u(rng), u(rng));
      Vec3 n = Vec3(u(rng), u(rng), u(rng)).normalized();
      PlaneFrame f = make_plane_frame(n, c, g.up());
      std::vector<Vec3> v;
      for (int k = 0; k < 6; ++k) v.push_back(f.to_3d(Vec2(0.2 * u(rng), 0.2 * u(rng))));
      return make_polygon_primitive(id, v, g, 10.0);
    };
    PlanePrimitive a, b;
    try {
      a = poly(0);
      b = poly(1);
    } catch (const Error&) {
      continue;
    }
    double d = primitive_distance(a, b);
    double s = sampled_distance(a, b, rng);
    EXPECT_NEAR(d, primitive_distance(b, a), 1e-12);
    EXPECT_LE(d, s + 1e-12);
    EXPECT_NEAR(d, s, 1e-2) << "trial " << trial;
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(PrimitiveDistance, TriangleSanity) {
  GravityPrior g;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<PlanePrimitive> p;
    for (int k = 0; k < 3; ++k) p.push_back(square(k, {u(rng), u(rng), u(rng)}, 0.3, g));
    EXPECT_LE(primitive_distance(p[0], p[1]),
              primitive_distance(p[0], p[2]) + hull_diameter(p[2]) + primitive_distance(p[2], p[1]) + 1e-12);
  }
}

TEST(SegmentHull, Cases) {
  GravityPrior g;
  auto sq = square(0, {0.5, 0.5, 0}, 1.0, g);
  auto cross = segment_hull_intersections({{-0.5, 0.5, 0}, {1.5, 0.5, 0}}, sq, g, 1e-9);
  ASSERT_EQ(cross.size(), 2u);
  EXPECT_NEAR(cross[0].x(), 0.0, 1e-12);
  EXPECT_NEAR(cross[1].x(), 1.0, 1e-12);
  auto inside = segment_hull_intersections({{0.4, 0.5, 0}, {0.6, 0.5, 0}}, sq, g, 1e-9);
  ASSERT_EQ(inside.size(), 2u);
  EXPECT_LT(inside[0].x(), 0.4);
  EXPECT_GT(inside[1].x(), 0.6);
  EXPECT_TRUE(segment_hull_intersections({{2, 2, 0}, {3, 2, 0}}, sq, g, 1e-9).empty());
}

TEST(ObjectBbox, UnitCube) {
  GravityPrior g;
  std::vector<PlanePrimitive> faces{square(0, {0.5, 0.5, 1}, 1.0, g), square(1, {0.5, 0.5, 0}, 1.0, g),
                                    make_polygon_primitive(2, {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1}}, g, 10)};
  auto box = object_bbox(faces, g, 0.005);
  EXPECT_NEAR(box.half_extents.x(), 0.5, 1e-9);
  EXPECT_NEAR(box.half_extents.y(), 0.5, 1e-9);
  EXPECT_NEAR(box.half_extents.z(), 0.5, 1e-9);
  for (const auto& f : faces)
    for (const auto& v : f.hull) EXPECT_TRUE(box.contains(v, 1e-9));
}

TEST(ObjectBbox, FlatSquareClampsHeight) {
  GravityPrior g;
  std::vector<PlanePrimitive> faces{square(0, {0, 0, 1}, 1.0, g)};
  auto box = object_bbox(faces, g, 0.005);
  EXPECT_NEAR(box.half_extents.z(), 0.005, 1e-12);
  EXPECT_NEAR(box.bottom_height(g), 1.0 - 0.005, 1e-12);
}

TEST(ObjectBbox, RotatedBoxVolume) {
  GravityPrior g;
  const double yaw = M_PI / 6;
  Eigen::Matrix3d R = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  const Vec3 h(0.2, 0.1, 0.15);
  std::vector<PlanePrimitive> faces;
  for (int s : {-1, 1}) {
    std::vector<Vec3> top;
    for (auto [x, y] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) top.push_back(R * Vec3(x * h.x(), y * h.y(), s * h.z()));
    faces.push_back(make_polygon_primitive(static_cast<int>(faces.size()), top, g, 10));
  }
  auto box = object_bbox(faces, g, 0.005);
  EXPECT_NEAR(box.volume(), 8 * h.prod(), 0.01 * 8 * h.prod());
}

TEST(Ransac, TwoExactPlanes) {
  GravityPrior g;
  PointCloud cloud;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) cloud.points.emplace_back(i * 0.005, j * 0.005, 0.0);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 50; ++j) cloud.points.emplace_back(i * 0.005, j * 0.005, 0.3);
  RansacParams p;
  auto prims = fit_planes_ransac(cloud, g, p);
  ASSERT_EQ(prims.size(), 2u);
  EXPECT_EQ(prims[0].inliers.size(), 10000u);
  EXPECT_EQ(prims[1].inliers.size(), 5000u);
  EXPECT_NEAR(prims[0].normal.z(), 1.0, 1e-9);
  EXPECT_NEAR(prims[0].offset, 0.0, 1e-9);
  EXPECT_NEAR(prims[1].offset, -0.3, 1e-9);
  EXPECT_TRUE(prims[0].is_horizontal);
}

TEST(Ransac, NoisyPlanesRecoverMembership) {
  GravityPrior g;
  PointCloud cloud;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 0.001);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) cloud.points.emplace_back(i * 0.005, j * 0.005, noise(rng));
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 50; ++j) cloud.points.emplace_back(i * 0.005, j * 0.005, 0.3 + noise(rng));
  RansacParams p;
  auto prims = fit_planes_ransac(cloud, g, p);
  ASSERT_GE(prims.size(), 2u);
  std::size_t low = 0, high = 0;
  for (auto i : prims[0].inliers) low += i < 10000;
  for (auto i : prims[1].inliers) high += i >= 10000;
  EXPECT_GE(low, 9900u);
  EXPECT_GE(high, 4950u);
  for (const auto& pr : prims) {
    EXPECT_NEAR(pr.normal.norm(), 1.0, 1e-9);
    for (auto i : pr.inliers) EXPECT_LE(std::abs(pr.signed_distance(cloud.points[i])), p.epsilon + 1e-9);
  }
}

TEST(Ransac, CoincidentPointsGiveNothing) {
  PointCloud cloud;
  cloud.points.assign(100, Vec3(0.1, 0.2, 0.3));
  EXPECT_TRUE(fit_planes_ransac(cloud, GravityPrior{}, RansacParams{}).empty());
}

TEST(Ransac, EmptyCloudThrows) {
  try {
    fit_planes_ransac(PointCloud{}, GravityPrior{}, RansacParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}

TEST(Ransac, Deterministic) {
  GravityPrior g;
  PointCloud cloud;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0, 0.001);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j) {
      cloud.points.emplace_back(i * 0.005, j * 0.005, noise(rng));
      cloud.points.emplace_back(i * 0.01, noise(rng), j * 0.01);
    }
  RansacParams p;
  p.seed = 42;
  auto a = fit_planes_ransac(cloud, g, p);
  auto b = fit_planes_ransac(cloud, g, p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].inliers, b[k].inliers);
    EXPECT_EQ(a[k].offset, b[k].offset);
  }
}
