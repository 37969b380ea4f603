#pragma once

#include <array>
#include <random>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/ransac.hpp"
#include "strata/pattern/pattern_graph.hpp"

// Two-polygon configurations realizing each of the eight patterns exactly.
namespace strata {

struct PatternFixture {
  std::array<std::vector<Vec3>, 2> polygons;
  PatternEdge expected;
  bool same_object = false;
};

namespace detail {

inline std::vector<Vec3> unit_table() { return {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}; }

// Vertical rectangle in the plane y = y0.
inline std::vector<Vec3> wall_y(double y0, double x0, double x1, double z0, double z1) {
  return {{x0, y0, z0}, {x1, y0, z0}, {x1, y0, z1}, {x0, y0, z1}};
}

// Vertical rectangle in the plane x = x0.
inline std::vector<Vec3> wall_x(double x0, double y0, double y1, double z0, double z1) {
  return {{x0, y0, z0}, {x0, y1, z0}, {x0, y1, z1}, {x0, y0, z1}};
}

}  // namespace detail

inline PatternFixture pattern_fixture_polygons(int k) {
  using detail::unit_table;
  using detail::wall_x;
  using detail::wall_y;
  PatternFixture f;
  f.expected.first = 0;
  f.expected.second = 1;
  f.expected.pattern = pattern_from_int(k);
  f.same_object = k >= 6;
  switch (k) {
    case 1:  // diamond standing on one corner
      f.polygons = {unit_table(), {{0.5, 0.5, 0}, {0.6, 0.5, 0.1}, {0.5, 0.5, 0.2}, {0.4, 0.5, 0.1}}};
      break;
    case 2:
      f.polygons = {unit_table(), wall_y(0.5, 0.3, 0.7, 0.0, 0.4)};
      break;
    case 3:
      f.polygons = {unit_table(), wall_y(0.5, 0.7, 1.3, 0.0, 0.4)};
      break;
    case 4:
      f.polygons = {unit_table(), wall_y(0.5, -0.2, 1.2, 0.0, 0.4)};
      break;
    case 5:  // face through the table edge, covering half of it
      f.polygons = {unit_table(), wall_x(1.0, 0.5, 1.5, -0.3, 0.3)};
      f.expected.ratio = 0.5;
      break;
    case 6:  // face through the table edge along its full length
      f.polygons = {unit_table(), wall_x(1.0, 0.0, 1.0, -0.3, 0.3)};
      f.expected.ratio = 1.0;
      break;
    case 7:  // panel hanging 1 cm below a shelf
      f.polygons = {unit_table(), wall_y(0.5, 0.3, 0.7, -0.41, -0.01)};
      f.expected.ratio = 0.4;
      f.expected.distance = 0.01;
      break;
    case 8:  // two walls meeting at a corner
      f.polygons = {wall_y(0.0, 0.0, 1.0, 0.0, 1.0), wall_x(0.0, 0.0, 1.0, 0.0, 1.0)};
      f.expected.ratio = 1.0;
      break;
    default:
      throw Error(ErrorKind::Precondition, "fixture index must be in 1..8, got " + std::to_string(k));
  }
  return f;
}

struct FixturePair {
  PlanePrimitive a;
  PlanePrimitive b;
  PatternEdge expected;
  bool same_object = false;
};

/// Canonical noise-free pair for pattern k (ids 0 and 1).
inline FixturePair canonical_pattern_fixture(int k, const GravityPrior& g = GravityPrior{}, double theta_angle_deg = 10.0) {
  auto f = pattern_fixture_polygons(k);
  return {make_polygon_primitive(0, f.polygons[0], g, theta_angle_deg, Vec3(0, -2, 1)),
          make_polygon_primitive(1, f.polygons[1], g, theta_angle_deg, Vec3(0, -2, 1)), f.expected, f.same_object};
}

/// Fixture k with i.i.d. Gaussian noise on every polygon vertex; planes are refit.
inline FixturePair perturbed_pattern_fixture(int k, double sigma, std::uint64_t seed, const GravityPrior& g = GravityPrior{},
                                             double theta_angle_deg = 10.0) {
  auto f = pattern_fixture_polygons(k);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& poly : f.polygons)
    for (auto& v : poly) v += Vec3(n(rng), n(rng), n(rng));
  return {make_polygon_primitive(0, f.polygons[0], g, theta_angle_deg, Vec3(0, -2, 1)),
          make_polygon_primitive(1, f.polygons[1], g, theta_angle_deg, Vec3(0, -2, 1)), f.expected, f.same_object};
}

}  // namespace strata
