#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "strata/core/error.hpp"
#include "strata/geometry/polygon3d.hpp"
#include "strata/geometry/types.hpp"

namespace strata {

struct PatternConfig {
  double theta_adj = 0.02;        // adjacency distance (m); also the rest-on / closeness band
  double theta_angle_deg = 10.0;  // horizontal test
  double tau = 0.86;              // watertight threshold on Ratio
  double contact_tol = 0.01;      // hull slack for contact lines; covers a RANSAC band eaten by a neighbour
  double contact_band = 0.01;     // height band selecting a polygon's bottom / top vertices

  double eps_z() const { return theta_adj; }
};

enum class Pattern : int { P1 = 1, P2, P3, P4, P5, P6, P7, P8 };
enum class Connection { LocalSupport, LocalInner };

inline Connection connection_of(Pattern p) {
  return static_cast<int>(p) <= 5 ? Connection::LocalSupport : Connection::LocalInner;
}
inline bool is_support(Pattern p) { return connection_of(p) == Connection::LocalSupport; }
inline bool pattern_needs_ratio(Pattern p) { return p == Pattern::P5 || p == Pattern::P6 || p == Pattern::P7 || p == Pattern::P8; }
inline const char* to_string(Connection c) { return c == Connection::LocalSupport ? "local_support" : "local_inner"; }

inline Pattern pattern_from_int(int k) {
  if (k < 1 || k > 8) throw Error(ErrorKind::MalformedGraph, "pattern id out of range: " + std::to_string(k));
  return static_cast<Pattern>(k);
}

struct AdjacencyEdge {
  int i = 0;  // i < j
  int j = 0;
  double distance = 0.0;
};

struct AdjacencyGraph {
  std::vector<int> vertices;
  std::vector<AdjacencyEdge> edges;
};

/// Classified adjacency edge. For P1-P7 `first` is the horizontal plane
/// (the supporter candidate); for P8 the pair is in ascending id order.
struct PatternEdge {
  int first = 0;
  int second = 0;
  Pattern pattern = Pattern::P8;
  std::optional<double> ratio;
  double distance = 0.0;

  Connection connection() const { return connection_of(pattern); }
};

struct PatternGraph {
  std::vector<int> nodes;
  std::vector<PatternEdge> edges;
};

/// All pairs whose hull polygons are within `theta_adj`. A bounding-sphere
/// test skips pairs that cannot be that close.
inline AdjacencyGraph build_adjacency(std::span<const PlanePrimitive> prims, double theta_adj) {
  if (!(theta_adj > 0)) throw Error(ErrorKind::Precondition, "theta_adj must be positive");
  AdjacencyGraph g;
  std::vector<Vec3> centers(prims.size());
  std::vector<double> radii(prims.size(), 0.0);
  for (std::size_t k = 0; k < prims.size(); ++k) {
    g.vertices.push_back(prims[k].id);
    Vec3 c = Vec3::Zero();
    for (const auto& v : prims[k].hull) c += v;
    c /= static_cast<double>(std::max<std::size_t>(1, prims[k].hull.size()));
    centers[k] = c;
    for (const auto& v : prims[k].hull) radii[k] = std::max(radii[k], (v - c).norm());
  }
  for (std::size_t a = 0; a < prims.size(); ++a)
    for (std::size_t b = a + 1; b < prims.size(); ++b) {
      if ((centers[a] - centers[b]).norm() - radii[a] - radii[b] > theta_adj) continue;
      double d = primitive_distance(prims[a], prims[b]);
      if (d <= theta_adj) {
        int i = std::min(prims[a].id, prims[b].id), j = std::max(prims[a].id, prims[b].id);
        g.edges.push_back({i, j, d});
      }
    }
  std::sort(g.edges.begin(), g.edges.end(), [](const auto& x, const auto& y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  return g;
}

namespace detail {

/// Vertical height of `p` above the plane of a horizontal primitive.
inline double height_above(const PlanePrimitive& horiz, const Vec3& p, const GravityPrior& g) {
  double nu = horiz.normal.dot(g.up());
  return horiz.signed_distance(p) / (std::abs(nu) > 1e-9 ? nu : 1.0);
}

/// Horizontal direction lying in the plane of `prim` (its frame's u axis).
inline Vec3 in_plane_horizontal(const PlanePrimitive& prim, const GravityPrior& g) {
  return prim.frame(g.up()).u;
}

/// Segment spanned by the hull vertices whose key lies within `band` of the
/// extreme key, measured along the plane's horizontal direction. Collapses to
/// a point (a == b) when only one vertex is in the band.
template <typename Key>
Segment3 extreme_contact(const PlanePrimitive& prim, const GravityPrior& g, double band, Key key) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : prim.hull) best = std::min(best, key(v));
  Vec3 dir = in_plane_horizontal(prim, g);
  const Vec3* lo = nullptr;
  const Vec3* hi = nullptr;
  double tlo = std::numeric_limits<double>::infinity(), thi = -tlo;
  for (const auto& v : prim.hull) {
    if (key(v) > best + band) continue;
    double t = v.dot(dir);
    if (t < tlo) { tlo = t; lo = &v; }
    if (t > thi) { thi = t; hi = &v; }
  }
  if (thi - tlo < 1e-6) return {*lo, *lo};
  return {*lo, *hi};
}

/// Intersection of a polygon with the plane of `horiz` (vertical height 0),
/// as the segment between the two extreme crossing points.
inline std::optional<Segment3> cross_section(const PlanePrimitive& prim, const PlanePrimitive& horiz,
                                             const GravityPrior& g) {
  std::vector<Vec3> hits;
  const std::size_t n = prim.hull.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& a = prim.hull[k];
    const Vec3& b = prim.hull[(k + 1) % n];
    double ha = height_above(horiz, a, g), hb = height_above(horiz, b, g);
    if (ha == 0.0) hits.push_back(a);
    if ((ha < 0 && hb > 0) || (ha > 0 && hb < 0)) hits.push_back(a + (ha / (ha - hb)) * (b - a));
  }
  if (hits.size() < 2) return std::nullopt;
  Vec3 dir = in_plane_horizontal(prim, g);
  auto [mn, mx] = std::minmax_element(hits.begin(), hits.end(), [&](const Vec3& x, const Vec3& y) { return x.dot(dir) < y.dot(dir); });
  return Segment3{*mn, *mx};
}

}  // namespace detail

/// Watertightness Ratio of a contact segment q1q2 against a horizontal hull:
/// the segment is projected onto the hull's plane, its line meets the hull in
/// the chord p1p2, and Ratio = min(|overlap| / |p1p2|, |overlap| / |q1q2|),
/// where the overlap is the part of q1q2 lying on the chord. In the textbook
/// configuration (q1 outside, q2 inside) the overlap is exactly p1q2.
/// Returns 0 when the line misses the hull.
inline double contact_ratio(const PlanePrimitive& horiz, const Segment3& contact, const GravityPrior& g, double tol) {
  Vec3 qa = project_along_gravity(contact.a, horiz, g), qb = project_along_gravity(contact.b, horiz, g);
  double len = (qb - qa).norm();
  if (len < 1e-6) throw Error(ErrorKind::DegenerateEdge, "contact edge shorter than 1e-6 m");
  auto chord = hull_chord(contact, horiz, g, tol);
  if (!chord || chord->length <= 0.0) return 0.0;
  double overlap = std::max(0.0, std::min(1.0, chord->t1) - std::max(0.0, chord->t0)) * len;
  return std::clamp(std::min(overlap / chord->length, overlap / len), 0.0, 1.0);
}

/// Ratio for a pair without a horizontal plane: the near-contact vertices of
/// each polygon are projected on the contact line direction (the planes'
/// intersection, or the horizontal in-plane direction for parallel planes)
/// and the two spans are compared like a contact edge against a chord.
inline double nonhorizontal_ratio(const PlanePrimitive& a, const PlanePrimitive& b, double distance,
                                  const GravityPrior& g, const PatternConfig& cfg) {
  Vec3 dir = a.normal.cross(b.normal);
  if (dir.norm() < std::sin(cfg.theta_angle_deg * M_PI / 180.0)) dir = detail::in_plane_horizontal(a, g);
  dir.normalize();
  const double reach = distance + std::max(cfg.contact_tol, cfg.contact_band);
  auto span_of = [&](const PlanePrimitive& p, const PlanePrimitive& q) {
    const PlaneFrame fq = q.frame(g.up());
    const auto poly = hull_2d(q, fq);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : p.hull)
      if (point_polygon_distance(v, q, fq, poly) <= reach) {
        lo = std::min(lo, v.dot(dir));
        hi = std::max(hi, v.dot(dir));
      }
    return std::make_pair(lo, hi);
  };
  auto [a0, a1] = span_of(a, b);
  auto [b0, b1] = span_of(b, a);
  double la = a1 - a0, lb = b1 - b0;
  if (!(la > 1e-6) || !(lb > 1e-6)) return 0.0;
  double overlap = std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  return std::clamp(std::min(overlap / la, overlap / lb), 0.0, 1.0);
}

/// Eight-way structural pattern of an adjacent pair. Decision order:
/// no horizontal plane -> P8; other polygon below the (higher) horizontal
/// plane -> P7; other polygon resting on it -> P1..P4 by how its bottom
/// contact meets the hull; otherwise a boundary contact -> P6 if watertight
/// (Ratio >= tau) else P5.
inline PatternEdge classify_pattern(const PlanePrimitive& a, const PlanePrimitive& b, const GravityPrior& g,
                                    const PatternConfig& cfg, std::optional<double> distance = std::nullopt) {
  PatternEdge e;
  e.distance = distance ? *distance : primitive_distance(a, b);

  if (!a.is_horizontal && !b.is_horizontal) {
    const bool a_first = a.id <= b.id;
    e.first = a_first ? a.id : b.id;
    e.second = a_first ? b.id : a.id;
    e.pattern = Pattern::P8;
    e.ratio = nonhorizontal_ratio(a_first ? a : b, a_first ? b : a, e.distance, g, cfg);
    return e;
  }

  const PlanePrimitive* hp = &a;
  const PlanePrimitive* op = &b;
  if (a.is_horizontal && b.is_horizontal) {
    double ha = g.height(a.centroid), hb = g.height(b.centroid);
    if (hb > ha || (hb == ha && b.id < a.id)) std::swap(hp, op);
  } else if (!a.is_horizontal) {
    std::swap(hp, op);
  }
  const PlanePrimitive& horiz = *hp;
  const PlanePrimitive& other = *op;
  e.first = horiz.id;
  e.second = other.id;

  const double ez = cfg.eps_z();
  double min_h = std::numeric_limits<double>::infinity(), max_h = -min_h;
  for (const auto& v : other.hull) {
    double h = detail::height_above(horiz, v, g);
    min_h = std::min(min_h, h);
    max_h = std::max(max_h, h);
  }
  auto safe_ratio = [&](const Segment3& s) {
    try {
      return contact_ratio(horiz, s, g, cfg.contact_tol);
    } catch (const Error&) {
      return 0.0;
    }
  };

  if (max_h <= ez) {
    e.pattern = Pattern::P7;
    auto top = detail::extreme_contact(other, g, cfg.contact_band,
                                       [&](const Vec3& v) { return -detail::height_above(horiz, v, g); });
    e.ratio = safe_ratio(top);
    return e;
  }

  auto bottom = detail::extreme_contact(other, g, cfg.contact_band,
                                        [&](const Vec3& v) { return detail::height_above(horiz, v, g); });
  if (min_h >= -ez && min_h <= ez) {
    if ((bottom.b - bottom.a).norm() < 1e-6) {
      const PlaneFrame f = horiz.frame(g.up());
      if (point_in_convex(hull_2d(horiz, f), f.to_2d(project_along_gravity(bottom.a, horiz, g)), cfg.contact_tol)) {
        e.pattern = Pattern::P1;
        return e;
      }
    } else if (auto chord = hull_chord(bottom, horiz, g, cfg.contact_tol)) {
      const bool q1_in = chord->t0 <= 0.0 && 0.0 <= chord->t1;
      const bool q2_in = chord->t0 <= 1.0 && 1.0 <= chord->t1;
      if (q1_in && q2_in) {
        e.pattern = Pattern::P2;
        return e;
      }
      if (q1_in != q2_in) {
        e.pattern = Pattern::P3;
        return e;
      }
      if (chord->t0 > 0.0 && chord->t1 < 1.0) {
        e.pattern = Pattern::P4;
        return e;
      }
    }
  }

  // Boundary contact: use the polygon's cut through the horizontal plane when
  // it crosses it, otherwise its bottom contact.
  Segment3 contact = bottom;
  if (min_h < -ez)
    if (auto cut = detail::cross_section(other, horiz, g)) contact = *cut;
  double r = safe_ratio(contact);
  e.ratio = r;
  e.pattern = r >= cfg.tau ? Pattern::P6 : Pattern::P5;
  return e;
}

/// Ratio between a horizontal primitive and a neighbour, using the contact
/// edge the classifier would pick for that configuration.
inline double compute_ratio(const PlanePrimitive& horiz, const PlanePrimitive& other, const GravityPrior& g,
                            const PatternConfig& cfg) {
  if (!horiz.is_horizontal) throw Error(ErrorKind::Precondition, "compute_ratio: first primitive must be horizontal");
  double min_h = std::numeric_limits<double>::infinity(), max_h = -min_h;
  for (const auto& v : other.hull) {
    double h = detail::height_above(horiz, v, g);
    min_h = std::min(min_h, h);
    max_h = std::max(max_h, h);
  }
  Segment3 contact;
  if (max_h <= cfg.eps_z()) {
    contact = detail::extreme_contact(other, g, cfg.contact_band, [&](const Vec3& v) { return -detail::height_above(horiz, v, g); });
  } else if (auto cut = min_h < -cfg.eps_z() ? detail::cross_section(other, horiz, g) : std::nullopt) {
    contact = *cut;
  } else {
    contact = detail::extreme_contact(other, g, cfg.contact_band, [&](const Vec3& v) { return detail::height_above(horiz, v, g); });
  }
  return contact_ratio(horiz, contact, g, cfg.contact_tol);
}

inline const PlanePrimitive& find_primitive(std::span<const PlanePrimitive> prims, int id) {
  for (const auto& p : prims)
    if (p.id == id) return p;
  throw Error(ErrorKind::MalformedGraph, "unknown primitive id " + std::to_string(id));
}

inline PatternGraph build_pattern_graph(std::span<const PlanePrimitive> prims, const GravityPrior& g,
                                        const PatternConfig& cfg) {
  PatternGraph pg;
  auto adj = build_adjacency(prims, cfg.theta_adj);
  pg.nodes = adj.vertices;
  pg.edges.reserve(adj.edges.size());
  for (const auto& e : adj.edges)
    pg.edges.push_back(classify_pattern(find_primitive(prims, e.i), find_primitive(prims, e.j), g, cfg, e.distance));
  return pg;
}

/// DOT rendering: local support edges solid (directed supporter -> other),
/// local inner edges dashed.
inline std::string pattern_graph_dot(const PatternGraph& pg) {
  std::ostringstream os;
  os << "digraph patterns {\n  node [shape=box];\n";
  for (int n : pg.nodes) os << "  p" << n << " [label=\"prim " << n << "\"];\n";
  for (const auto& e : pg.edges) {
    os << "  p" << e.first << " -> p" << e.second << " [label=\"P" << static_cast<int>(e.pattern) << "\"";
    if (e.connection() == Connection::LocalInner) os << ", style=dashed, dir=none";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace strata
