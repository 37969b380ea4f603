// Two stacked boxes on a table: generate, segment, infer, print the hierarchy.

#include <iostream>

#include "strata/pipeline/stages.hpp"

int main() {
  using namespace strata;
  PipelineConfig cfg;
  auto [cloud, gt] = generate_scene(two_box_spec());
  std::cout << "cloud: " << cloud.size() << " points\n";

  auto r = run_scene(cloud, cfg);
  std::cout << "primitives: " << r.primitives.size() << ", pattern edges: " << r.patterns.edges.size() << "\n";
  for (const auto& o : r.hierarchy.objects) {
    std::cout << "object " << o.id << (o.contains_ground ? " (ground)" : "") << ": primitives";
    for (int p : o.primitive_ids) std::cout << ' ' << p;
    std::cout << "\n";
  }
  for (const auto& e : r.hierarchy.edges)
    std::cout << (e.from == 0 ? std::string("root") : "C" + std::to_string(e.from)) << " -> C" << e.to << "  ["
              << to_string(e.phase) << "]\n";
  std::cout << "\n" << hierarchy_dot(r.hierarchy);

  std::cout << "ground truth:";
  for (auto [a, b] : gt.support) std::cout << ' ' << a << "->" << b;
  std::cout << "\n";
}
