#pragma once

// Hand-rolled generators for property tests.

#include "commune/graph.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace commune::testing {

inline std::string node_name(int i) {
  std::string s = "n";
  if (i < 10) s += '0';
  return s + std::to_string(i);
}

using Edge = std::tuple<int, int, double>;

// Undirected edge list -> graph with one record per direction.
inline CommuteGraph graph_from_edges(int n, const std::vector<Edge>& edges) {
  std::vector<FlowRecord> records;
  for (int i = 0; i < n; ++i) records.push_back({node_name(i), node_name(i), 0.0});
  for (const auto& [a, b, w] : edges) {
    records.push_back({node_name(a), node_name(b), w});
    records.push_back({node_name(b), node_name(a), w});
  }
  return build_graph(records);
}

// Erdős–Rényi style weighted graph; weights uniform in [lo, hi].
inline std::vector<Edge> random_edges(int n, double p, std::mt19937_64& rng, double lo = 0.1, double hi = 5.0) {
  std::bernoulli_distribution keep(p);
  std::uniform_real_distribution<double> weight(lo, hi);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (keep(rng)) edges.emplace_back(i, j, weight(rng));
  return edges;
}

// Random graph guaranteed to carry at least one edge.
inline CommuteGraph random_graph(int n, double p, std::mt19937_64& rng) {
  auto edges = random_edges(n, p, rng);
  if (edges.empty()) edges.emplace_back(0, n - 1, 1.0);
  return graph_from_edges(n, edges);
}

// Connected random graph: a random spanning path plus extra edges.
inline CommuteGraph random_connected_graph(int n, double p, std::mt19937_64& rng) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> weight(0.1, 5.0);
  auto edges = random_edges(n, p, rng);
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(order[i], order[i + 1], weight(rng));
  return graph_from_edges(n, edges);
}

inline CommuteGraph two_triangles() {
  return graph_from_edges(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}, {2, 3, 1}});
}

inline CommuteGraph path3() { return graph_from_edges(3, {{0, 1, 1}, {1, 2, 1}}); }

inline CommuteGraph complete(int n, double w = 1.0) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j, w);
  return graph_from_edges(n, edges);
}

}  // namespace commune::testing
