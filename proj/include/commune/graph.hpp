#pragma once

#include "commune/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace commune {

// One aggregated origin -> destination flow (persons/day).
struct FlowRecord {
  std::string origin;
  std::string dest;
  double flow = 0.0;
};

// Undirected weighted commute network over tracts.
//
// Off-diagonal weights are the average of both directed flows; intra-tract
// flows are dropped from `weights` but still counted in the directed totals.
struct CommuteGraph {
  std::vector<std::string> node_ids;  // unique, ascending
  Csr weights;                        // symmetric, zero diagonal
  double total_directed_flow = 0.0;
  std::int64_t directed_nonzero_count = 0;

  std::int64_t n() const { return static_cast<std::int64_t>(node_ids.size()); }
  std::vector<double> degrees() const;
  // Index of `id` in node_ids, or -1.
  std::int64_t index_of(const std::string& id) const;
};

// Row-stochastic propagation matrix D̃⁻¹(W + I) used for mean aggregation.
struct PropagationMatrix {
  Csr rows;
  Csr rows_transposed;
};

struct GraphStats {
  std::int64_t nodes = 0;
  std::int64_t nonzero_edges = 0;
  double avg_edge_weight = 0.0;
};

CommuteGraph build_graph(const std::vector<FlowRecord>& records);

GraphStats graph_stats(const CommuteGraph& g);

PropagationMatrix normalize_adjacency(const CommuteGraph& g);

// Dense ln(1 + w) reconstruction target.
Matrix log_transform(const CommuteGraph& g);

// Connected components as sorted node lists, ordered by smallest member.
std::vector<std::vector<std::int64_t>> connected_components(const CommuteGraph& g);

// Induced subgraph on `nodes` (sorted ascending); directed totals are not kept.
CommuteGraph induced_subgraph(const CommuteGraph& g, const std::vector<std::int64_t>& nodes);

}  // namespace commune
