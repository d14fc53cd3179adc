#pragma once

#include "commune/cluster.hpp"
#include "commune/graph.hpp"

#include <optional>
#include <utility>

namespace commune {

// Weighted Newman modularity of `p` on `g`. Throws InputError when the
// graph carries no edge weight.
double modularity(const CommuteGraph& g, const Partition& p);

struct OptimizerOptions {
  std::optional<int> max_k;  // forbid creating more than max_k communities
  double min_gain = 1e-12;   // a move set is accepted only above this gain
  int max_rounds = 100000;
};

// Combo-style local search: for every (source, destination) pair of
// communities, including a fresh empty destination, a Kernighan-Lin sweep
// finds the best set of nodes to shift, and the best improving pair is
// applied. Stops when no shift, merge or split raises Q by more than min_gain.
Partition optimize_modularity(const CommuteGraph& g, const OptimizerOptions& options = {});

// Largest modularity gain reachable by moving one node to another existing
// community or to a new one (<= min_gain at a local optimum).
double best_single_move_gain(const CommuteGraph& g, const Partition& p);

// Exhaustive search over all set partitions; refuses n > 10.
std::pair<Partition, double> brute_force_best_partition(const CommuteGraph& g);

// Normalized mutual information, 2 I / (H1 + H2); 1 when both are trivial.
double nmi(const Partition& a, const Partition& b);

}  // namespace commune
