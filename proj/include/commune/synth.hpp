#pragma once

#include "commune/cluster.hpp"
#include "commune/graph.hpp"
#include "commune/ingest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace commune {

struct PlantedSpec {
  std::int64_t n = 120;
  int k = 3;
  double p_in = 0.3;
  double p_out = 0.02;
  double w_in = 1.0;   // mean exponential edge weight within blocks
  double w_out = 1.0;  // ... and between blocks
  std::vector<double> income_centers;  // empty, or one USD center per block
  std::uint64_t seed = 0;

  void validate() const;
};

struct PlantedInstance {
  std::vector<ODRecord> records;  // both directions per edge, plus a zero self-flow per node
  CommuteGraph graph;
  Partition truth;
  IncomeTable incomes;  // empty when no income centers were given
};

// Contiguous blocks (the first n mod k blocks get one extra node), independent
// edges at p_in / p_out with exponential weights, incomes with 10% relative
// noise around each block's center.
PlantedInstance generate(const PlantedSpec& spec);

// 11-character synthetic tract id for node `i`; ids sort in index order.
std::string synthetic_geoid(std::int64_t i);

}  // namespace commune
