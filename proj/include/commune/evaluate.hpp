#pragma once

#include "commune/cluster.hpp"
#include "commune/graph.hpp"
#include "commune/ingest.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace commune {

struct IncomeHistogram {
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<double> mass;   // sums to 1
};

// Per-community income histograms over shared equal-width bins spanning the
// city-wide income range. Bins are right-closed, (e_i, e_i+1], with the first
// bin also taking the minimum. Communities without any income are nullopt.
std::vector<std::optional<IncomeHistogram>> community_income_histograms(
    const Partition& p, std::span<const std::optional<double>> node_incomes, int bins);

// Base-2 Jensen-Shannon divergence in [0, 1]; histograms must share edges.
double js_divergence(const IncomeHistogram& p, const IncomeHistogram& q);

// Median of member incomes per community (nullopt without income data).
std::vector<std::optional<double>> community_median_incomes(const Partition& p,
                                                            std::span<const std::optional<double>> node_incomes);

// (highest, lowest) community by median income; ties go to the smaller id.
// When every median is equal the two smallest eligible ids are returned.
std::pair<int, int> extreme_income_communities(const Partition& p,
                                               std::span<const std::optional<double>> node_incomes);

// median(highest) - median(lowest), >= 0.
double income_delta(const Partition& p, std::span<const std::optional<double>> node_incomes);

struct RunReport {
  std::string city;
  std::string method;
  int k = 0;
  double modularity = 0.0;
  double js_divergence = 0.0;
  double income_delta_usd = 0.0;
  bool divergence_available = false;
  int high_income_community = -1;
  int low_income_community = -1;
  std::vector<std::int64_t> community_sizes;
  std::uint64_t seed = 0;
  std::optional<double> nmi;  // against ground-truth labels, when supplied
};

// Divergence fields are 0 and marked unavailable when fewer than two
// communities carry income data.
RunReport build_report(const std::string& city, const std::string& method, const CommuteGraph& g,
                       const Partition& p, const IncomeTable& incomes, int bins, std::uint64_t seed);

std::string report_to_json(const RunReport& r);
RunReport report_from_json(const std::string& text);

std::string results_csv_header();
std::string results_csv_row(const RunReport& r);

}  // namespace commune
