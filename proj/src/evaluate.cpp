#include "commune/evaluate.hpp"

#include "commune/communities.hpp"
#include "commune/csv.hpp"
#include "commune/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace commune {

namespace {

void check_sizes(const Partition& p, std::span<const std::optional<double>> incomes) {
  if (incomes.size() != p.n()) throw InputError("income vector does not match the partition size");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::vector<std::optional<IncomeHistogram>> community_income_histograms(
    const Partition& p, std::span<const std::optional<double>> node_incomes, int bins) {
  check_sizes(p, node_incomes);
  if (bins < 2) throw InputError("histogram needs at least 2 bins");
  std::vector<std::optional<IncomeHistogram>> out(p.k);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& x : node_incomes) {
    if (!x) continue;
    lo = std::min(lo, *x);
    hi = std::max(hi, *x);
  }
  if (!std::isfinite(lo)) return out;
  if (hi <= lo) hi = lo + 1.0;

  std::vector<double> edges(bins + 1);
  for (int b = 0; b <= bins; ++b) edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  edges[bins] = hi;
  const double width = (hi - lo) / bins;

  std::vector<std::vector<double>> counts(p.k, std::vector<double>(bins, 0.0));
  std::vector<double> totals(p.k, 0.0);
  for (std::size_t i = 0; i < node_incomes.size(); ++i) {
    if (!node_incomes[i]) continue;
    const double pos = (*node_incomes[i] - lo) / width;
    const int b = std::clamp(static_cast<int>(std::ceil(pos)) - 1, 0, bins - 1);
    counts[p.labels[i]][b] += 1.0;
    totals[p.labels[i]] += 1.0;
  }
  for (int c = 0; c < p.k; ++c) {
    if (totals[c] == 0.0) continue;
    IncomeHistogram h;
    h.edges = edges;
    h.mass.resize(bins);
    for (int b = 0; b < bins; ++b) h.mass[b] = counts[c][b] / totals[c];
    out[c] = std::move(h);
  }
  return out;
}

double js_divergence(const IncomeHistogram& p, const IncomeHistogram& q) {
  if (p.edges != q.edges || p.mass.size() != q.mass.size())
    throw InputError("js_divergence: histograms have different bin edges");
  auto kl_to_mid = [](double a, double m) { return a > 0.0 ? a * std::log2(a / m) : 0.0; };
  double js = 0.0;
  for (std::size_t b = 0; b < p.mass.size(); ++b) {
    const double m = 0.5 * (p.mass[b] + q.mass[b]);
    if (m == 0.0) continue;
    js += 0.5 * kl_to_mid(p.mass[b], m) + 0.5 * kl_to_mid(q.mass[b], m);
  }
  return std::clamp(js, 0.0, 1.0);
}

std::vector<std::optional<double>> community_median_incomes(const Partition& p,
                                                            std::span<const std::optional<double>> node_incomes) {
  check_sizes(p, node_incomes);
  std::vector<std::vector<double>> members(p.k);
  for (std::size_t i = 0; i < node_incomes.size(); ++i)
    if (node_incomes[i]) members[p.labels[i]].push_back(*node_incomes[i]);
  std::vector<std::optional<double>> out(p.k);
  for (int c = 0; c < p.k; ++c)
    if (!members[c].empty()) out[c] = median(std::move(members[c]));
  return out;
}

std::pair<int, int> extreme_income_communities(const Partition& p,
                                               std::span<const std::optional<double>> node_incomes) {
  const auto medians = community_median_incomes(p, node_incomes);
  int high = -1;
  int low = -1;
  int eligible = 0;
  for (int c = 0; c < p.k; ++c) {
    if (!medians[c]) continue;
    ++eligible;
    if (high < 0 || *medians[c] > *medians[high]) high = c;
    if (low < 0 || *medians[c] < *medians[low]) low = c;
  }
  if (eligible < 2) throw InputError("need at least two communities with income data");
  if (high == low) {
    // every median ties: keep the lowest id as high and pair it with the next one
    for (int c = high + 1; c < p.k; ++c)
      if (medians[c]) {
        low = c;
        break;
      }
  }
  return {high, low};
}

double income_delta(const Partition& p, std::span<const std::optional<double>> node_incomes) {
  const auto [high, low] = extreme_income_communities(p, node_incomes);
  const auto medians = community_median_incomes(p, node_incomes);
  return *medians[high] - *medians[low];
}

RunReport build_report(const std::string& city, const std::string& method, const CommuteGraph& g,
                       const Partition& p, const IncomeTable& incomes, int bins, std::uint64_t seed) {
  if (static_cast<std::int64_t>(p.n()) != g.n()) throw InputError("report: partition does not match the graph");
  RunReport r;
  r.city = city;
  r.method = method;
  r.k = p.k;
  r.seed = seed;
  r.community_sizes = p.sizes();
  r.modularity = modularity(g, p);

  const auto node_incomes = align_incomes(g, incomes);
  const auto medians = community_median_incomes(p, node_incomes);
  const auto eligible = std::count_if(medians.begin(), medians.end(), [](const auto& m) { return m.has_value(); });
  if (eligible >= 2) {
    const auto [high, low] = extreme_income_communities(p, node_incomes);
    const auto hists = community_income_histograms(p, node_incomes, bins);
    r.divergence_available = true;
    r.high_income_community = high;
    r.low_income_community = low;
    r.js_divergence = js_divergence(*hists[high], *hists[low]);
    r.income_delta_usd = *medians[high] - *medians[low];
  }
  return r;
}

std::string report_to_json(const RunReport& r) {
  nlohmann::ordered_json doc;
  doc["city"] = r.city;
  doc["method"] = r.method;
  doc["k"] = r.k;
  doc["modularity"] = r.modularity;
  doc["js_divergence"] = r.js_divergence;
  doc["income_delta_usd"] = r.income_delta_usd;
  doc["divergence_available"] = r.divergence_available;
  doc["high_income_community"] = r.high_income_community;
  doc["low_income_community"] = r.low_income_community;
  doc["community_sizes"] = r.community_sizes;
  doc["seed"] = r.seed;
  if (r.nmi) doc["nmi"] = *r.nmi;
  return doc.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  RunReport r;
  try {
    const auto doc = nlohmann::json::parse(text);
    r.city = doc.at("city").get<std::string>();
    r.method = doc.at("method").get<std::string>();
    r.k = doc.at("k").get<int>();
    r.modularity = doc.at("modularity").get<double>();
    r.js_divergence = doc.at("js_divergence").get<double>();
    r.income_delta_usd = doc.at("income_delta_usd").get<double>();
    r.divergence_available = doc.at("divergence_available").get<bool>();
    r.high_income_community = doc.at("high_income_community").get<int>();
    r.low_income_community = doc.at("low_income_community").get<int>();
    r.community_sizes = doc.at("community_sizes").get<std::vector<std::int64_t>>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("nmi")) r.nmi = doc.at("nmi").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
  return r;
}

std::string results_csv_header() { return "city,method,k,modularity,js_divergence,income_delta_usd,nmi\n"; }

std::string results_csv_row(const RunReport& r) {
  return r.city + ',' + r.method + ',' + std::to_string(r.k) + ',' + csv::format_number(r.modularity) + ',' +
         csv::format_number(r.js_divergence) + ',' + csv::format_number(r.income_delta_usd) + ',' +
         (r.nmi ? csv::format_number(*r.nmi) : std::string()) + '\n';
}

}  // namespace commune
