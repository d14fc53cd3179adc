#include "commune/error.hpp"
#include "commune/evaluate.hpp"
#include "commune/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace commune;
using namespace commune::testing;

namespace {

using Incomes = std::vector<std::optional<double>>;

Partition labels(std::vector<int> l) { return Partition::from_labels(l); }

IncomeHistogram hist(std::vector<double> mass) {
  IncomeHistogram h;
  for (std::size_t i = 0; i <= mass.size(); ++i) h.edges.push_back(static_cast<double>(i));
  h.mass = std::move(mass);
  return h;
}

// Direct base-2 evaluation, with 0 log 0 = 0.
double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) s += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) s += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return s;
}

}  // namespace

TEST(Histograms, RightClosedBins) {
  const auto h = community_income_histograms(labels({0, 0, 0}), Incomes{10.0, 20.0, 30.0}, 2);
  ASSERT_TRUE(h[0].has_value());
  EXPECT_EQ(h[0]->edges, (std::vector<double>{10, 20, 30}));
  EXPECT_NEAR(h[0]->mass[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(h[0]->mass[1], 1.0 / 3.0, 1e-15);
}

TEST(Histograms, EqualIncomesWidenRange) {
  const auto h = community_income_histograms(labels({0, 0}), Incomes{5e4, 5e4}, 4);
  EXPECT_EQ(h[0]->edges.front(), 5e4);
  EXPECT_EQ(h[0]->edges.back(), 5e4 + 1);
  EXPECT_EQ(std::count(h[0]->mass.begin(), h[0]->mass.end(), 1.0), 1);
}

TEST(Histograms, SharedEdgesAndMissingIncome) {
  const auto h = community_income_histograms(labels({0, 1, 0, 1, 2}), Incomes{1.0, 1.0, 7.0, 7.0, std::nullopt}, 3);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_EQ(h[0]->edges, h[1]->edges);
  EXPECT_EQ(h[0]->mass, h[1]->mass);
  EXPECT_FALSE(h[2].has_value());
}

TEST(Histograms, MassConservation) {
  std::mt19937_64 rng(1);
  std::lognormal_distribution<double> inc(11.0, 0.5);
  std::uniform_int_distribution<int> comm(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + trial;
    Incomes incomes(n);
    std::vector<int> raw(n);
    for (int i = 0; i < n; ++i) {
      raw[i] = comm(rng);
      if (i % 9 != 0) incomes[i] = inc(rng);
    }
    for (const auto& h : community_income_histograms(labels(raw), incomes, 2 + trial % 30)) {
      if (!h) continue;
      double total = 0.0;
      for (double m : h->mass) total += m;
      EXPECT_NEAR(total, 1.0, 1e-12);
      for (std::size_t b = 1; b < h->edges.size(); ++b) EXPECT_LT(h->edges[b - 1], h->edges[b]);
    }
  }
}

TEST(JsDivergence, ClosedForms) {
  EXPECT_EQ(js_divergence(hist({0.2, 0.3, 0.5}), hist({0.2, 0.3, 0.5})), 0.0);
  EXPECT_NEAR(js_divergence(hist({0.5, 0.5, 0, 0}), hist({0, 0, 0.25, 0.75})), 1.0, 1e-15);
  EXPECT_NEAR(js_divergence(hist({1, 0}), hist({0.5, 0.5})), 0.31128, 1e-5);
  EXPECT_NEAR(js_divergence(hist({1, 0}), hist({0.5, 0.5})), jsd_oracle({1, 0}, {0.5, 0.5}), 1e-15);
}

TEST(JsDivergence, SymmetricAndBounded) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int bins = 2 + trial % 20;
    std::vector<double> p(bins), q(bins);
    double sp = 0, sq = 0;
    for (int b = 0; b < bins; ++b) {
      p[b] = u(rng) < 0.3 ? 0.0 : u(rng);
      q[b] = u(rng) < 0.3 ? 0.0 : u(rng);
      sp += p[b];
      sq += q[b];
    }
    if (sp == 0 || sq == 0) continue;
    for (int b = 0; b < bins; ++b) p[b] /= sp, q[b] /= sq;
    const double a = js_divergence(hist(p), hist(q));
    EXPECT_EQ(a, js_divergence(hist(q), hist(p)));
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_NEAR(a, jsd_oracle(p, q), 1e-12);
  }
}

TEST(JsDivergence, MismatchedEdges) {
  IncomeHistogram a = hist({0.5, 0.5});
  IncomeHistogram b = hist({0.5, 0.5});
  b.edges[1] = 1.5;
  EXPECT_THROW(js_divergence(a, b), InputError);
}

TEST(Extremes, Examples) {
  EXPECT_EQ(extreme_income_communities(labels({0, 1}), Incomes{5e4, 9e4}), std::make_pair(1, 0));
  EXPECT_EQ(extreme_income_communities(labels({0, 1, 2}), Incomes{3e4, 6e4, 9e4}), std::make_pair(2, 0));
  EXPECT_EQ(extreme_income_communities(labels({0, 1}), Incomes{5e4, 5e4}), std::make_pair(0, 1));
  EXPECT_EQ(extreme_income_communities(labels({0, 1, 2}), Incomes{5e4, 5e4, 1e4}), std::make_pair(0, 2));
  EXPECT_EQ(income_delta(labels({0, 1}), Incomes{1e4, 1e4}), 0.0);
  EXPECT_EQ(income_delta(labels({0, 0, 1, 1, 1}), Incomes{1.0, 3.0, 10.0, 30.0, 20.0}), 18.0);
  EXPECT_THROW(extreme_income_communities(labels({0, 1}), Incomes{5e4, std::nullopt}), InputError);
}

TEST(Extremes, DeltaNeverNegative) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> inc(1e4, 2e5);
  std::uniform_int_distribution<int> comm(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    Incomes incomes(30);
    std::vector<int> raw(30);
    for (int i = 0; i < 30; ++i) raw[i] = comm(rng), incomes[i] = inc(rng);
    raw[0] = 0, raw[1] = 1;
    EXPECT_GE(income_delta(labels(raw), incomes), 0.0);
  }
}

TEST(Report, SingleCommunityMarksDivergenceUnavailable) {
  const CommuteGraph g = two_triangles();
  IncomeTable incomes;
  for (const auto& id : g.node_ids) incomes.values[id] = 5e4;
  const RunReport r = build_report("tiny", "gnn", g, labels({0, 0, 0, 0, 0, 0}), incomes, 20, 4);
  EXPECT_EQ(r.k, 1);
  EXPECT_EQ(r.modularity, 0.0);
  EXPECT_FALSE(r.divergence_available);
  EXPECT_EQ(r.js_divergence, 0.0);
  EXPECT_EQ(r.income_delta_usd, 0.0);
  const RunReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.k, 1);
  EXPECT_FALSE(back.divergence_available);
  EXPECT_EQ(report_to_json(back), report_to_json(r));
}

TEST(Report, IncomeDisjointBlocks) {
  PlantedSpec spec;
  spec.income_centers = {30000, 80000, 200000};
  spec.seed = 5;
  const PlantedInstance inst = generate(spec);
  const RunReport r = build_report("synthetic", "truth", inst.graph, inst.truth, inst.incomes, 20, 5);
  EXPECT_TRUE(r.divergence_available);
  EXPECT_GE(r.js_divergence, 0.9);
  EXPECT_GT(r.income_delta_usd, 100000);
  EXPECT_EQ(r.community_sizes, (std::vector<std::int64_t>{40, 40, 40}));
  EXPECT_NE(results_csv_row(r).find("synthetic,truth,3,"), std::string::npos);
}
