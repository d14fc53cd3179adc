#include "commune/communities.hpp"
#include "commune/error.hpp"
#include "commune/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace commune;

TEST(Synth, DeterministicUnderSeed) {
  PlantedSpec spec;
  spec.seed = 42;
  const PlantedInstance a = generate(spec);
  const PlantedInstance b = generate(spec);
  EXPECT_EQ(a.graph.node_ids, b.graph.node_ids);
  EXPECT_TRUE(a.graph.weights.dense() == b.graph.weights.dense());
  EXPECT_EQ(a.truth.labels, b.truth.labels);
  spec.seed = 43;
  EXPECT_FALSE(generate(spec).graph.weights.dense() == a.graph.weights.dense());
}

TEST(Synth, ContiguousBlocksWithRemainder) {
  PlantedSpec spec;
  spec.n = 10;
  spec.k = 3;
  const PlantedInstance inst = generate(spec);
  EXPECT_EQ(inst.graph.n(), 10);
  EXPECT_EQ(inst.truth.labels, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 2, 2, 2}));
  EXPECT_EQ(inst.graph.node_ids.front(), synthetic_geoid(0));
  EXPECT_EQ(synthetic_geoid(0).size(), 11u);
  EXPECT_LT(synthetic_geoid(9), synthetic_geoid(10));
}

TEST(Synth, WithinBlockEdgeCountBound) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PlantedSpec spec;
    spec.seed = seed;
    const PlantedInstance inst = generate(spec);
    const double size = static_cast<double>(spec.n) / spec.k;
    const double pairs = size * (size - 1) / 2;
    const double mean = pairs * spec.p_in;
    const double sd = std::sqrt(pairs * spec.p_in * (1 - spec.p_in));
    std::vector<double> within(spec.k, 0.0);
    const Csr& w = inst.graph.weights;
    for (std::int64_t i = 0; i < w.n; ++i)
      for (std::int64_t q = w.row_ptr[i]; q < w.row_ptr[i + 1]; ++q)
        if (w.col[q] > i && inst.truth.labels[i] == inst.truth.labels[w.col[q]]) within[inst.truth.labels[i]] += 1;
    for (double count : within) EXPECT_LE(std::abs(count - mean), 5 * sd) << "seed " << seed;
  }
}

TEST(Synth, DisjointCliquesModularity) {
  PlantedSpec spec;
  spec.n = 12;
  spec.k = 2;
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  const PlantedInstance inst = generate(spec);
  EXPECT_EQ(inst.graph.weights.nnz(), 2 * 2 * 15);
  const auto deg = inst.graph.degrees();
  double two_m = 0.0, d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < deg.size(); ++i) {
    two_m += deg[i];
    (inst.truth.labels[i] == 0 ? d0 : d1) += deg[i];
  }
  const double expected = 1.0 - (d0 / two_m) * (d0 / two_m) - (d1 / two_m) * (d1 / two_m);
  EXPECT_NEAR(modularity(inst.graph, inst.truth), expected, 1e-12);
}

TEST(Synth, NoSignalStillGenerates) {
  PlantedSpec spec;
  spec.p_in = spec.p_out = 0.1;
  const PlantedInstance inst = generate(spec);
  EXPECT_EQ(inst.graph.n(), spec.n);
  EXPECT_TRUE(std::isfinite(modularity(inst.graph, optimize_modularity(inst.graph))));
}

TEST(Synth, IncomesFollowBlocks) {
  PlantedSpec spec;
  spec.income_centers = {40000, 90000, 150000};
  const PlantedInstance inst = generate(spec);
  ASSERT_EQ(inst.incomes.values.size(), 120u);
  for (std::int64_t i = 0; i < inst.graph.n(); ++i) {
    const auto income = inst.incomes.lookup(inst.graph.node_ids[i]);
    ASSERT_TRUE(income.has_value());
    const double center = spec.income_centers[inst.truth.labels[i]];
    EXPECT_LT(std::abs(*income - center), 0.6 * center);
  }
  EXPECT_TRUE(generate(PlantedSpec{}).incomes.values.empty());
}

TEST(Synth, InvalidSpecs) {
  auto bad = [](auto mutate) {
    PlantedSpec s;
    mutate(s);
    return s;
  };
  EXPECT_THROW(generate(bad([](PlantedSpec& s) { s.p_in = 1.5; })), InputError);
  EXPECT_THROW(generate(bad([](PlantedSpec& s) { s.p_out = -0.1; })), InputError);
  EXPECT_THROW(generate(bad([](PlantedSpec& s) { s.k = 0; })), InputError);
  EXPECT_THROW(generate(bad([](PlantedSpec& s) { s.n = 2; })), InputError);
  EXPECT_THROW(generate(bad([](PlantedSpec& s) { s.w_in = 0; })), InputError);
  EXPECT_THROW(generate(bad([](PlantedSpec& s) { s.income_centers = {1, 2}; })), InputError);
}
