#include "commune/cluster.hpp"
#include "commune/error.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace commune;

namespace {

EmbeddingMatrix column(std::initializer_list<double> xs) {
  EmbeddingMatrix e;
  e.values.resize(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) e.values(i++, 0) = x;
  return e;
}

EmbeddingMatrix random_points(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  EmbeddingMatrix e;
  e.values.resize(n, d);
  for (Eigen::Index i = 0; i < e.values.size(); ++i) e.values.data()[i] = dist(rng);
  return e;
}

}  // namespace

TEST(KMeans, WellSeparated) {
  const KMeansResult r = kmeans(column({0, 0.1, 10, 10.1}), 2);
  EXPECT_EQ(r.partition.k, 2);
  EXPECT_EQ(r.partition.labels[0], r.partition.labels[1]);
  EXPECT_EQ(r.partition.labels[2], r.partition.labels[3]);
  EXPECT_NE(r.partition.labels[0], r.partition.labels[2]);
  EXPECT_NEAR(r.inertia, 0.01, 1e-12);
}

TEST(KMeans, KEqualsN) {
  const KMeansResult r = kmeans(column({3, 1, 4, 1.5, 9}), 5);
  EXPECT_EQ(r.partition.k, 5);
  EXPECT_EQ(r.inertia, 0.0);
}

TEST(KMeans, Errors) {
  EXPECT_THROW(kmeans(column({1, 2}), 3), InputError);
  EXPECT_THROW(kmeans(column({1, 2}), 0), InputError);
  KMeansOptions none;
  none.restarts = 0;
  EXPECT_THROW(kmeans(column({1, 2}), 1, none), InputError);
  EXPECT_THROW(kmeans(column({1, std::nan("")}), 1), InputError);
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
  const KMeansResult r = kmeans(column({1, 1, 1, 1, 5}), 3);
  EXPECT_EQ(r.partition.k, 3);
  for (auto s : r.partition.sizes()) EXPECT_GT(s, 0);
}

TEST(Inertia, Examples) {
  EXPECT_EQ(inertia(column({2, 2, 2}), Partition::from_labels(std::vector<int>{0, 0, 1})), 0.0);
  EXPECT_EQ(inertia(column({0, 2}), Partition::from_labels(std::vector<int>{0, 0})), 2.0);
}

TEST(KMeans, PropertiesOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 10 + trial * 5;
    const int k = 2 + trial % 5;
    const EmbeddingMatrix x = random_points(n, 3, rng);
    KMeansOptions o;
    o.seed = trial;
    o.restarts = 4;
    const KMeansResult r = kmeans(x, k, o);
    // Lloyd monotonicity
    for (std::size_t t = 1; t < r.inertia_trace.size(); ++t)
      EXPECT_LE(r.inertia_trace[t], r.inertia_trace[t - 1] * (1 + 1e-12) + 1e-12);
    EXPECT_NEAR(inertia(x, r.partition), r.inertia, 1e-9 * std::max(1.0, r.inertia));
    // labels canonical: every cluster non-empty, sizes non-increasing
    const auto sizes = r.partition.sizes();
    ASSERT_EQ(static_cast<int>(sizes.size()), k);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      EXPECT_GT(sizes[c], 0);
      if (c > 0) EXPECT_LE(sizes[c], sizes[c - 1]);
    }
    // determinism
    EXPECT_EQ(kmeans(x, k, o).partition.labels, r.partition.labels);
  }
}

TEST(Partition, CanonicalOrdersBySizeThenSmallestMember) {
  const Partition p = Partition::from_labels(std::vector<int>{7, 3, 3, 9, 9, 7});
  const Partition c = p.canonical();
  EXPECT_EQ(c.labels, (std::vector<int>{0, 1, 1, 2, 2, 0}));
  EXPECT_EQ(Partition::from_labels(std::vector<int>{5, 5, 2}).labels, (std::vector<int>{0, 0, 1}));
}
