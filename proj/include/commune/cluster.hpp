#pragma once

#include "commune/matrix.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace commune {

// Community label per node, 0..k-1, every community non-empty.
struct Partition {
  std::vector<int> labels;
  int k = 0;

  std::size_t n() const { return labels.size(); }
  std::vector<std::int64_t> sizes() const;

  // Compacts arbitrary non-negative labels to 0..k-1 in first-seen order.
  static Partition from_labels(std::span<const int> raw);
  // Renumbers communities by descending size, ties by smallest member.
  Partition canonical() const;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iter = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Partition partition;  // canonical labels
  double inertia = 0.0;
  int best_restart = 0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // per Lloyd iteration of the best restart
};

// k-means++ seeding then Lloyd iterations, best inertia over the restarts.
KMeansResult kmeans(const EmbeddingMatrix& x, int k, const KMeansOptions& options = {});

// Σ ||x_i - centroid(label_i)||²
double inertia(const EmbeddingMatrix& x, const Partition& p);

}  // namespace commune
