#include "commune/cluster.hpp"

#include "commune/error.hpp"
#include "commune/kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace commune {

std::vector<std::int64_t> Partition::sizes() const {
  std::vector<std::int64_t> s(k, 0);
  for (int l : labels) ++s[l];
  return s;
}

Partition Partition::from_labels(std::span<const int> raw) {
  Partition p;
  p.labels.resize(raw.size());
  std::vector<int> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) throw InputError("partition labels must be non-negative");
    if (static_cast<std::size_t>(raw[i]) >= remap.size()) remap.resize(raw[i] + 1, -1);
    if (remap[raw[i]] < 0) remap[raw[i]] = p.k++;
    p.labels[i] = remap[raw[i]];
  }
  return p;
}

Partition Partition::canonical() const {
  const auto sz = sizes();
  std::vector<std::size_t> first(k, labels.size());
  for (std::size_t i = labels.size(); i-- > 0;) first[labels[i]] = i;
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sz[a] != sz[b]) return sz[a] > sz[b];
    return first[a] < first[b];
  });
  std::vector<int> rank(k);
  for (int r = 0; r < k; ++r) rank[order[r]] = r;
  Partition out;
  out.k = k;
  out.labels.reserve(labels.size());
  for (int l : labels) out.labels.push_back(rank[l]);
  return out;
}

namespace {

Matrix centroids_of(const Matrix& x, std::span<const int> labels, int k, std::vector<std::int64_t>& counts) {
  Matrix c = Matrix::Zero(k, x.cols());
  counts.assign(k, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    c.row(labels[i]) += x.row(i);
    ++counts[labels[i]];
  }
  for (int j = 0; j < k; ++j)
    if (counts[j] > 0) c.row(j) /= static_cast<double>(counts[j]);
  return c;
}

struct RunResult {
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

Matrix plus_plus_seeds(const Matrix& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Matrix c(k, x.cols());
  std::vector<char> chosen(n, 0);
  const auto first = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
  c.row(0) = x.row(first);
  chosen[first] = 1;
  std::vector<double> dist(n);
  for (Eigen::Index i = 0; i < n; ++i) dist[i] = (x.row(i) - c.row(0)).squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (dist[i] <= 0.0) continue;
        pick = i;
        r -= dist[i];
        if (r < 0.0) break;
      }
    }
    if (pick < 0) {
      // every point coincides with a seed: take the first unused one
      pick = std::find(chosen.begin(), chosen.end(), 0) - chosen.begin();
    }
    chosen[pick] = 1;
    c.row(j) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) dist[i] = std::min(dist[i], (x.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

RunResult lloyd(const Matrix& x, int k, int max_iter, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  RunResult run;
  run.labels.assign(n, -1);
  std::vector<double> sq(n);
  std::vector<std::int64_t> counts;
  Matrix c = plus_plus_seeds(x, k, rng);
  for (int it = 0; it < max_iter; ++it) {
    const auto changed = kernels::serial::assign_nearest(x, c, run.labels, sq);
    if (changed == 0 && it > 0) break;
    run.iterations = it + 1;
    c = centroids_of(x, run.labels, k, counts);
    // repair empty clusters with the point farthest from its centroid
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (counts[run.labels[i]] <= 1) continue;
        const double dd = (x.row(i) - c.row(run.labels[i])).squaredNorm();
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      run.labels[far] = j;
      c = centroids_of(x, run.labels, k, counts);
    }
    double in = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) in += (x.row(i) - c.row(run.labels[i])).squaredNorm();
    run.trace.push_back(in);
    run.inertia = in;
  }
  return run;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& x, int k, const KMeansOptions& options) {
  const Eigen::Index n = x.n();
  if (k < 1) throw InputError("kmeans: k must be >= 1");
  if (k > n) throw InputError("kmeans: k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  if (options.restarts < 1) throw InputError("kmeans: restarts must be >= 1");
  if (!x.all_finite()) throw InputError("kmeans: embedding has non-finite entries");

  std::vector<RunResult> runs(options.restarts);
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < options.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    runs[r] = lloyd(x.values, k, std::max(1, options.max_iter), rng);
  }

  int best = 0;
  for (int r = 1; r < options.restarts; ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;

  KMeansResult out;
  out.partition = Partition::from_labels(runs[best].labels).canonical();
  out.inertia = runs[best].inertia;
  out.best_restart = best;
  out.iterations = runs[best].iterations;
  out.inertia_trace = std::move(runs[best].trace);
  return out;
}

double inertia(const EmbeddingMatrix& x, const Partition& p) {
  if (static_cast<Eigen::Index>(p.n()) != x.n()) throw InputError("inertia: partition size mismatch");
  std::vector<std::int64_t> counts;
  const Matrix c = centroids_of(x.values, p.labels, p.k, counts);
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.n(); ++i) s += (x.values.row(i) - c.row(p.labels[i])).squaredNorm();
  return s;
}

}  // namespace commune
