#include "commune/kernels.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

namespace {

using commune::Csr;
using commune::Matrix;
namespace kernels = commune::kernels;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Row-stochastic sparse matrix with about `per_row` entries per row, like a
// normalized commute graph.
Csr random_csr(std::int64_t n, int per_row, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
  Csr a;
  a.n = n;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> cols{i};
    for (int k = 0; k < per_row; ++k) cols.push_back(pick(rng));
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    for (auto c : cols) {
      a.col.push_back(c);
      a.val.push_back(1.0 / static_cast<double>(cols.size()));
    }
    a.row_ptr.push_back(a.nnz());
  }
  return a;
}

template <bool Parallel>
void BM_spmm(benchmark::State& state) {
  const auto n = state.range(0);
  const Csr a = random_csr(n, 20, 1);
  const Matrix x = random_matrix(n, 32, 2);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::spmm(a, x, out);
    else
      kernels::serial::spmm(a, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * a.nnz() * x.cols());
}

template <bool Parallel>
void BM_gram(benchmark::State& state) {
  const Matrix z = random_matrix(state.range(0), 16, 3);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::gram(z, out);
    else
      kernels::serial::gram(z, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_sym_times(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix g = random_matrix(n, n, 4);
  const Matrix z = random_matrix(n, 16, 5);
  Matrix out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::sym_times(g, z, out);
    else
      kernels::serial::sym_times(g, z, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_row_dots(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = random_matrix(n, 64, 6);
  const Matrix b = random_matrix(n, 64, 7);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::row_dots(a, b, out);
    else
      kernels::serial::row_dots(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_assign_nearest(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix points = random_matrix(n, 16, 8);
  const Matrix centroids = random_matrix(8, 16, 9);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (auto _ : state) {
    std::fill(labels.begin(), labels.end(), -1);
    std::int64_t changed = 0;
    if constexpr (Parallel)
      changed = kernels::parallel::assign_nearest(points, centroids, labels, dist);
    else
      changed = kernels::serial::assign_nearest(points, centroids, labels, dist);
    benchmark::DoNotOptimize(changed);
  }
}

}  // namespace

BENCHMARK(BM_spmm<false>)->Name("spmm/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_spmm<true>)->Name("spmm/parallel")->Arg(2000)->Arg(20000)->UseRealTime();
BENCHMARK(BM_gram<false>)->Name("gram/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_gram<true>)->Name("gram/parallel")->Arg(500)->Arg(2000)->UseRealTime();
BENCHMARK(BM_sym_times<false>)->Name("sym_times/serial")->Arg(500)->Arg(2000);
BENCHMARK(BM_sym_times<true>)->Name("sym_times/parallel")->Arg(500)->Arg(2000)->UseRealTime();
BENCHMARK(BM_row_dots<false>)->Name("row_dots/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_row_dots<true>)->Name("row_dots/parallel")->Arg(10000)->Arg(100000)->UseRealTime();
BENCHMARK(BM_assign_nearest<false>)->Name("assign_nearest/serial")->Arg(10000)->Arg(100000);
BENCHMARK(BM_assign_nearest<true>)->Name("assign_nearest/parallel")->Arg(10000)->Arg(100000)->UseRealTime();

int main(int argc, char** argv) {
  kernels::apply_thread_cap_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
