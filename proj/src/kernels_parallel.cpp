#include "commune/kernels.hpp"

#include <omp.h>

#include <cstdlib>
#include <limits>
#include <string>

namespace commune::kernels {

namespace parallel {

void spmm(const Csr& a, const Matrix& x, Matrix& out) {
  const std::int64_t n = a.n;
  const Eigen::Index c = x.cols();
  out.resize(n, c);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double* dst = out.row(i).data();
    for (Eigen::Index t = 0; t < c; ++t) dst[t] = 0.0;
    for (std::int64_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const double w = a.val[p];
      const double* src = x.row(a.col[p]).data();
      for (Eigen::Index t = 0; t < c; ++t) dst[t] += w * src[t];
    }
  }
}

void gram(const Matrix& z, Matrix& out) {
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  out.resize(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* zi = z.row(i).data();
    for (Eigen::Index j = i; j < n; ++j) {
      const double* zj = z.row(j).data();
      double s = 0.0;
      for (Eigen::Index t = 0; t < d; ++t) s += zi[t] * zj[t];
      out(i, j) = s;
    }
  }
  // mirror after the barrier so no thread reads a half-written row
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) out(i, j) = out(j, i);
}

void sym_times(const Matrix& g, const Matrix& z, Matrix& out) {
  const Eigen::Index n = g.rows();
  const Eigen::Index d = z.cols();
  out.resize(n, d);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    double* dst = out.row(i).data();
    for (Eigen::Index t = 0; t < d; ++t) dst[t] = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = g(i, j) + g(j, i);
      if (s == 0.0) continue;
      const double* zj = z.row(j).data();
      for (Eigen::Index t = 0; t < d; ++t) dst[t] += s * zj[t];
    }
  }
}

void row_dots(const Matrix& a, const Matrix& b, std::span<double> out) {
  const Eigen::Index n = a.rows();
  const Eigen::Index c = a.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* ai = a.row(i).data();
    const double* bi = b.row(i).data();
    double s = 0.0;
    for (Eigen::Index t = 0; t < c; ++t) s += ai[t] * bi[t];
    out[i] = s;
  }
}

std::int64_t assign_nearest(const Matrix& points, const Matrix& centroids,
                            std::span<int> labels, std::span<double> sq_dist) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centroids.rows();
  const Eigen::Index d = points.cols();
  std::int64_t changed = 0;
#pragma omp parallel for schedule(static) reduction(+ : changed)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* x = points.row(i).data();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      const double* m = centroids.row(c).data();
      double s = 0.0;
      for (Eigen::Index t = 0; t < d; ++t) {
        const double diff = x[t] - m[t];
        s += diff * diff;
      }
      if (s < best_d) {
        best_d = s;
        best = static_cast<int>(c);
      }
    }
    if (labels[i] != best) ++changed;
    labels[i] = best;
    sq_dist[i] = best_d;
  }
  return changed;
}

}  // namespace parallel

int apply_thread_cap_from_env() {
  const char* env = std::getenv("COMMUNE_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  int cap = 0;
  try {
    cap = std::stoi(env);
  } catch (const std::exception&) {
    return 0;
  }
  if (cap < 1) return 0;
  omp_set_num_threads(cap);
  return cap;
}

}  // namespace commune::kernels
