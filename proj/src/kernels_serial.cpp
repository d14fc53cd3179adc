#include "commune/kernels.hpp"

#include <limits>

// Straightforward reference loops. Summation order matches the OpenMP
// versions term for term.

namespace commune::kernels::serial {

void spmm(const Csr& a, const Matrix& x, Matrix& out) {
  out = Matrix::Zero(a.n, x.cols());
  for (std::int64_t i = 0; i < a.n; ++i)
    for (std::int64_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      for (Eigen::Index t = 0; t < x.cols(); ++t) out(i, t) += a.val[p] * x(a.col[p], t);
}

void gram(const Matrix& z, Matrix& out) {
  const Eigen::Index n = z.rows();
  out.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index t = 0; t < z.cols(); ++t) s += z(i, t) * z(j, t);
      out(i, j) = s;
    }
}

void sym_times(const Matrix& g, const Matrix& z, Matrix& out) {
  const Eigen::Index n = g.rows();
  out = Matrix::Zero(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = g(i, j) + g(j, i);
      if (s == 0.0) continue;
      for (Eigen::Index t = 0; t < z.cols(); ++t) out(i, t) += s * z(j, t);
    }
}

void row_dots(const Matrix& a, const Matrix& b, std::span<double> out) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < a.cols(); ++t) s += a(i, t) * b(i, t);
    out[i] = s;
  }
}

std::int64_t assign_nearest(const Matrix& points, const Matrix& centroids,
                            std::span<int> labels, std::span<double> sq_dist) {
  std::int64_t changed = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      double s = 0.0;
      for (Eigen::Index t = 0; t < points.cols(); ++t) {
        const double diff = points(i, t) - centroids(c, t);
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

}  // namespace commune::kernels::serial
