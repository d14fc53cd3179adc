#include "commune/lanczos.hpp"

#include "commune/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace commune {

namespace {

// Removes components along the deflation block and the current basis. Two
// classical Gram-Schmidt passes keep the basis orthogonal to working precision.
void orthogonalize(Vector& w, const Eigen::MatrixXd& deflate, const Eigen::MatrixXd& basis, Eigen::Index m) {
  for (int pass = 0; pass < 2; ++pass) {
    if (deflate.cols() > 0) w -= deflate * (deflate.transpose() * w);
    if (m > 0) w -= basis.leftCols(m) * (basis.leftCols(m).transpose() * w);
  }
}

std::vector<Eigen::Index> select(const Vector& theta, Eigen::Index count, Spectrum which) {
  std::vector<Eigen::Index> order(theta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (which == Spectrum::LargestMagnitude) {
      const double ma = std::abs(theta[a]);
      const double mb = std::abs(theta[b]);
      if (ma != mb) return ma > mb;
    }
    return theta[a] > theta[b];
  });
  order.resize(std::min<Eigen::Index>(count, theta.size()));
  return order;
}

}  // namespace

EigenPairs lanczos(const SymmetricOperator& op, Eigen::Index n, Eigen::Index count, Spectrum which,
                   const Eigen::MatrixXd& deflate, const LanczosOptions& options) {
  const Eigen::Index dim = n - deflate.cols();
  if (count < 1 || count > dim)
    throw InputError("lanczos: requested " + std::to_string(count) + " pairs from a space of dimension " +
                     std::to_string(dim));
  const std::int64_t max_iter = options.max_iter > 0 ? options.max_iter : 10 * static_cast<std::int64_t>(n);
  const Eigen::Index max_basis = std::min<Eigen::Index>(dim, max_iter);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd basis(n, max_basis);
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples basis j and j + 1

  auto fresh_start = [&](Eigen::Index m) -> bool {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Vector v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
      orthogonalize(v, deflate, basis, m);
      const double norm = v.norm();
      if (norm > 1e-8) {
        basis.col(m) = v / norm;
        return true;
      }
    }
    return false;
  };

  if (!fresh_start(0)) throw ComputeError("lanczos: could not build a start vector");

  Vector w(n);
  Eigen::Index m = 0;
  double scale = 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  std::vector<Eigen::Index> chosen;
  bool converged = false;
  bool restarted = false;  // an exhausted Krylov space can hide repeated eigenvalues

  while (m < max_basis) {
    const Vector q = basis.col(m);
    op(q, w);
    const double a = q.dot(w);
    alpha.push_back(a);
    ++m;
    orthogonalize(w, deflate, basis, m);
    double b = w.norm();
    scale = std::max({scale, std::abs(a), b});

    bool stop = m == max_basis;
    const bool breakdown = b <= 1e-12 * std::max(scale, 1.0);
    if (!stop) {
      if (breakdown) {
        b = 0.0;
        if (fresh_start(m))
          restarted = true;
        else
          stop = true;
      } else {
        basis.col(m) = w / b;
      }
    }
    beta.push_back(b);

    const bool check = stop || (m >= count && (m % 8 == 0 || breakdown));
    if (!check) continue;

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      t(j, j) = alpha[j];
      if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    tri.compute(t);
    if (m < count) {
      if (stop) break;
      continue;
    }
    chosen = select(tri.eigenvalues(), count, which);
    const double tail = beta[m - 1];
    converged = std::all_of(chosen.begin(), chosen.end(), [&](Eigen::Index c) {
      const double theta = tri.eigenvalues()[c];
      return std::abs(tail * tri.eigenvectors()(m - 1, c)) <= options.tol * std::max(1.0, std::abs(theta));
    });
    if ((converged && !restarted) || stop) break;
  }

  if (chosen.empty()) throw ComputeError("lanczos: no Ritz pairs computed");

  EigenPairs out;
  out.iterations = m;
  out.values.resize(count);
  out.vectors.resize(n, count);
  out.residuals.resize(count);
  Vector av(n);
  for (Eigen::Index c = 0; c < count; ++c) {
    Vector v = basis.leftCols(m) * tri.eigenvectors().col(chosen[c]);
    v.normalize();
    op(v, av);
    const double rq = v.dot(av);
    out.values[c] = rq;
    out.vectors.col(c) = v;
    out.residuals[c] = (av - rq * v).norm();
  }

  double worst = 0.0;
  for (Eigen::Index c = 0; c < count; ++c)
    worst = std::max(worst, out.residuals[c] / std::max(1.0, std::abs(out.values[c])));
  if (worst > options.residual_tol) {
    std::ostringstream msg;
    msg << "lanczos: no convergence after " << m << " iterations; max residual " << worst;
    throw ComputeError(msg.str());
  }
  return out;
}

}  // namespace commune
