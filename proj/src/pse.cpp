#include "commune/pse.hpp"

#include "commune/error.hpp"
#include "commune/kernels.hpp"
#include "commune/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace commune {

namespace {

// Flips v so its largest-magnitude entry (first one on near-ties) is positive.
void fix_sign(Eigen::Ref<Vector> v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= peak * (1.0 - 1e-9)) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

bool use_dense(const SpectralOptions& options, std::int64_t n) {
  switch (options.solver) {
    case SolverKind::Dense: return true;
    case SolverKind::Lanczos: return false;
    case SolverKind::Auto: return n <= options.dense_threshold;
  }
  return true;
}

// D^{-1/2} W D^{-1/2} for a graph without isolated nodes.
Csr normalized_adjacency(const CommuteGraph& g) {
  const auto deg = g.degrees();
  Csr s = g.weights;
  for (std::int64_t i = 0; i < s.n; ++i)
    for (std::int64_t p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
      const double di = deg[i];
      const double dj = deg[s.col[p]];
      s.val[p] = di > 0.0 && dj > 0.0 ? s.val[p] / std::sqrt(di * dj) : 0.0;
    }
  return s;
}

SymmetricOperator sparse_operator(const Csr& a) {
  return [&a](const Vector& x, Vector& y) {
    y.resize(a.n);
    for (std::int64_t i = 0; i < a.n; ++i) {
      double s = 0.0;
      for (std::int64_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) s += a.val[p] * x[a.col[p]];
      y[i] = s;
    }
  };
}

ComponentSpectrum component_spectrum(const CommuteGraph& sub, Eigen::Index count, const SpectralOptions& options) {
  const std::int64_t n = sub.n();
  ComponentSpectrum out;
  out.eigenvalues.resize(count);
  out.vectors.resize(n, count);
  out.residuals.resize(count);
  const Matrix lap = normalized_laplacian(sub);

  if (use_dense(options, n)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(lap)};
    if (es.info() != Eigen::Success) throw ComputeError("dense Laplacian eigensolver failed");
    // ascending; index 0 is the trivial eigenvalue of a connected component
    out.eigenvalues = es.eigenvalues().segment(1, count);
    out.vectors = es.eigenvectors().middleCols(1, count);
  } else {
    const Csr s = normalized_adjacency(sub);
    const auto deg = sub.degrees();
    Eigen::MatrixXd trivial(n, 1);
    for (std::int64_t i = 0; i < n; ++i) trivial(i, 0) = std::sqrt(deg[i]);
    trivial.col(0).normalize();
    LanczosOptions lo;
    lo.tol = options.tol;
    lo.seed = options.seed;
    // largest eigenvalues mu of S are the smallest 1 - mu of L
    const EigenPairs pairs = lanczos(sparse_operator(s), n, count, Spectrum::Largest, trivial, lo);
    for (Eigen::Index c = 0; c < count; ++c) out.eigenvalues[c] = 1.0 - pairs.values[c];
    out.vectors = pairs.vectors;
  }

  for (Eigen::Index c = 0; c < count; ++c) {
    out.vectors.col(c).normalize();
    fix_sign(out.vectors.col(c));
    out.residuals[c] = (lap * out.vectors.col(c) - out.eigenvalues[c] * out.vectors.col(c)).norm();
  }
  const double worst = count > 0 ? out.residuals.maxCoeff() : 0.0;
  if (worst > 1e-8) {
    std::ostringstream msg;
    msg << "Laplacian eigenpairs did not converge: max residual " << worst;
    throw ComputeError(msg.str());
  }
  return out;
}

}  // namespace

Matrix normalized_laplacian(const CommuteGraph& g) {
  const auto deg = g.degrees();
  Matrix lap = Matrix::Identity(g.n(), g.n());
  const Csr& w = g.weights;
  for (std::int64_t i = 0; i < w.n; ++i)
    for (std::int64_t p = w.row_ptr[i]; p < w.row_ptr[i + 1]; ++p)
      lap(i, w.col[p]) -= w.val[p] / std::sqrt(deg[i] * deg[w.col[p]]);
  return lap;
}

LaplacianEncoding laplacian_eigen_encoding(const CommuteGraph& g, int d, const SpectralOptions& options) {
  if (d < 1) throw InputError("laplacian encoding: d must be >= 1");
  if (d >= g.n())
    throw InputError("laplacian encoding: d = " + std::to_string(d) + " must be below n = " + std::to_string(g.n()));

  LaplacianEncoding enc;
  enc.embedding.method = "le";
  enc.embedding.values = Matrix::Zero(g.n(), d);
  for (const auto& nodes : connected_components(g)) {
    if (nodes.size() < 2) continue;
    const auto count = std::min<Eigen::Index>(d, static_cast<Eigen::Index>(nodes.size()) - 1);
    ComponentSpectrum spec = component_spectrum(induced_subgraph(g, nodes), count, options);
    for (std::size_t r = 0; r < nodes.size(); ++r)
      for (Eigen::Index c = 0; c < count; ++c) enc.embedding.values(nodes[r], c) = spec.vectors(r, c);
    spec.nodes = nodes;
    enc.components.push_back(std::move(spec));
  }
  return enc;
}

EmbeddingMatrix random_walk_encoding(const CommuteGraph& g, int d) {
  if (d < 1) throw InputError("random walk encoding: d must be >= 1");
  const std::int64_t n = g.n();
  // diag(P^k) = diag(S^k) for the symmetric S = D^{-1/2} W D^{-1/2}, and
  // diag(S^(a+b))_i = sum_l (S^b)_il (S^a)_il, so two consecutive powers suffice.
  const Csr s = normalized_adjacency(g);
  Matrix low = Matrix::Identity(n, n);  // S^a
  Matrix high;                          // S^b, b in {a, a + 1}
  kernels::parallel::spmm(s, low, high);

  EmbeddingMatrix out;
  out.method = "rw";
  out.values = Matrix::Zero(n, d);
  std::vector<double> diag(n);
  for (int k = 1; k <= d; ++k) {
    if (k % 2 == 0 && k > 1) {
      // (a, a + 1) -> (a + 1, a + 1)
      low = high;
    } else if (k > 1) {
      // (a, a) -> (a, a + 1)
      kernels::parallel::spmm(s, low, high);
    }
    kernels::parallel::row_dots(high, low, diag);
    for (std::int64_t i = 0; i < n; ++i) out.values(i, k - 1) = std::clamp(diag[i], 0.0, 1.0);
  }
  return out;
}

SvdEncoding svd_encoding(const CommuteGraph& g, int d, const SpectralOptions& options) {
  const std::int64_t n = g.n();
  if (d < 1) throw InputError("svd encoding: d must be >= 1");
  if (d > n) throw InputError("svd encoding: d = " + std::to_string(d) + " exceeds n = " + std::to_string(n));

  // W is symmetric: singular values are |lambda|, U = eigenvectors, V = sign(lambda) U.
  Vector lambda(d);
  Eigen::MatrixXd vecs(n, d);
  const Matrix dense_w = g.weights.dense();
  if (use_dense(options, n)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(dense_w)};
    if (es.info() != Eigen::Success) throw ComputeError("dense eigensolver failed");
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Vector& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (std::abs(ev[a]) != std::abs(ev[b])) return std::abs(ev[a]) > std::abs(ev[b]);
      return ev[a] > ev[b];
    });
    for (int c = 0; c < d; ++c) {
      lambda[c] = ev[order[c]];
      vecs.col(c) = es.eigenvectors().col(order[c]);
    }
  } else {
    LanczosOptions lo;
    lo.tol = options.tol;
    lo.seed = options.seed;
    const Eigen::MatrixXd none(n, 0);
    const EigenPairs pairs = lanczos(sparse_operator(g.weights), n, d, Spectrum::LargestMagnitude, none, lo);
    lambda = pairs.values;
    vecs = pairs.vectors;
  }

  SvdEncoding out;
  out.singular_values = lambda.cwiseAbs();
  out.u = vecs;
  out.v = vecs;
  for (int c = 0; c < d; ++c) {
    out.u.col(c).normalize();
    fix_sign(out.u.col(c));
    out.v.col(c) = lambda[c] < 0.0 ? Vector(-out.u.col(c)) : Vector(out.u.col(c));
  }
  out.embedding.method = "svd";
  out.embedding.values = out.u * out.singular_values.cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd approx = out.u * out.singular_values.asDiagonal() * out.v.transpose();
  out.truncation_error = (Eigen::MatrixXd(dense_w) - approx).norm();
  return out;
}

}  // namespace commune
