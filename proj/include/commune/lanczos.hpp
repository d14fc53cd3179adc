#pragma once

#include "commune/matrix.hpp"

#include <cstdint>
#include <functional>

namespace commune {

// y = A x for a symmetric operator A.
using SymmetricOperator = std::function<void(const Vector& x, Vector& y)>;

enum class Spectrum {
  Largest,           // algebraically largest eigenvalues
  LargestMagnitude,  // largest |lambda|, ties to the larger lambda
};

struct LanczosOptions {
  double tol = 1e-10;          // Ritz residual bound, relative to max(1, |theta|)
  double residual_tol = 1e-8;  // explicit ||A v - lambda v|| bound checked on exit
  std::int64_t max_iter = 0;   // 0 -> 10 * n
  std::uint64_t seed = 0x5eed;
};

struct EigenPairs {
  Vector values;       // ordered by the requested spectrum end
  Eigen::MatrixXd vectors;  // n x count, orthonormal columns
  Vector residuals;    // ||A v - lambda v|| per pair, recomputed explicitly
  std::int64_t iterations = 0;
};

// Lanczos with full reorthogonalization. The search runs in the orthogonal
// complement of `deflate` (n x p, orthonormal columns, may be empty). An
// exhausted Krylov space is restarted from a fresh random vector, so repeated
// eigenvalues are found once the iteration runs to the full dimension.
// Throws ComputeError when the pairs do not converge within max_iter.
EigenPairs lanczos(const SymmetricOperator& op, Eigen::Index n, Eigen::Index count, Spectrum which,
                   const Eigen::MatrixXd& deflate, const LanczosOptions& options = {});

}  // namespace commune
