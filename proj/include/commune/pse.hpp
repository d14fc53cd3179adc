#pragma once

#include "commune/graph.hpp"
#include "commune/matrix.hpp"

#include <cstdint>
#include <vector>

namespace commune {

enum class SolverKind { Auto, Dense, Lanczos };

struct SpectralOptions {
  SolverKind solver = SolverKind::Auto;
  std::int64_t dense_threshold = 512;  // Auto uses the dense solver up to this size
  double tol = 1e-10;
  std::uint64_t seed = 0x5eed;
};

// Non-trivial normalized-Laplacian eigenpairs of one connected component.
struct ComponentSpectrum {
  std::vector<std::int64_t> nodes;  // graph indices, ascending
  Vector eigenvalues;               // ascending
  Eigen::MatrixXd vectors;          // nodes.size() x eigenvalues.size(), unit columns
  Vector residuals;
};

struct LaplacianEncoding {
  EmbeddingMatrix embedding;
  std::vector<ComponentSpectrum> components;  // components with >= 2 nodes
};

// Dense I - D^{-1/2} W D^{-1/2}; isolated nodes keep a 1 on the diagonal.
Matrix normalized_laplacian(const CommuteGraph& g);

// Eigenvectors of the d smallest non-trivial eigenvalues, computed per
// connected component; a component with fewer than d + 1 nodes leaves its
// remaining columns zero. Each vector's largest-magnitude entry is positive.
LaplacianEncoding laplacian_eigen_encoding(const CommuteGraph& g, int d, const SpectralOptions& options = {});

// Column k-1 holds diag(P^k), P = D⁻¹W, for k = 1..d. Isolated nodes get zeros.
EmbeddingMatrix random_walk_encoding(const CommuteGraph& g, int d);

struct SvdEncoding {
  EmbeddingMatrix embedding;  // U_d diag(sqrt(sigma))
  Vector singular_values;     // non-increasing
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  double truncation_error = 0.0;  // ||W - U Σ Vᵀ||_F
};

// Rank-d truncated SVD of the symmetric weight matrix.
SvdEncoding svd_encoding(const CommuteGraph& g, int d, const SpectralOptions& options = {});

}  // namespace commune
