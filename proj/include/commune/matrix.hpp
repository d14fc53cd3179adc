#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace commune {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Compressed sparse row matrix, square, column indices sorted within a row.
struct Csr {
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int64_t> col;
  std::vector<double> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
  double at(std::int64_t i, std::int64_t j) const;
  double row_sum(std::int64_t i) const;
  Matrix dense() const;
  Csr transpose() const;
};

}  // namespace commune

namespace commune {

// N x d node representation with a provenance tag (gnn, vnn, le, rw, svd).
struct EmbeddingMatrix {
  Matrix values;
  std::string method;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index d() const { return values.cols(); }
  bool all_finite() const { return values.allFinite(); }
};

}  // namespace commune
