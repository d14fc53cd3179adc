#pragma once

// Data-parallel kernels used by the training, encoding and clustering loops.
//
// Every kernel exists twice: `parallel::` (OpenMP) and `serial::` (plain
// loops, kept as the reference). Each output element is produced by exactly
// one thread with a fixed summation order, so both variants return
// bit-identical results for any thread count.

#include "commune/matrix.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace commune::kernels {

namespace parallel {

// out = a * x, with `a` sparse (n x n) and `x` dense (n x c).
void spmm(const Csr& a, const Matrix& x, Matrix& out);
// out = z * zᵀ (symmetric; the upper triangle is mirrored).
void gram(const Matrix& z, Matrix& out);
// out = (g + gᵀ) * z for square g.
void sym_times(const Matrix& g, const Matrix& z, Matrix& out);
// out_i = sum_j a_ij * b_ij for each row i.
void row_dots(const Matrix& a, const Matrix& b, std::span<double> out);
// Nearest centroid by squared Euclidean distance; ties to the lowest index.
// Returns the number of points whose label changed.
std::int64_t assign_nearest(const Matrix& points, const Matrix& centroids,
                            std::span<int> labels, std::span<double> sq_dist);

}  // namespace parallel

namespace serial {

void spmm(const Csr& a, const Matrix& x, Matrix& out);
void gram(const Matrix& z, Matrix& out);
void sym_times(const Matrix& g, const Matrix& z, Matrix& out);
void row_dots(const Matrix& a, const Matrix& b, std::span<double> out);
std::int64_t assign_nearest(const Matrix& points, const Matrix& centroids,
                            std::span<int> labels, std::span<double> sq_dist);

}  // namespace serial

// Caps OpenMP worker threads from COMMUNE_THREADS when set. Returns the cap
// in effect (0 when unset).
int apply_thread_cap_from_env();

}  // namespace commune::kernels
