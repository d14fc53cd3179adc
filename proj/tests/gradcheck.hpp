#pragma once

// Central finite-difference oracles for the GNN and VNN losses. The losses
// here are recomputed with plain dense Eigen code, independent of the
// library's kernels, and also report every ReLU pre-activation sign so
// perturbations that cross a kink can be told apart from real mismatches.

#include "commune/embed.hpp"
#include "commune/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace commune::testing {

struct LossEval {
  double loss = 0.0;
  std::vector<bool> mask;  // pre-activation > 0, all layers concatenated
};

inline void append_mask(const Matrix& pre, std::vector<bool>& mask) {
  for (Eigen::Index i = 0; i < pre.size(); ++i) mask.push_back(pre.data()[i] > 0.0);
}

inline Matrix add_row(Matrix m, const Matrix& bias) {
  m.rowwise() += bias.row(0);
  return m;
}

inline LossEval gnn_loss_oracle(const GnnParams& p, const Matrix& a_norm, const Matrix& target) {
  LossEval out;
  const Matrix u1 = add_row(a_norm * p.h0 * p.w1, p.b1);
  const Matrix h1 = u1.cwiseMax(0.0);
  const Matrix u2 = add_row(a_norm * h1 * p.w2, p.b2);
  const Matrix h2 = u2.cwiseMax(0.0);
  const Matrix u3 = add_row(h2 * p.wdec, p.bdec);
  const Matrix z = u3.cwiseMax(0.0);
  const Matrix a_hat = z * z.transpose();
  const double n = static_cast<double>(target.rows());
  out.loss = (target - a_hat).squaredNorm() / (n * n);
  append_mask(u1, out.mask);
  append_mask(u2, out.mask);
  append_mask(u3, out.mask);
  return out;
}

inline LossEval vnn_loss_oracle(const VnnParams& p, const Matrix& target) {
  LossEval out;
  const Eigen::Index n = p.e.rows();
  const Eigen::Index d = p.e.cols();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Matrix x(1, 2 * d);
      x << p.e.row(i), p.e.row(j);
      const Matrix a1 = x * p.w1 + p.b1;
      const Matrix a2 = a1.cwiseMax(0.0) * p.w2 + p.b2;
      const double y = (a2.cwiseMax(0.0) * p.w3)(0, 0) + p.b3(0, 0);
      sum += (target(i, j) - y) * (target(i, j) - y);
      append_mask(a1, out.mask);
      append_mask(a2, out.mask);
    }
  out.loss = sum / static_cast<double>(n * n);
  return out;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // tensor[index] of the worst entry
  int checked = 0;
  int skipped = 0;  // perturbation crossed a ReLU kink
};

// rel = |a - f| / max(|a|, |f|, floor)
template <typename Params, typename Loss>
GradCheck finite_difference_check(Params params, const Params& analytic, Loss&& loss, double step = 1e-5,
                                  double floor = 1e-6) {
  GradCheck out;
  params.for_each([&](const char* name, Matrix& m) {
    const Matrix* grad = nullptr;
    analytic.for_each([&](const char* other, const Matrix& g) {
      if (std::string(other) == name) grad = &g;
    });
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      const double saved = m.data()[k];
      m.data()[k] = saved + step;
      const LossEval plus = loss(params);
      m.data()[k] = saved - step;
      const LossEval minus = loss(params);
      m.data()[k] = saved;
      if (plus.mask != minus.mask) {
        ++out.skipped;
        continue;
      }
      ++out.checked;
      const double fd = (plus.loss - minus.loss) / (2.0 * step);
      const double a = grad->data()[k];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), floor});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = std::string(name) + "[" + std::to_string(k) + "]";
      }
    }
  });
  return out;
}

// Non-zero biases so every bias gradient is exercised.
inline GnnParams gnn_test_params(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  GnnParams p = GnnParams::init(n, d, seed);
  p.h0 *= 5.0;
  p.b1.setConstant(0.02);
  p.b2.setConstant(0.02);
  p.bdec.setConstant(0.05);
  return p;
}

inline VnnParams vnn_test_params(Eigen::Index n, Eigen::Index d, Eigen::Index h, std::uint64_t seed) {
  VnnParams p = VnnParams::init(n, d, h, seed);
  p.b1.setConstant(0.01);
  p.b2.setConstant(0.01);
  p.b3.setConstant(0.1);
  return p;
}

inline GradCheck check_gnn_gradients(const CommuteGraph& g, const GnnParams& p) {
  const PropagationMatrix prop = normalize_adjacency(g);
  const Matrix a_norm = prop.rows.dense();
  const Matrix target = log_transform(g);
  const GnnParams grads = gnn_gradients(p, prop, target);
  return finite_difference_check(p, grads, [&](const GnnParams& q) { return gnn_loss_oracle(q, a_norm, target); });
}

inline GradCheck check_vnn_gradients(const CommuteGraph& g, const VnnParams& p) {
  const Matrix target = log_transform(g);
  const VnnParams grads = vnn_gradients(p, target);
  return finite_difference_check(p, grads, [&](const VnnParams& q) { return vnn_loss_oracle(q, target); });
}

}  // namespace commune::testing
