#pragma once

#include "commune/matrix.hpp"

#include <cmath>
#include <vector>

namespace commune::detail {

template <typename Params>
std::vector<Matrix*> tensor_ptrs(Params& p) {
  std::vector<Matrix*> out;
  p.for_each([&](const char*, Matrix& m) { out.push_back(&m); });
  return out;
}

template <typename Params>
std::vector<const Matrix*> tensor_ptrs(const Params& p) {
  std::vector<const Matrix*> out;
  p.for_each([&](const char*, const Matrix& m) { out.push_back(&m); });
  return out;
}

// Full-batch adaptive moment estimation, beta = (0.9, 0.999), eps = 1e-8.
template <typename Params>
class Adam {
 public:
  Adam(const Params& like, double lr)
      : first_(Params::zeros_like(like)), second_(Params::zeros_like(like)), lr_(lr) {}

  void step(Params& params, const Params& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    auto p = tensor_ptrs(params);
    auto g = tensor_ptrs(grads);
    auto m = tensor_ptrs(first_);
    auto v = tensor_ptrs(second_);
    for (std::size_t k = 0; k < p.size(); ++k) {
      *m[k] = kBeta1 * *m[k] + (1.0 - kBeta1) * *g[k];
      *v[k] = kBeta2 * *v[k] + (1.0 - kBeta2) * g[k]->cwiseProduct(*g[k]);
      *p[k] -= (lr_ / c1) * m[k]->cwiseQuotient(((*v[k] / c2).cwiseSqrt().array() + kEps).matrix());
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Params first_;
  Params second_;
  double lr_;
  int t_ = 0;
};

}  // namespace commune::detail
