#include "commune/embed.hpp"

#include "adam.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace commune {

namespace {

// Pair rows are split into this many fixed blocks; each block owns its partial
// gradients, which are then summed in block order. The result is independent
// of the OpenMP thread count.
constexpr Eigen::Index kMaxBlocks = 64;

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

struct PairSample {
  // Per row, the destination columns included this epoch (all when empty).
  std::vector<std::vector<Eigen::Index>> cols;
  double count = 0.0;
};

struct Partial {
  Matrix dr;  // N x h, gradient w.r.t. the right half of the first layer input
  Matrix dw2, db2, dw3, db3;
  double loss = 0.0;
};

// Loss and gradient over the sampled pairs, normalized by the pair count.
VnnParams vnn_gradients_impl(const VnnParams& p, const Matrix& target, const PairSample* sample, double* loss) {
  const Eigen::Index n = p.e.rows();
  const Eigen::Index d = p.e.cols();
  const Eigen::Index h = p.w2.rows();
  const Matrix w1l = p.w1.topRows(d);
  const Matrix w1r = p.w1.bottomRows(d);
  Matrix left = p.e * w1l;
  left.rowwise() += p.b1.row(0);
  const Matrix right = p.e * w1r;
  const double pairs = sample != nullptr ? sample->count : static_cast<double>(n) * static_cast<double>(n);

  const Eigen::Index blocks = std::min(n, kMaxBlocks);
  std::vector<Partial> partial(blocks);
  Matrix dleft = Matrix::Zero(n, h);

#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    Partial& acc = partial[b];
    acc.dr = Matrix::Zero(n, h);
    acc.dw2 = Matrix::Zero(h, h);
    acc.db2 = Matrix::Zero(1, h);
    acc.dw3 = Matrix::Zero(h, 1);
    acc.db3 = Matrix::Zero(1, 1);
    const Eigen::Index lo = b * n / blocks;
    const Eigen::Index hi = (b + 1) * n / blocks;
    for (Eigen::Index i = lo; i < hi; ++i) {
      Matrix a1;
      Eigen::VectorXd t;
      const std::vector<Eigen::Index>* cols = sample != nullptr ? &sample->cols[i] : nullptr;
      if (cols != nullptr) {
        if (cols->empty()) continue;
        a1 = right(*cols, Eigen::all);
        t = target.row(i)(*cols).transpose();
      } else {
        a1 = right;
        t = target.row(i).transpose();
      }
      a1.rowwise() += left.row(i);
      const Matrix h1 = a1.cwiseMax(0.0);
      Matrix a2 = h1 * p.w2;
      a2.rowwise() += p.b2.row(0);
      const Matrix h2 = a2.cwiseMax(0.0);
      const Eigen::VectorXd y = (h2 * p.w3).col(0).array() + p.b3(0, 0);
      const Eigen::VectorXd diff = y - t;
      acc.loss += diff.squaredNorm();
      const Eigen::VectorXd gy = (2.0 / pairs) * diff;

      acc.dw3 += h2.transpose() * gy;
      acc.db3(0, 0) += gy.sum();
      const Matrix da2 = (a2.array() > 0.0).select((gy * p.w3.transpose()).array(), 0.0).matrix();
      acc.dw2 += h1.transpose() * da2;
      acc.db2 += da2.colwise().sum();
      const Matrix da1 = (a1.array() > 0.0).select((da2 * p.w2.transpose()).array(), 0.0).matrix();
      dleft.row(i) = da1.colwise().sum();
      if (cols != nullptr) {
        for (std::size_t c = 0; c < cols->size(); ++c) acc.dr.row((*cols)[c]) += da1.row(c);
      } else {
        acc.dr += da1;
      }
    }
  }

  VnnParams g = VnnParams::zeros_like(p);
  Matrix dright = Matrix::Zero(n, h);
  double total = 0.0;
  for (const Partial& acc : partial) {
    dright += acc.dr;
    g.w2 += acc.dw2;
    g.b2 += acc.db2;
    g.w3 += acc.dw3;
    g.b3 += acc.db3;
    total += acc.loss;
  }
  g.w1.topRows(d) = p.e.transpose() * dleft;
  g.w1.bottomRows(d) = p.e.transpose() * dright;
  g.b1 = dleft.colwise().sum();
  g.e = dleft * w1l.transpose() + dright * w1r.transpose();
  if (loss != nullptr) *loss = total / pairs;
  return g;
}

const Matrix& require(const TensorMap& t, const std::string& name) {
  const auto it = t.find(name);
  if (it == t.end()) throw InputError("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

}  // namespace

VnnParams VnnParams::init(Eigen::Index n, Eigen::Index d, Eigen::Index hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VnnParams p;
  p.e = normal_matrix(n, d, 0.1, rng);
  p.w1 = normal_matrix(2 * d, hidden, std::sqrt(2.0 / static_cast<double>(2 * d)), rng);
  p.w2 = normal_matrix(hidden, hidden, std::sqrt(2.0 / static_cast<double>(hidden)), rng);
  p.w3 = normal_matrix(hidden, 1, std::sqrt(1.0 / static_cast<double>(hidden)), rng);
  p.b1 = Matrix::Zero(1, hidden);
  p.b2 = Matrix::Zero(1, hidden);
  p.b3 = Matrix::Zero(1, 1);
  return p;
}

VnnParams VnnParams::zeros_like(const VnnParams& p) {
  VnnParams z;
  z.e = Matrix::Zero(p.e.rows(), p.e.cols());
  z.w1 = Matrix::Zero(p.w1.rows(), p.w1.cols());
  z.b1 = Matrix::Zero(1, p.b1.cols());
  z.w2 = Matrix::Zero(p.w2.rows(), p.w2.cols());
  z.b2 = Matrix::Zero(1, p.b2.cols());
  z.w3 = Matrix::Zero(p.w3.rows(), p.w3.cols());
  z.b3 = Matrix::Zero(1, 1);
  return z;
}

bool VnnParams::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

TensorMap VnnParams::to_tensors() const {
  TensorMap t;
  for_each([&](const char* name, const Matrix& m) { t[name] = m; });
  return t;
}

VnnParams VnnParams::from_tensors(const TensorMap& t) {
  VnnParams p;
  p.for_each([&](const char* name, Matrix& m) { m = require(t, name); });
  const auto d = p.e.cols();
  const auto h = p.w2.rows();
  const bool ok = p.w1.rows() == 2 * d && p.w1.cols() == h && p.w2.cols() == h && p.w3.rows() == h &&
                  p.w3.cols() == 1 && p.b1.size() == h && p.b2.size() == h && p.b3.size() == 1;
  if (!ok) throw InputError("checkpoint tensors have inconsistent VNN shapes");
  return p;
}

Matrix vnn_predict(const VnnParams& p) {
  const Eigen::Index n = p.e.rows();
  const Eigen::Index d = p.e.cols();
  Matrix left = p.e * p.w1.topRows(d);
  left.rowwise() += p.b1.row(0);
  const Matrix right = p.e * p.w1.bottomRows(d);
  Matrix out(n, n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix a1 = right;
    a1.rowwise() += left.row(i);
    Matrix a2 = a1.cwiseMax(0.0) * p.w2;
    a2.rowwise() += p.b2.row(0);
    out.row(i) = ((a2.cwiseMax(0.0) * p.w3).col(0).array() + p.b3(0, 0)).transpose();
  }
  return out;
}

VnnParams vnn_gradients(const VnnParams& params, const Matrix& target, double* loss) {
  if (target.rows() != params.e.rows() || target.cols() != params.e.rows())
    throw InputError("vnn_gradients: target shape does not match the embeddings");
  return vnn_gradients_impl(params, target, nullptr, loss);
}

VnnTrainResult train_vnn(const CommuteGraph& g, int d, const TrainConfig& cfg) {
  cfg.validate();
  if (d < 2) throw InputError("train_vnn: d must be >= 2");
  const Eigen::Index n = g.n();
  const Matrix target = cfg.log_loss ? log_transform(g) : g.weights.dense();
  VnnParams params = VnnParams::init(n, d, 2 * d, cfg.seed);

  VnnTrainResult out;
  out.losses.reserve(cfg.epochs);
  detail::Adam<VnnParams> adam(params, cfg.learning_rate);
  std::mt19937_64 sampler(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution keep(0.25);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss = 0.0;
    VnnParams grads;
    if (n > kVnnSubsampleThreshold) {
      PairSample sample;
      sample.cols.resize(n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (keep(sampler)) sample.cols[i].push_back(j);
      for (const auto& c : sample.cols) sample.count += static_cast<double>(c.size());
      if (sample.count == 0.0) continue;
      grads = vnn_gradients_impl(params, target, &sample, &loss);
    } else {
      grads = vnn_gradients_impl(params, target, nullptr, &loss);
    }
    out.losses.push_back(loss);
    if (!std::isfinite(loss) || !grads.all_finite()) throw TrainingError(epoch, out.losses);
    adam.step(params, grads);
    if (!params.all_finite()) throw TrainingError(epoch, out.losses);
  }
  out.embedding.values = params.e;
  out.embedding.method = "vnn";
  out.params = std::move(params);
  return out;
}

}  // namespace commune
