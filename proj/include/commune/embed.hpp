#pragma once

#include "commune/error.hpp"
#include "commune/graph.hpp"
#include "commune/matrix.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace commune {

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  bool log_loss = true;  // reconstruct ln(1 + w) instead of w

  void validate() const;
};

// Raised when the loss or a parameter becomes non-finite.
class TrainingError : public ComputeError {
 public:
  TrainingError(int epoch, std::vector<double> losses);

  int epoch() const { return epoch_; }
  const std::vector<double>& losses() const { return losses_; }

 private:
  int epoch_;
  std::vector<double> losses_;
};

using TensorMap = std::map<std::string, Matrix>;

// Two propagation layers plus an affine+ReLU decoder feeding Z Zᵀ.
// Biases are stored as 1 x d rows.
struct GnnParams {
  Matrix h0;  // N x d learnable input embeddings
  Matrix w1, b1;
  Matrix w2, b2;
  Matrix wdec, bdec;

  static GnnParams init(Eigen::Index n, Eigen::Index d, std::uint64_t seed);
  static GnnParams zeros_like(const GnnParams& p);
  bool all_finite() const;

  TensorMap to_tensors() const;
  static GnnParams from_tensors(const TensorMap& tensors);

  template <typename F>
  void for_each(F&& f) {
    f("h0", h0); f("w1", w1); f("b1", b1); f("w2", w2); f("b2", b2); f("wdec", wdec); f("bdec", bdec);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("h0", h0); f("w1", w1); f("b1", b1); f("w2", w2); f("b2", b2); f("wdec", wdec); f("bdec", bdec);
  }
};

// Every intermediate of the forward pass, kept for backpropagation.
struct GnnForward {
  Matrix m1, u1, h1;  // m1 = Â h0, u1 = m1 w1 + b1, h1 = relu(u1)
  Matrix m2, u2, h2;
  Matrix u3, z;       // z = relu(h2 wdec + bdec)
  Matrix a_hat;       // z zᵀ
};

GnnForward gnn_forward(const GnnParams& params, const PropagationMatrix& prop);

// (1/N²) Σ (target - a_hat)²
double reconstruction_loss(const Matrix& a_hat, const Matrix& target);

// Exact gradient of reconstruction_loss with respect to every parameter.
GnnParams gnn_gradients(const GnnParams& params, const PropagationMatrix& prop, const Matrix& target,
                        double* loss = nullptr);

struct GnnTrainResult {
  EmbeddingMatrix embedding;  // H2
  GnnParams params;
  std::vector<double> losses;  // losses[e] evaluated before update e
};

GnnTrainResult train_gnn(const CommuteGraph& g, int d, const TrainConfig& cfg);
// Continues from given parameters (shapes must match the graph).
GnnTrainResult train_gnn(const CommuteGraph& g, GnnParams params, const TrainConfig& cfg);

// Pairwise MLP baseline: Â_ij = MLP([e_i, e_j]) with layers 2d -> h -> h -> 1.
struct VnnParams {
  Matrix e;  // N x d
  Matrix w1, b1;  // 2d x h
  Matrix w2, b2;  // h x h
  Matrix w3, b3;  // h x 1

  static VnnParams init(Eigen::Index n, Eigen::Index d, Eigen::Index hidden, std::uint64_t seed);
  static VnnParams zeros_like(const VnnParams& p);
  bool all_finite() const;

  TensorMap to_tensors() const;
  static VnnParams from_tensors(const TensorMap& tensors);

  template <typename F>
  void for_each(F&& f) {
    f("e", e); f("w1", w1); f("b1", b1); f("w2", w2); f("b2", b2); f("w3", w3); f("b3", b3);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("e", e); f("w1", w1); f("b1", b1); f("w2", w2); f("b2", b2); f("w3", w3); f("b3", b3);
  }
};

// Node count above which each epoch uses a seeded 25% sample of the pairs.
inline constexpr Eigen::Index kVnnSubsampleThreshold = 3000;

// Predictions for every ordered pair (N x N, not symmetric in general).
Matrix vnn_predict(const VnnParams& params);

// Loss over all pairs, (1/N²) Σ (target - Â)², and its exact gradient.
VnnParams vnn_gradients(const VnnParams& params, const Matrix& target, double* loss = nullptr);

struct VnnTrainResult {
  EmbeddingMatrix embedding;  // E
  VnnParams params;
  std::vector<double> losses;
};

VnnTrainResult train_vnn(const CommuteGraph& g, int d, const TrainConfig& cfg);

// Serialized trainer state: enough to re-emit embeddings without training.
struct Checkpoint {
  std::string method;
  TrainConfig config;
  double final_loss = 0.0;
  std::vector<std::string> node_ids;
  TensorMap tensors;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace commune
