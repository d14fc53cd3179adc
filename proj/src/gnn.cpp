#include "commune/embed.hpp"

#include "adam.hpp"
#include "commune/kernels.hpp"

#include <json.hpp>

#include <cmath>
#include <random>

namespace commune {

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("learning rate must be > 0");
}

TrainingError::TrainingError(int epoch, std::vector<double> losses)
    : ComputeError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss or parameters)"),
      epoch_(epoch),
      losses_(std::move(losses)) {}

namespace {

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

// grad ⊙ [pre > 0]
Matrix relu_backward(const Matrix& grad, const Matrix& pre) {
  return (pre.array() > 0.0).select(grad.array(), 0.0).matrix();
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

const Matrix& require(const TensorMap& t, const std::string& name) {
  const auto it = t.find(name);
  if (it == t.end()) throw InputError("checkpoint is missing tensor '" + name + "'");
  return it->second;
}

}  // namespace

GnnParams GnnParams::init(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double glorot = std::sqrt(2.0 / static_cast<double>(d + d));
  GnnParams p;
  p.h0 = normal_matrix(n, d, 0.1, rng);
  p.w1 = normal_matrix(d, d, glorot, rng);
  p.w2 = normal_matrix(d, d, glorot, rng);
  p.wdec = normal_matrix(d, d, glorot, rng);
  p.b1 = Matrix::Zero(1, d);
  p.b2 = Matrix::Zero(1, d);
  p.bdec = Matrix::Zero(1, d);
  return p;
}

GnnParams GnnParams::zeros_like(const GnnParams& p) {
  GnnParams z;
  z.h0 = Matrix::Zero(p.h0.rows(), p.h0.cols());
  z.w1 = Matrix::Zero(p.w1.rows(), p.w1.cols());
  z.b1 = Matrix::Zero(1, p.b1.cols());
  z.w2 = Matrix::Zero(p.w2.rows(), p.w2.cols());
  z.b2 = Matrix::Zero(1, p.b2.cols());
  z.wdec = Matrix::Zero(p.wdec.rows(), p.wdec.cols());
  z.bdec = Matrix::Zero(1, p.bdec.cols());
  return z;
}

bool GnnParams::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

TensorMap GnnParams::to_tensors() const {
  TensorMap t;
  for_each([&](const char* name, const Matrix& m) { t[name] = m; });
  return t;
}

GnnParams GnnParams::from_tensors(const TensorMap& t) {
  GnnParams p;
  p.for_each([&](const char* name, Matrix& m) { m = require(t, name); });
  const auto d = p.h0.cols();
  const bool ok = p.w1.rows() == d && p.w1.cols() == d && p.w2.rows() == d && p.w2.cols() == d &&
                  p.wdec.rows() == d && p.wdec.cols() == d && p.b1.size() == d && p.b2.size() == d &&
                  p.bdec.size() == d;
  if (!ok) throw InputError("checkpoint tensors have inconsistent GNN shapes");
  return p;
}

GnnForward gnn_forward(const GnnParams& p, const PropagationMatrix& prop) {
  if (p.h0.rows() != prop.rows.n) throw InputError("gnn_forward: H0 rows do not match the graph");
  GnnForward f;
  kernels::parallel::spmm(prop.rows, p.h0, f.m1);
  f.u1 = f.m1 * p.w1;
  f.u1.rowwise() += p.b1.row(0);
  f.h1 = relu(f.u1);
  kernels::parallel::spmm(prop.rows, f.h1, f.m2);
  f.u2 = f.m2 * p.w2;
  f.u2.rowwise() += p.b2.row(0);
  f.h2 = relu(f.u2);
  f.u3 = f.h2 * p.wdec;
  f.u3.rowwise() += p.bdec.row(0);
  f.z = relu(f.u3);
  kernels::parallel::gram(f.z, f.a_hat);
  return f;
}

double reconstruction_loss(const Matrix& a_hat, const Matrix& target) {
  if (a_hat.rows() != target.rows() || a_hat.cols() != target.cols())
    throw InputError("reconstruction_loss: shape mismatch");
  const double n2 = static_cast<double>(a_hat.rows()) * static_cast<double>(a_hat.cols());
  return (target - a_hat).squaredNorm() / n2;
}

GnnParams gnn_gradients(const GnnParams& p, const PropagationMatrix& prop, const Matrix& target, double* loss) {
  const GnnForward f = gnn_forward(p, prop);
  const double n2 = static_cast<double>(f.a_hat.rows()) * static_cast<double>(f.a_hat.cols());
  if (loss != nullptr) *loss = reconstruction_loss(f.a_hat, target);

  const Matrix dahat = (2.0 / n2) * (f.a_hat - target);
  Matrix dz;
  kernels::parallel::sym_times(dahat, f.z, dz);

  GnnParams g;
  const Matrix du3 = relu_backward(dz, f.u3);
  g.wdec = f.h2.transpose() * du3;
  g.bdec = du3.colwise().sum();
  const Matrix du2 = relu_backward(du3 * p.wdec.transpose(), f.u2);
  g.w2 = f.m2.transpose() * du2;
  g.b2 = du2.colwise().sum();
  Matrix dh1;
  kernels::parallel::spmm(prop.rows_transposed, du2 * p.w2.transpose(), dh1);
  const Matrix du1 = relu_backward(dh1, f.u1);
  g.w1 = f.m1.transpose() * du1;
  g.b1 = du1.colwise().sum();
  kernels::parallel::spmm(prop.rows_transposed, du1 * p.w1.transpose(), g.h0);
  return g;
}

GnnTrainResult train_gnn(const CommuteGraph& g, int d, const TrainConfig& cfg) {
  if (d < 2) throw InputError("train_gnn: d must be >= 2");
  return train_gnn(g, GnnParams::init(g.n(), d, cfg.seed), cfg);
}

GnnTrainResult train_gnn(const CommuteGraph& g, GnnParams params, const TrainConfig& cfg) {
  cfg.validate();
  if (params.h0.rows() != g.n()) throw InputError("train_gnn: parameters do not match the graph size");
  const PropagationMatrix prop = normalize_adjacency(g);
  const Matrix target = cfg.log_loss ? log_transform(g) : g.weights.dense();

  GnnTrainResult out;
  out.losses.reserve(cfg.epochs);
  detail::Adam<GnnParams> adam(params, cfg.learning_rate);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss = 0.0;
    const GnnParams grads = gnn_gradients(params, prop, target, &loss);
    out.losses.push_back(loss);
    if (!std::isfinite(loss) || !grads.all_finite()) throw TrainingError(epoch, out.losses);
    adam.step(params, grads);
    if (!params.all_finite()) throw TrainingError(epoch, out.losses);
  }
  const GnnForward f = gnn_forward(params, prop);
  out.embedding.values = f.h2;
  out.embedding.method = "gnn";
  out.params = std::move(params);
  return out;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  nlohmann::ordered_json doc;
  doc["method"] = ckpt.method;
  doc["config"] = {{"epochs", ckpt.config.epochs},
                   {"learning_rate", ckpt.config.learning_rate},
                   {"seed", ckpt.config.seed},
                   {"log_loss", ckpt.config.log_loss}};
  doc["final_loss"] = ckpt.final_loss;
  doc["node_ids"] = ckpt.node_ids;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const auto& [name, m] : ckpt.tensors) {
    std::vector<double> data(m.data(), m.data() + m.size());
    tensors[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
  }
  doc["tensors"] = tensors;
  out << doc.dump() << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ckpt;
  try {
    const auto doc = nlohmann::json::parse(in);
    ckpt.method = doc.at("method").get<std::string>();
    const auto& cfg = doc.at("config");
    ckpt.config.epochs = cfg.at("epochs").get<int>();
    ckpt.config.learning_rate = cfg.at("learning_rate").get<double>();
    ckpt.config.seed = cfg.at("seed").get<std::uint64_t>();
    ckpt.config.log_loss = cfg.at("log_loss").get<bool>();
    ckpt.final_loss = doc.at("final_loss").get<double>();
    ckpt.node_ids = doc.at("node_ids").get<std::vector<std::string>>();
    for (const auto& [name, t] : doc.at("tensors").items()) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw InputError("checkpoint tensor '" + name + "' has the wrong element count");
      ckpt.tensors[name] = Eigen::Map<const Matrix>(data.data(), rows, cols);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  return ckpt;
}

}  // namespace commune
