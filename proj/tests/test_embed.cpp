#include "commune/embed.hpp"
#include "commune/error.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace commune;
using namespace commune::testing;

namespace {

CommuteGraph isolated_nodes(int n) {
  std::vector<FlowRecord> records;
  for (int i = 0; i < n; ++i) records.push_back({node_name(i), node_name(i), 1.0});
  return build_graph(records);
}

TrainConfig short_run(int epochs, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(GnnForward, ZeroWeightsGiveZeroReconstruction) {
  std::mt19937_64 rng(1);
  const CommuteGraph g = random_graph(7, 0.4, rng);
  GnnParams p = GnnParams::zeros_like(GnnParams::init(7, 4, 1));
  p.h0 = GnnParams::init(7, 4, 1).h0;
  const GnnForward f = gnn_forward(p, normalize_adjacency(g));
  EXPECT_TRUE(f.a_hat.isZero(0.0));
}

TEST(GnnForward, IdentityPropagation) {
  const CommuteGraph g = isolated_nodes(3);
  GnnParams p = GnnParams::zeros_like(GnnParams::init(3, 3, 0));
  p.h0 = Matrix::Identity(3, 3);
  p.w1 = p.w2 = p.wdec = Matrix::Identity(3, 3);
  const GnnForward f = gnn_forward(p, normalize_adjacency(g));
  EXPECT_TRUE(f.a_hat == Matrix::Identity(3, 3));
}

TEST(GnnForward, ReconstructionIsSymmetric) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const CommuteGraph g = random_graph(30, 0.2, rng);
    const GnnForward f = gnn_forward(gnn_test_params(30, 8, trial), normalize_adjacency(g));
    EXPECT_LE((f.a_hat - f.a_hat.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReconstructionLoss, Examples) {
  EXPECT_EQ(reconstruction_loss(Matrix::Ones(3, 3), Matrix::Ones(3, 3)), 0.0);
  EXPECT_EQ(reconstruction_loss(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 2.0)), 4.0);
  EXPECT_EQ(reconstruction_loss(Matrix::Zero(2, 2), Matrix::Ones(2, 2)), 1.0);
  EXPECT_THROW(reconstruction_loss(Matrix::Zero(2, 2), Matrix::Zero(3, 3)), InputError);
}

TEST(GnnGradients, ZeroAtExactFit) {
  std::mt19937_64 rng(3);
  const CommuteGraph g = random_graph(9, 0.4, rng);
  const PropagationMatrix prop = normalize_adjacency(g);
  const GnnParams p = gnn_test_params(9, 4, 3);
  const Matrix target = gnn_forward(p, prop).a_hat;
  double loss = -1.0;
  const GnnParams grads = gnn_gradients(p, prop, target, &loss);
  EXPECT_EQ(loss, 0.0);
  grads.for_each([](const char* name, const Matrix& m) { EXPECT_TRUE(m.isZero(0.0)) << name; });
}

TEST(GnnGradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const CommuteGraph g = random_graph(10, 0.4, rng);
    const GradCheck c = check_gnn_gradients(g, gnn_test_params(10, 4, seed));
    EXPECT_LE(c.max_rel_error, 1e-4) << "seed " << seed << " worst " << c.worst;
    EXPECT_LT(c.skipped * 100, c.checked + c.skipped);
  }
}

TEST(GnnGradients, DoubledInstanceMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  auto edges = random_edges(5, 0.6, rng);
  if (edges.empty()) edges.emplace_back(0, 1, 1.0);
  std::vector<Edge> doubled = edges;
  for (const auto& [a, b, w] : edges) doubled.emplace_back(a + 5, b + 5, w);
  const CommuteGraph g = graph_from_edges(10, doubled);
  const GradCheck c = check_gnn_gradients(g, gnn_test_params(10, 4, 17));
  EXPECT_LE(c.max_rel_error, 1e-4) << c.worst;
}

TEST(VnnGradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const CommuteGraph g = random_graph(6, 0.5, rng);
    const GradCheck c = check_vnn_gradients(g, vnn_test_params(6, 3, 5, seed));
    EXPECT_LE(c.max_rel_error, 1e-4) << "seed " << seed << " worst " << c.worst;
    EXPECT_LT(c.skipped * 100, c.checked + c.skipped);
  }
}

TEST(VnnPredict, MatchesOracleLoss) {
  std::mt19937_64 rng(4);
  const CommuteGraph g = random_graph(7, 0.5, rng);
  const VnnParams p = vnn_test_params(7, 3, 4, 4);
  const Matrix target = log_transform(g);
  double loss = 0.0;
  vnn_gradients(p, target, &loss);
  EXPECT_NEAR(loss, vnn_loss_oracle(p, target).loss, 1e-14);
  EXPECT_NEAR(reconstruction_loss(vnn_predict(p), target), loss, 1e-14);
}

TEST(Gnn, PermutationEquivariance) {
  std::mt19937_64 rng(5);
  const int n = 12;
  auto edges = random_edges(n, 0.3, rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Edge> permuted;
  for (const auto& [a, b, w] : edges) permuted.emplace_back(perm[a], perm[b], w);
  const CommuteGraph g = graph_from_edges(n, edges);
  const CommuteGraph gp = graph_from_edges(n, permuted);

  const GnnParams p = gnn_test_params(n, 5, 5);
  GnnParams pp = p;
  for (int i = 0; i < n; ++i) pp.h0.row(perm[i]) = p.h0.row(i);
  const Matrix h2 = gnn_forward(p, normalize_adjacency(g)).h2;
  const Matrix h2p = gnn_forward(pp, normalize_adjacency(gp)).h2;
  for (int i = 0; i < n; ++i) EXPECT_LE((h2.row(i) - h2p.row(perm[i])).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Gnn, TrainingIsDeterministic) {
  std::mt19937_64 rng(6);
  const CommuteGraph g = random_graph(40, 0.2, rng);
  const GnnTrainResult a = train_gnn(g, 8, short_run(60, 9));
  const GnnTrainResult b = train_gnn(g, 8, short_run(60, 9));
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_TRUE(a.embedding.values == b.embedding.values);
  const GnnTrainResult c = train_gnn(g, 8, short_run(60, 10));
  EXPECT_NE(a.losses, c.losses);
}

TEST(Gnn, LossDecreasesOverTraining) {
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const CommuteGraph g = random_graph(25, 0.25, rng);
    const GnnTrainResult r = train_gnn(g, 8, short_run(500, seed));
    ASSERT_EQ(r.losses.size(), 500u);
    decreased += r.losses.back() < r.losses.front();
    EXPECT_EQ(r.embedding.n(), 25);
    EXPECT_EQ(r.embedding.d(), 8);
    EXPECT_TRUE((r.embedding.values.array() >= 0.0).all());
  }
  EXPECT_EQ(decreased, 10);
}

TEST(Gnn, EmptyEdgeGraph) {
  const CommuteGraph g = isolated_nodes(6);
  const GnnTrainResult r = train_gnn(g, 4, short_run(300, 1));
  EXPECT_TRUE(r.embedding.all_finite());
  EXPECT_LE(r.losses.back(), r.losses.front());
  EXPECT_LT(r.losses.back(), 1e-6);
}

TEST(Gnn, InvalidConfig) {
  std::mt19937_64 rng(7);
  const CommuteGraph g = random_graph(5, 0.5, rng);
  EXPECT_THROW(train_gnn(g, 1, short_run(10, 0)), InputError);
  EXPECT_THROW(train_gnn(g, 4, short_run(0, 0)), InputError);
  TrainConfig bad = short_run(10, 0);
  bad.learning_rate = 0.0;
  EXPECT_THROW(train_gnn(g, 4, bad), InputError);
}

TEST(Gnn, DivergenceAbortsWithTrajectory) {
  std::mt19937_64 rng(8);
  const CommuteGraph g = random_graph(10, 0.5, rng);
  GnnParams p = gnn_test_params(10, 4, 8);
  p.wdec(0, 0) = std::numeric_limits<double>::infinity();
  try {
    train_gnn(g, p, short_run(5, 0));
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 1);
    EXPECT_EQ(e.losses().size(), 1u);
  }
}

TEST(Vnn, TrainingLowersLossAndIsDeterministic) {
  std::mt19937_64 rng(9);
  const CommuteGraph g = random_graph(20, 0.3, rng);
  const VnnTrainResult a = train_vnn(g, 4, short_run(100, 3));
  const VnnTrainResult b = train_vnn(g, 4, short_run(100, 3));
  EXPECT_LT(a.losses.back(), a.losses.front());
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_TRUE(a.embedding.values == b.embedding.values);
  EXPECT_EQ(a.embedding.d(), 4);
}

TEST(Checkpoint, RoundTrip) {
  std::mt19937_64 rng(10);
  const CommuteGraph g = random_graph(8, 0.4, rng);
  const GnnTrainResult r = train_gnn(g, 4, short_run(20, 1));
  Checkpoint ckpt;
  ckpt.method = "gnn";
  ckpt.config = short_run(20, 1);
  ckpt.final_loss = r.losses.back();
  ckpt.node_ids = g.node_ids;
  ckpt.tensors = r.params.to_tensors();
  std::stringstream buf;
  write_checkpoint(buf, ckpt);
  const Checkpoint back = read_checkpoint(buf);
  EXPECT_EQ(back.method, "gnn");
  EXPECT_EQ(back.final_loss, ckpt.final_loss);
  EXPECT_EQ(back.node_ids, g.node_ids);
  const GnnParams p = GnnParams::from_tensors(back.tensors);
  EXPECT_TRUE(gnn_forward(p, normalize_adjacency(g)).h2 == r.embedding.values);

  std::stringstream broken("{\"method\": 1}");
  EXPECT_THROW(read_checkpoint(broken), InputError);
}
