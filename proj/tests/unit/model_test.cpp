// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "mgt/error.hpp"
#include "mgt/model.hpp"
#include "mgt/ops.hpp"
#include "support/test_support.hpp"

namespace mgt::model {
namespace {

using nn::Tensor;
using testing::random_parameter;
using testing::weights_like;

MGTConfig tiny_config(PositionalKind positional = PositionalKind::WavePE) {
  MGTConfig cfg;
  cfg.node_features = 2;
  cfg.edge_features = 2;
  cfg.out_dim = 1;
  cfg.embed_dim = 4;
  cfg.positional_dim = 4;
  cfg.positional = positional;
  cfg.scales = {1.0, 2.0};
  cfg.pe_steps = 3;
  cfg.atom_layers = 1;
  cfg.substructure_layers = 1;
  cfg.heads = 2;
  cfg.clusters = 2;
  cfg.lambda_link = 0.1;
  cfg.lambda_entropy = 0.1;
  return cfg;
}

void set_values(nn::ParamStore& store, const std::string& name, double value) {
  for (double& v : store.find(name)->value.mutable_data()) v = value;
}

Tensor slot_features(const Graph& g, const nn::EdgeIndex& idx) {
  return nn::gather_rows(Tensor::from_matrix(g.edge_features()), idx.edge_of_slot);
}

TEST(GpsLayer, SingleNodeUsesSelfAndValuePaths) {
  const MGTConfig cfg = tiny_config(PositionalKind::None);
  nn::ParamStore store, twin;
  Rng rng(1), twin_rng(1);
  const GpsLayer layer(store, "gps", cfg, rng);
  // Same construction order and seed, so the parts carry identical weights.
  const nn::GatedGCNLayer local(twin, "gps.mpnn", cfg.width(), twin_rng);
  const nn::MultiHeadAttention global(twin, "gps.attention", cfg.width(), cfg.heads, 0.0, twin_rng);
  const nn::FeedForward fuse(twin, "gps.ffn", cfg.width(), 2 * cfg.width(), cfg.width(), 0.0,
                             twin_rng);
  nn::ForwardContext ctx;
  const Graph g = Graph::from_edges(1, {});
  const nn::EdgeIndex idx = nn::EdgeIndex::from_graph(g);
  const Tensor x = random_parameter(rng, {1, cfg.width()});
  const auto [out, e] = layer(x, Tensor::zeros({0, cfg.width()}), idx, ctx);
  const Tensor u = twin.find("gps.mpnn.U.weight")->value, ub = twin.find("gps.mpnn.U.bias")->value;
  const Tensor x_local = nn::relu(nn::add_row_vector(nn::matmul(x, u), ub));
  const Tensor expected = fuse(nn::add(x_local, global(x, ctx)), ctx);
  EXPECT_LT(max_abs_diff(out.to_matrix(), expected.to_matrix()), 1e-15);
  EXPECT_EQ(e.rows(), 0u);
}

TEST(GpsLayer, EquivariantAndDifferentiable) {
  const MGTConfig cfg = tiny_config(PositionalKind::None);
  nn::ParamStore store;
  Rng rng(2);
  const GpsLayer layer(store, "gps", cfg, rng);
  nn::ForwardContext ctx;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
    const Graph g = testing::random_graph(rng, n, 0.4, cfg.width(), cfg.width());
    const Permutation sigma = testing::random_permutation(rng, n);
    const Graph gs = apply_permutation(g, sigma);
    const nn::EdgeIndex a = nn::EdgeIndex::from_graph(g), b = nn::EdgeIndex::from_graph(gs);
    const auto [xa, ea] = layer(Tensor::from_matrix(g.node_features()), slot_features(g, a), a, ctx);
    const auto [xb, eb] = layer(Tensor::from_matrix(gs.node_features()), slot_features(gs, b), b, ctx);
    EXPECT_LT(max_abs_diff(xb.to_matrix(), permute_rows(xa.to_matrix(), sigma)), 1e-9);
    EXPECT_LT(max_abs_diff(eb.to_matrix(), ea.to_matrix()), 1e-9);
  }
  const Graph g = testing::random_connected_graph(rng, 5, 0.3, cfg.width(), cfg.width());
  const nn::EdgeIndex idx = nn::EdgeIndex::from_graph(g);
  const Tensor x = random_parameter(rng, {5, cfg.width()});
  const Tensor e = slot_features(g, idx);
  const Tensor w = weights_like(rng, layer(x, e, idx, ctx).first);
  const auto loss = [&] { return nn::sum(nn::mul(layer(x, e, idx, ctx).first, w)); };
  EXPECT_LT(testing::store_gradient_error(loss, store), 1e-4);
  EXPECT_LT(testing::gradient_error(loss, x), 1e-4);
}

TEST(Positional, InputWidths) {
  MGTConfig cfg = tiny_config(PositionalKind::None);
  cfg.embed_dim = 8;
  Rng rng(3);
  const Graph g = testing::random_connected_graph(rng, 6, 0.3, 2, 2);
  EXPECT_EQ(MGTModel(cfg, 1).input_features(g).cols(), 8u);
  cfg.positional = PositionalKind::WavePE;
  cfg.scales = {1, 2, 3, 4, 5};
  EXPECT_EQ(cfg.raw_positional_width(), 5u);
  const MGTModel wave(cfg, 1);
  EXPECT_EQ(wave.params().find("positional.weight")->value.rows(), 5u);
  EXPECT_EQ(wave.build_positional(g).cols(), cfg.positional_dim);
  EXPECT_EQ(wave.input_features(g).cols(), 8u + cfg.positional_dim);
}

TEST(Positional, EquivariantForEveryEncoding) {
  Rng rng(4);
  for (PositionalKind kind : {PositionalKind::WavePE, PositionalKind::RWPE}) {
    const MGTModel model(tiny_config(kind), 5);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
      const Graph g = testing::random_graph(rng, n, 0.4, 2, 2);
      const Permutation sigma = testing::random_permutation(rng, n);
      const Matrix lhs = model.input_features(apply_permutation(g, sigma)).to_matrix();
      const Matrix rhs = permute_rows(model.input_features(g).to_matrix(), sigma);
      EXPECT_LT(max_abs_diff(lhs, rhs), 1e-9) << to_string(kind);
    }
  }
}

TEST(LearnToCluster, RowsSumToOneAndEquivariant) {
  const MGTConfig cfg = tiny_config(PositionalKind::None);
  nn::ParamStore store;
  Rng rng(6);
  const LearnToCluster cluster(store, "cluster", cfg, rng);
  nn::ForwardContext eval;
  nn::ForwardContext train{nn::Mode::Train, nullptr};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
    const Graph g = testing::random_graph(rng, n, 0.4, cfg.width(), cfg.width());
    const Permutation sigma = testing::random_permutation(rng, n);
    const Graph gs = apply_permutation(g, sigma);
    const nn::EdgeIndex a = nn::EdgeIndex::from_graph(g), b = nn::EdgeIndex::from_graph(gs);
    for (nn::ForwardContext* ctx : {&eval, &train}) {
      const auto [za, sa] = cluster(Tensor::from_matrix(g.node_features()), slot_features(g, a), a, *ctx);
      const auto [zb, sb] = cluster(Tensor::from_matrix(gs.node_features()), slot_features(gs, b), b, *ctx);
      EXPECT_LT(max_abs_diff(zb.to_matrix(), permute_rows(za.to_matrix(), sigma)), 1e-9);
      EXPECT_LT(max_abs_diff(sb.soft.to_matrix(), permute_rows(sa.soft.to_matrix(), sigma)), 1e-9);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(sa.soft.at(i, 0) + sa.soft.at(i, 1), 1.0, 1e-9);
      }
    }
  }
}

TEST(LearnToCluster, ZeroAssignmentLogitsGiveUniformRows) {
  MGTConfig cfg = tiny_config(PositionalKind::None);
  cfg.clusters = 5;
  nn::ParamStore store;
  Rng rng(7);
  const LearnToCluster cluster(store, "cluster", cfg, rng);
  set_values(store, "cluster.assign.ffn.fc2.weight", 0.0);
  set_values(store, "cluster.assign.ffn.fc2.bias", 0.0);
  const Graph g = testing::random_connected_graph(rng, 6, 0.3, cfg.width(), cfg.width());
  const nn::EdgeIndex idx = nn::EdgeIndex::from_graph(g);
  nn::ForwardContext ctx;
  const auto [z, s] = cluster(Tensor::from_matrix(g.node_features()), slot_features(g, idx), idx, ctx);
  for (double v : s.soft.data()) EXPECT_NEAR(v, 0.2, 1e-15);
  EXPECT_EQ(s.hard_labels, std::vector<std::size_t>(6, 0));
}

TEST(Coarsen, HandExamples) {
  Rng rng(8);
  const Tensor z = random_parameter(rng, {3, 4});
  EXPECT_EQ(coarsen(z, Tensor::constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1})).to_matrix(), z.to_matrix());

  const Tensor uniform = Tensor::full({3, 2}, 0.5);
  const Tensor xs = coarsen(z, uniform);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(xs.at(c, j), 0.5 * (z.at(0, j) + z.at(1, j) + z.at(2, j)), 1e-15);

  const Tensor grouped = coarsen(z, Tensor::constant({3, 2}, {1, 0, 1, 0, 0, 1}));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(grouped.at(0, j), z.at(0, j) + z.at(1, j));
    EXPECT_EQ(grouped.at(1, j), z.at(2, j));
  }
  EXPECT_THROW(coarsen(z, Tensor::zeros({2, 2})), ShapeError);
}

TEST(Coarsen, PreservesColumnMass) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    const Tensor z = random_parameter(rng, {n, 3});
    const Tensor s = nn::softmax_rows(random_parameter(rng, {n, 4}, 3.0));
    const Tensor lhs = nn::sum_rows(coarsen(z, s));
    const Tensor rhs = nn::sum_rows(z);
    EXPECT_LT(max_abs_diff(lhs.to_matrix(), rhs.to_matrix()), 1e-9);
  }
}

TEST(SubstructureEncoder, SingleTokenPermutationAndGradients) {
  const MGTConfig cfg = tiny_config(PositionalKind::None);
  nn::ParamStore store;
  Rng rng(10);
  const SubstructureEncoder encoder(store, "sub", cfg, rng);
  nn::ForwardContext ctx;
  const Tensor one = random_parameter(rng, {1, cfg.width()});
  const Matrix h1 = encoder(one, ctx).to_matrix();
  EXPECT_EQ(h1, encoder(one, ctx).to_matrix());
  for (double v : h1.values()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(encoder(Tensor::zeros({0, cfg.width()}), ctx), ShapeError);

  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    const Matrix xs = testing::random_matrix(rng, c, cfg.width());
    const Permutation sigma = testing::random_permutation(rng, c);
    const Matrix lhs = encoder(Tensor::from_matrix(permute_rows(xs, sigma)), ctx).to_matrix();
    const Matrix rhs = permute_rows(encoder(Tensor::from_matrix(xs), ctx).to_matrix(), sigma);
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-9);
  }

  const Tensor xs = random_parameter(rng, {3, cfg.width()});
  const Tensor w = weights_like(rng, encoder(xs, ctx));
  const auto loss = [&] { return nn::sum(nn::mul(encoder(xs, ctx), w)); };
  EXPECT_LT(testing::store_gradient_error(loss, store), 1e-4);
  EXPECT_LT(testing::gradient_error(loss, xs), 1e-4);
}

TEST(Readout, Examples) {
  Rng rng(11);
  const Tensor row = random_parameter(rng, {1, 5});
  EXPECT_EQ(aggregate(row, Readout::Mean).to_matrix(), row.to_matrix());

  const Tensor same = nn::concat_rows(std::vector<Tensor>(4, row));
  const Tensor total = aggregate(same, Readout::Sum);
  const Tensor mean = aggregate(same, Readout::Mean);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(total.at(0, j), 4 * mean.at(0, j), 1e-14);

  Matrix hs = testing::random_matrix(rng, 6, 5);
  for (std::size_t j = 0; j < 5; ++j) hs(2, j) = 100.0 + static_cast<double>(j);
  hs(4, 3) = 500.0;
  const Tensor top = aggregate(Tensor::from_matrix(hs), Readout::Max);
  for (std::size_t j = 0; j < 5; ++j) {
    double want = hs(0, j);
    for (std::size_t i = 1; i < 6; ++i) want = std::max(want, hs(i, j));
    EXPECT_EQ(top.at(0, j), want);
  }
}

TEST(MGTModel, ShapeAudit) {
  MGTConfig cfg = tiny_config(PositionalKind::None);
  cfg.embed_dim = 8;
  cfg.clusters = 3;
  cfg.out_dim = 2;
  const MGTModel model(cfg, 3);
  Rng rng(12);
  const Graph g = testing::random_connected_graph(rng, 7, 0.3, 2, 2);
  nn::ForwardContext ctx;
  const MGTOutput out = model.forward(g, ctx);
  EXPECT_EQ(out.substructures.shape(), (nn::Shape{3, 8}));
  EXPECT_EQ(out.prediction.numel(), 2u);
  EXPECT_EQ(out.graph_embedding.shape(), (nn::Shape{1, 8}));
  EXPECT_EQ(out.assignment.soft.shape(), (nn::Shape{7, 3}));
  EXPECT_EQ(out.cluster_embeddings.shape(), (nn::Shape{7, 8}));
  EXPECT_EQ(out.atom_embeddings.shape(), (nn::Shape{7, 8}));
  EXPECT_EQ(out.atom_edges.rows(), 2 * g.num_edges());
}

TEST(MGTModel, EvalModeDeterministic) {
  const MGTModel model(tiny_config(), 4);
  Rng rng(13);
  const Graph g = testing::random_connected_graph(rng, 6, 0.4, 2, 2);
  nn::ForwardContext ctx;
  const MGTOutput a = model.forward(g, ctx);
  const MGTOutput b = model.forward(g, ctx);
  EXPECT_EQ(a.prediction.to_matrix(), b.prediction.to_matrix());
  EXPECT_EQ(a.assignment.soft.to_matrix(), b.assignment.soft.to_matrix());
  EXPECT_EQ(a.substructures.to_matrix(), b.substructures.to_matrix());
}

TEST(MGTModel, GraphLevelInvariance) {
  Rng rng(14);
  for (PositionalKind kind : {PositionalKind::WavePE, PositionalKind::RWPE}) {
    MGTConfig cfg = tiny_config(kind);
    cfg.embed_dim = 8;
    cfg.clusters = 3;
    const MGTModel model(cfg, 6);
    nn::ForwardContext ctx;
    for (int graph = 0; graph < 20; ++graph) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 8));
      const Graph g = testing::random_graph(rng, n, 0.4, 2, 2);
      const MGTOutput base = model.forward(g, ctx);
      for (int trial = 0; trial < 20; ++trial) {
        const MGTOutput moved = model.forward(apply_permutation(g, testing::random_permutation(rng, n)), ctx);
        EXPECT_LT(max_abs_diff(moved.prediction.to_matrix(), base.prediction.to_matrix()), 1e-6);
        EXPECT_LT(max_abs_diff(moved.graph_embedding.to_matrix(), base.graph_embedding.to_matrix()), 1e-6);
      }
    }
  }
}

TEST(MGTModel, BatchedEvalMatchesPerGraph) {
  const MGTModel model(tiny_config(), 7);
  Rng rng(15);
  const Graph a = testing::random_connected_graph(rng, 5, 0.3, 2, 2);
  const Graph b = testing::random_connected_graph(rng, 7, 0.3, 2, 2);
  nn::ForwardContext ctx;
  const Graph* both[] = {&a, &b};
  const auto batched = model.forward_batch(both, ctx);
  EXPECT_EQ(batched[0].prediction.to_matrix(), model.forward(a, ctx).prediction.to_matrix());
  EXPECT_EQ(batched[1].prediction.to_matrix(), model.forward(b, ctx).prediction.to_matrix());
}

TEST(MGTModel, FullGradientTinyConfig) {
  MGTModel model(tiny_config(), 8);
  Rng rng(16);
  const Graph g = testing::random_connected_graph(rng, 6, 0.3, 2, 2);
  const std::vector<double> target{0.7};
  nn::ForwardContext train{nn::Mode::Train, nullptr};
  const auto loss = [&] {
    const MGTOutput out = model.forward(g, train);
    return mgt_loss(out, target, g.adjacency(), TaskKind::Regression, 0.1, 0.1).total;
  };
  // Biases feeding a train-mode batch norm have identically zero gradient,
  // so norms are floored at 1e-6.
  nn::ParamStore& store = model.params();
  for (auto& entry : store.entries()) {
    if (!entry.trainable) continue;
    EXPECT_LT(testing::gradient_error(loss, entry.value, 1e-5, 1e-6), 1e-3) << entry.name;
  }
}

TEST(MGTModel, RejectsBadInputs) {
  MGTConfig cfg = tiny_config();
  cfg.out_dim = 0;
  EXPECT_THROW(MGTModel(cfg, 1), ConfigError);
  cfg = tiny_config();
  cfg.heads = 3;
  EXPECT_THROW(MGTModel(cfg, 1), ConfigError);
  const MGTModel model(tiny_config(), 1);
  nn::ForwardContext ctx;
  Rng rng(17);
  EXPECT_THROW(model.forward(testing::random_graph(rng, 4, 0.5, 3, 2), ctx), ConfigError);
  EXPECT_THROW(parse_positional("spd"), ConfigError);
  EXPECT_EQ(parse_readout("max"), Readout::Max);
}

MGTOutput with_assignment(Tensor s, Tensor prediction = Tensor::constant({1, 1}, {0.5})) {
  MGTOutput out;
  out.prediction = std::move(prediction);
  out.assignment = ClusterAssignment::from_soft(std::move(s));
  return out;
}

TEST(Loss, ClosedForms) {
  const std::vector<double> target{1.5};
  const Matrix a2 = testing::path_graph(2).adjacency();
  const auto one_hot = mgt_loss(with_assignment(Tensor::constant({2, 2}, {1, 0, 0, 1})), target, a2,
                                TaskKind::Regression, 1.0, 1.0);
  EXPECT_EQ(one_hot.entropy, 0.0);
  EXPECT_NEAR(one_hot.link, 2.0, 1e-12);

  const Matrix a3 = testing::path_graph(3).adjacency();
  const auto uniform = mgt_loss(with_assignment(Tensor::full({3, 10}, 0.1)), target, a3,
                                TaskKind::Regression, 1.0, 1.0);
  EXPECT_NEAR(uniform.entropy, std::log(10.0), 1e-12);
  EXPECT_GE(uniform.link, 0.0);

  const auto plain = mgt_loss(with_assignment(Tensor::full({3, 10}, 0.1)), target, a3,
                              TaskKind::Regression, 0.0, 0.0);
  EXPECT_EQ(plain.total.item(), plain.task);
  EXPECT_EQ(plain.task, 1.0);
  const auto weighted = mgt_loss(with_assignment(Tensor::full({3, 10}, 0.1)), target, a3,
                                 TaskKind::Regression, 0.25, 0.5);
  EXPECT_NEAR(weighted.total.item(), weighted.task + 0.25 * weighted.link + 0.5 * weighted.entropy,
              1e-12);
}

TEST(Loss, MultiLabelAndErrors) {
  const Matrix a = testing::path_graph(2).adjacency();
  const auto out = with_assignment(Tensor::full({2, 2}, 0.5), Tensor::constant({1, 2}, {0.0, 0.0}));
  const auto loss = mgt_loss(out, std::vector<double>{1.0, 0.0}, a, TaskKind::MultiLabel, 0, 0);
  EXPECT_NEAR(loss.task, std::log(2.0), 1e-15);
  EXPECT_THROW(mgt_loss(out, std::vector<double>{1.0}, a, TaskKind::MultiLabel, 0, 0), ConfigError);
  EXPECT_THROW(mgt_loss(out, std::vector<double>{0.5, 0.0}, a, TaskKind::MultiLabel, 0, 0),
               ConfigError);
  EXPECT_THROW(link_loss(Tensor::full({3, 2}, 0.5), a), ShapeError);
}

TEST(Loss, ComponentsNonNegativeOnModelOutputs) {
  const MGTModel model(tiny_config(), 9);
  Rng rng(18);
  nn::ForwardContext ctx;
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::random_graph(rng, 3 + trial % 5, 0.5, 2, 2);
    const auto loss = mgt_loss(model.forward(g, ctx), std::vector<double>{rng.normal()}, g.adjacency(),
                               TaskKind::Regression, 0.1, 0.1);
    EXPECT_GE(loss.task, 0.0);
    EXPECT_GE(loss.link, 0.0);
    EXPECT_GE(loss.entropy, 0.0);
    EXPECT_TRUE(std::isfinite(loss.total.item()));
  }
}

TEST(Clustering, DirectOptimizationSeparatesTwoCliques) {
  const Graph g = testing::two_cliques();
  int separated = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    if (testing::separates_cliques(testing::optimize_assignment(g, 2, seed))) ++separated;
  }
  EXPECT_GE(separated, 4);
}

}  // namespace
}  // namespace mgt::model
