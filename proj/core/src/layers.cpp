// SPDX-License-Identifier: Apache-2.0

#include "mgt/layers.hpp"

#include <cmath>

#include "mgt/error.hpp"
#include "mgt/ops.hpp"

namespace mgt::nn {

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight_(store.add_glorot(name + ".weight", in, out, rng)),
      bias_(store.add_zeros(name + ".bias", {out})) {}

Tensor Linear::operator()(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != in_features()) {
    throw ShapeError("Linear: input width " + std::to_string(x.rank() == 2 ? x.cols() : 0) +
                     ", expected " + std::to_string(in_features()));
  }
  return add_row_vector(matmul(x, weight_), bias_);
}

FeedForward::FeedForward(ParamStore& store, const std::string& name, std::size_t in,
                         std::size_t hidden, std::size_t out, double dropout, Rng& rng)
    : first_(store, name + ".fc1", in, hidden, rng),
      second_(store, name + ".fc2", hidden, out, rng),
      dropout_(dropout) {}

Tensor FeedForward::operator()(const Tensor& x, ForwardContext& ctx) const {
  return second_(dropout(relu(first_(x)), dropout_, ctx));
}

Tensor dropout(const Tensor& x, double rate, ForwardContext& ctx) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0, 1)");
  if (!ctx.training() || rate == 0.0) return x;
  if (ctx.rng == nullptr) throw ConfigError("dropout: train mode needs a random stream");
  return dropout(x, rate, *ctx.rng);
}

Tensor attention_weights(const Tensor& x, const Tensor& wq, const Tensor& wk) {
  if (x.rank() != 2 || wq.rank() != 2 || wk.shape() != wq.shape() || wq.cols() != x.cols()) {
    throw ShapeError("self_attention: projection shapes do not match the input width");
  }
  const Tensor q = matmul(x, transpose(wq));
  const Tensor k = matmul(x, transpose(wk));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(wq.rows()));
  return softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt));
}

Tensor self_attention(const Tensor& x, const Tensor& wq, const Tensor& wk, const Tensor& wv,
                      double attention_dropout, ForwardContext* ctx) {
  if (wv.shape() != wq.shape()) throw ShapeError("self_attention: value projection shape mismatch");
  Tensor weights = attention_weights(x, wq, wk);
  if (ctx != nullptr) weights = dropout(weights, attention_dropout, *ctx);
  return matmul(weights, matmul(x, transpose(wv)));
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& name,
                                       std::size_t model_dim, std::size_t heads,
                                       double attention_dropout, Rng& rng)
    : attention_dropout_(attention_dropout) {
  if (heads == 0 || model_dim % heads != 0) {
    throw ConfigError("MultiHeadAttention: width " + std::to_string(model_dim) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t head_dim = model_dim / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string prefix = name + ".head" + std::to_string(h);
    Head head;
    head.query = store.add_glorot(prefix + ".query", head_dim, model_dim, rng);
    head.key = store.add_glorot(prefix + ".key", head_dim, model_dim, rng);
    head.value = store.add_glorot(prefix + ".value", head_dim, model_dim, rng);
    heads_.push_back(head);
  }
  output_ = Linear(store, name + ".out", head_dim * heads, model_dim, rng);
}

Tensor MultiHeadAttention::operator()(const Tensor& x, ForwardContext& ctx) const {
  std::vector<Tensor> outputs;
  outputs.reserve(heads_.size());
  for (const Head& h : heads_) {
    outputs.push_back(self_attention(x, h.query, h.key, h.value, attention_dropout_, &ctx));
  }
  return output_(concat_cols(outputs));
}

EdgeIndex EdgeIndex::from_graph(const Graph& g) {
  EdgeIndex idx;
  idx.num_nodes = g.num_nodes();
  const std::size_t m = g.num_edges();
  idx.source.reserve(2 * m);
  idx.target.reserve(2 * m);
  idx.edge_of_slot.reserve(2 * m);
  for (std::size_t k = 0; k < m; ++k) {
    const Edge& e = g.edges()[k];
    idx.source.push_back(e.src);
    idx.target.push_back(e.dst);
    idx.edge_of_slot.push_back(k);
    idx.source.push_back(e.dst);
    idx.target.push_back(e.src);
    idx.edge_of_slot.push_back(k);
  }
  return idx;
}

GatedGCNLayer::GatedGCNLayer(ParamStore& store, const std::string& name, std::size_t dim, Rng& rng)
    : self_(store, name + ".U", dim, dim, rng),
      neighbor_(store, name + ".V", dim, dim, rng),
      edge_target_(store, name + ".W1", dim, dim, rng),
      edge_source_(store, name + ".W2", dim, dim, rng),
      edge_self_(store, name + ".W3", dim, dim, rng) {}

std::pair<Tensor, Tensor> GatedGCNLayer::operator()(const Tensor& x, const Tensor& e,
                                                    const EdgeIndex& edges) const {
  if (x.rank() != 2 || x.rows() != edges.num_nodes) {
    throw ShapeError("GatedGCN: node tensor does not match the edge index");
  }
  if (e.rank() != 2 || e.rows() != edges.num_slots()) {
    throw ShapeError("GatedGCN: edge tensor has " + std::to_string(e.rank() == 2 ? e.rows() : 0) +
                     " rows for " + std::to_string(edges.num_slots()) + " message slots");
  }
  const Tensor x_target = gather_rows(x, edges.target);
  const Tensor x_source = gather_rows(x, edges.source);
  const Tensor e_new = add(add(edge_target_(x_target), edge_source_(x_source)), edge_self_(e));
  const Tensor gate = sigmoid(e_new);
  const Tensor messages = mul(gate, gather_rows(neighbor_(x), edges.source));
  const Tensor numerator = scatter_add_rows(messages, edges.target, edges.num_nodes);
  const Tensor denominator =
      add_scalar(scatter_add_rows(gate, edges.target, edges.num_nodes), kGateEpsilon);
  const Tensor x_new = relu(add(self_(x), div(numerator, denominator)));
  return {x_new, e_new};
}

BatchNorm::BatchNorm(ParamStore& store, const std::string& name, std::size_t dim)
    : gamma_(store.add_filled(name + ".gamma", {dim}, 1.0)),
      beta_(store.add_zeros(name + ".beta", {dim})),
      running_mean_(store.add_zeros(name + ".running_mean", {dim}, false)),
      running_var_(store.add_filled(name + ".running_var", {dim}, 1.0, false)) {}

Tensor BatchNorm::operator()(const Tensor& x, ForwardContext& ctx) const {
  if (x.rank() != 2 || x.numel() == 0) throw ShapeError("BatchNorm: empty input");
  if (x.cols() != gamma_.numel()) throw ShapeError("BatchNorm: width mismatch");
  const std::size_t d = x.cols();
  Tensor normalized;
  if (ctx.training()) {
    BatchStats stats;
    normalized = batch_standardize(x, kEpsilon, &stats);
    Tensor rm = running_mean_;
    Tensor rv = running_var_;
    for (std::size_t j = 0; j < d; ++j) {
      rm.mutable_data()[j] = (1.0 - kMomentum) * rm.data()[j] + kMomentum * stats.mean[j];
      rv.mutable_data()[j] = (1.0 - kMomentum) * rv.data()[j] + kMomentum * stats.var[j];
    }
  } else {
    std::vector<double> shift(d), inv_std(d);
    for (std::size_t j = 0; j < d; ++j) {
      shift[j] = -running_mean_.data()[j];
      inv_std[j] = 1.0 / std::sqrt(running_var_.data()[j] + kEpsilon);
    }
    normalized = mul_row_vector(add_row_vector(x, Tensor::constant({d}, shift)),
                                Tensor::constant({d}, inv_std));
  }
  return add_row_vector(mul_row_vector(normalized, gamma_), beta_);
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t dim)
    : gamma_(store.add_filled(name + ".gamma", {dim}, 1.0)),
      beta_(store.add_zeros(name + ".beta", {dim})) {}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return add_row_vector(mul_row_vector(layer_standardize(x, kEpsilon), gamma_), beta_);
}

}  // namespace mgt::nn
