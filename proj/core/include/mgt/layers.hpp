// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mgt/graph.hpp"
#include "mgt/params.hpp"
#include "mgt/rng.hpp"
#include "mgt/tensor.hpp"

namespace mgt::nn {

enum class Mode { Train, Eval };

/// Per-forward state: mode and the dropout stream (may be null in eval mode).
struct ForwardContext {
  Mode mode = Mode::Eval;
  Rng* rng = nullptr;

  bool training() const { return mode == Mode::Train; }
};

/// y = x W + b with W stored [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Tensor operator()(const Tensor& x) const;

  std::size_t in_features() const { return weight_.dim(0); }
  std::size_t out_features() const { return weight_.dim(1); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_;
  Tensor bias_;
};

/// Linear -> ReLU -> dropout -> Linear.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParamStore& store, const std::string& name, std::size_t in, std::size_t hidden,
              std::size_t out, double dropout, Rng& rng);

  Tensor operator()(const Tensor& x, ForwardContext& ctx) const;

 private:
  Linear first_;
  Linear second_;
  double dropout_ = 0.0;
};

/// Dropout as a function of mode: identity in eval mode and for rate 0.
/// Throws ConfigError unless 0 <= rate < 1.
Tensor dropout(const Tensor& x, double rate, ForwardContext& ctx);

/// Single attention head, H = softmax(Q K^T / sqrt(d_o)) V with
/// Q = X Wq^T, K = X Wk^T, V = X Wv^T and every W of shape [d_o, d].
/// `attention_dropout` is applied to the softmax weights in train mode.
Tensor self_attention(const Tensor& x, const Tensor& wq, const Tensor& wk, const Tensor& wv,
                      double attention_dropout = 0.0, ForwardContext* ctx = nullptr);

/// Softmax attention weights for one head (rows sum to one).
Tensor attention_weights(const Tensor& x, const Tensor& wq, const Tensor& wk);

/// h heads of width d_o, concatenated then mapped back to `model_dim`.
class MultiHeadAttention {
 public:
  struct Head {
    Tensor query;
    Tensor key;
    Tensor value;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore& store, const std::string& name, std::size_t model_dim,
                     std::size_t heads, double attention_dropout, Rng& rng);

  Tensor operator()(const Tensor& x, ForwardContext& ctx) const;

  std::size_t num_heads() const { return heads_.size(); }
  std::size_t head_dim() const { return heads_.empty() ? 0 : heads_.front().query.dim(0); }
  const std::vector<Head>& heads() const { return heads_; }
  const Linear& output() const { return output_; }

 private:
  std::vector<Head> heads_;
  Linear output_;
  double attention_dropout_ = 0.0;
};

/// Directed view of an undirected graph: each unordered edge k yields the
/// message slots 2k (src -> dst) and 2k+1 (dst -> src).
struct EdgeIndex {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
  /// Unordered edge id for each directed slot.
  std::vector<std::size_t> edge_of_slot;

  static EdgeIndex from_graph(const Graph& g);
  std::size_t num_slots() const { return source.size(); }
};

/// Gated graph convolution over directed message slots:
///   e'_ij = W1 x_i + W2 x_j + W3 e_ij,  eta_ij = sigmoid(e'_ij)
///   x'_i  = relu(U x_i + sum_j eta_ij * (V x_j) / (sum_j eta_ij + 1e-6))
/// where slot (i <- j) has target i and source j.
class GatedGCNLayer {
 public:
  static constexpr double kGateEpsilon = 1e-6;

  GatedGCNLayer() = default;
  GatedGCNLayer(ParamStore& store, const std::string& name, std::size_t dim, Rng& rng);

  /// x: [n, d], e: [slots, d]. Returns (x', e').
  std::pair<Tensor, Tensor> operator()(const Tensor& x, const Tensor& e,
                                       const EdgeIndex& edges) const;

 private:
  Linear self_;
  Linear neighbor_;
  Linear edge_target_;
  Linear edge_source_;
  Linear edge_self_;
};

/// Per-feature batch normalization over rows (eps 1e-5, momentum 0.1).
class BatchNorm {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm() = default;
  BatchNorm(ParamStore& store, const std::string& name, std::size_t dim);

  /// Train mode normalizes with batch statistics and updates the running
  /// estimates (biased batch variance); eval mode uses the running estimates.
  /// Throws ShapeError on an empty input.
  Tensor operator()(const Tensor& x, ForwardContext& ctx) const;

  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

 private:
  Tensor gamma_;
  Tensor beta_;
  Tensor running_mean_;
  Tensor running_var_;
};

/// Per-row normalization with learned scale and shift (eps 1e-5).
class LayerNorm {
 public:
  static constexpr double kEpsilon = 1e-5;

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t dim);

  Tensor operator()(const Tensor& x) const;

 private:
  Tensor gamma_;
  Tensor beta_;
};

}  // namespace mgt::nn
