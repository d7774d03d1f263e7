// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mgt/equivariant.hpp"
#include "mgt/graph.hpp"
#include "mgt/layers.hpp"
#include "mgt/params.hpp"
#include "mgt/tensor.hpp"

namespace mgt::model {

enum class PositionalKind { WavePE, RWPE, LapPE, None };
enum class Readout { Sum, Mean, Max };
enum class TaskKind { Regression, MultiLabel };

std::string_view to_string(PositionalKind kind);
std::string_view to_string(Readout readout);
std::string_view to_string(TaskKind task);
/// Throw ConfigError on unknown names.
PositionalKind parse_positional(std::string_view name);
Readout parse_readout(std::string_view name);
TaskKind parse_task(std::string_view name);

/// Architecture and loss hyperparameters. `width()` is the working width
/// d + d_p used by every layer after the positional concat.
struct MGTConfig {
  std::size_t node_features = 0;  // raw input widths; 0 means "take from data"
  std::size_t edge_features = 0;
  std::size_t out_dim = 0;
  std::size_t embed_dim = 16;
  std::size_t positional_dim = 8;
  PositionalKind positional = PositionalKind::WavePE;
  std::vector<double> scales{1.0, 2.0, 3.0, 4.0, 5.0};
  std::size_t wavelet_layers = 1;
  std::size_t pe_steps = 5;  // RWPE walk length / LapPE eigenvector count
  std::size_t atom_layers = 2;
  std::size_t substructure_layers = 2;
  std::size_t heads = 4;
  std::size_t clusters = 10;
  Readout readout = Readout::Mean;
  double lambda_link = 0.001;
  double lambda_entropy = 0.001;
  double dropout = 0.0;
  double attention_dropout = 0.0;

  std::size_t positional_width() const {
    return positional == PositionalKind::None ? 0 : positional_dim;
  }
  std::size_t width() const { return embed_dim + positional_width(); }
  /// Raw positional channels before the positional encoder.
  std::size_t raw_positional_width() const;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Row-stochastic soft assignment and its argmax labels (lowest index wins
/// ties).
struct ClusterAssignment {
  nn::Tensor soft;  // [n, C]
  std::vector<std::size_t> hard_labels;

  static ClusterAssignment from_soft(nn::Tensor soft);
};

struct MGTOutput {
  nn::Tensor prediction;         // [1, c]
  nn::Tensor graph_embedding;    // [1, d]
  nn::Tensor substructures;      // [C, d]
  ClusterAssignment assignment;  // S: [n, C]
  nn::Tensor atom_embeddings;    // [n, d]
  nn::Tensor atom_edges;         // [slots, d]
  nn::Tensor cluster_embeddings; // Z: [n, d]
};

/// Local gated message passing plus global attention fused by an FFN.
class GpsLayer {
 public:
  GpsLayer() = default;
  GpsLayer(nn::ParamStore& store, const std::string& name, const MGTConfig& cfg, Rng& rng);

  std::pair<nn::Tensor, nn::Tensor> operator()(const nn::Tensor& x, const nn::Tensor& e,
                                               const nn::EdgeIndex& edges,
                                               nn::ForwardContext& ctx) const;

 private:
  nn::GatedGCNLayer local_;
  nn::MultiHeadAttention global_;
  nn::FeedForward fuse_;
};

/// Per-graph inputs of the clustering stage.
struct GraphBatch {
  std::vector<nn::Tensor> x;
  std::vector<nn::Tensor> e;
  std::vector<nn::EdgeIndex> edges;

  std::size_t size() const { return x.size(); }
};

/// Two gated layers with ReLU and batch norm after each, both outputs
/// concatenated and mapped by an FFN. Over a batch, the batch norm statistics
/// cover the nodes of every graph; all other steps are per graph.
class ClusterNetwork {
 public:
  ClusterNetwork() = default;
  ClusterNetwork(nn::ParamStore& store, const std::string& name, std::size_t dim,
                 std::size_t out_dim, double dropout, Rng& rng);

  nn::Tensor operator()(const nn::Tensor& x, const nn::Tensor& e, const nn::EdgeIndex& edges,
                        nn::ForwardContext& ctx) const;
  std::vector<nn::Tensor> operator()(const GraphBatch& batch, nn::ForwardContext& ctx) const;

 private:
  nn::GatedGCNLayer first_;
  nn::BatchNorm first_norm_;
  nn::GatedGCNLayer second_;
  nn::BatchNorm second_norm_;
  nn::FeedForward head_;
};

/// Embedding network and assignment network; S = softmax over clusters.
class LearnToCluster {
 public:
  LearnToCluster() = default;
  LearnToCluster(nn::ParamStore& store, const std::string& name, const MGTConfig& cfg, Rng& rng);

  std::pair<nn::Tensor, ClusterAssignment> operator()(const nn::Tensor& x, const nn::Tensor& e,
                                                      const nn::EdgeIndex& edges,
                                                      nn::ForwardContext& ctx) const;
  std::vector<std::pair<nn::Tensor, ClusterAssignment>> operator()(const GraphBatch& batch,
                                                                   nn::ForwardContext& ctx) const;

 private:
  ClusterNetwork embed_;
  ClusterNetwork assign_;
};

/// X_s = S^T Z.
nn::Tensor coarsen(const nn::Tensor& z, const nn::Tensor& s);

/// Post-norm transformer blocks over substructure tokens followed by the
/// long-range skip H_s = FFN(concat(H^0, H^L)).
class SubstructureEncoder {
 public:
  SubstructureEncoder() = default;
  SubstructureEncoder(nn::ParamStore& store, const std::string& name, const MGTConfig& cfg,
                      Rng& rng);

  nn::Tensor operator()(const nn::Tensor& xs, nn::ForwardContext& ctx) const;

 private:
  struct Block {
    nn::MultiHeadAttention attention;
    nn::LayerNorm attention_norm;
    nn::FeedForward ffn;
    nn::LayerNorm ffn_norm;
  };
  std::vector<Block> blocks_;
  nn::FeedForward skip_;
};

/// z = readout over rows of H_s, returned as [1, d].
nn::Tensor aggregate(const nn::Tensor& hs, Readout readout);

/// Raw positional features for the configured encoding (n x raw width).
/// LapPE columns beyond n - 1 are zero.
Matrix raw_positional(const Graph& g, const MGTConfig& cfg);

/// Full model: atom encoder, learning to cluster, substructure encoder and
/// readout. Owns its parameters.
class MGTModel {
 public:
  /// Validates `cfg` (input/output widths must be resolved) and initializes
  /// parameters from `seed` in a fixed construction order.
  MGTModel(const MGTConfig& cfg, std::uint64_t seed);

  MGTModel(const MGTModel&) = delete;
  MGTModel& operator=(const MGTModel&) = delete;

  const MGTConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  /// n x d_p positional features (zero-width when disabled).
  nn::Tensor build_positional(const Graph& g) const;
  /// Initial atom features concat(embed(X), P): n x width.
  nn::Tensor input_features(const Graph& g) const;
  nn::Tensor input_edges(const Graph& g, const nn::EdgeIndex& edges) const;

  MGTOutput forward(const Graph& g, nn::ForwardContext& ctx) const;
  /// Forward over a minibatch. Only the cluster-stage batch norms see more
  /// than one graph; in eval mode this equals calling forward per graph.
  std::vector<MGTOutput> forward_batch(std::span<const Graph* const> graphs,
                                       nn::ForwardContext& ctx) const;

  /// Freezes or unfreezes the wavelet encoder parameters.
  void set_wavelet_encoder_trainable(bool trainable);

  const equivariant::WaveletEncoderParams& wavelet_encoder() const { return wavelet_encoder_; }
  const std::vector<GpsLayer>& gps_layers() const { return gps_; }
  const LearnToCluster& cluster() const { return cluster_; }
  const SubstructureEncoder& substructure_encoder() const { return substructure_; }

 private:
  MGTConfig cfg_;
  nn::ParamStore store_;
  nn::Linear node_embed_;
  nn::Linear edge_embed_;
  equivariant::WaveletEncoderParams wavelet_encoder_;
  nn::Linear positional_encoder_;
  std::vector<GpsLayer> gps_;
  LearnToCluster cluster_;
  SubstructureEncoder substructure_;
  nn::FeedForward head_;
};

struct LossBreakdown {
  nn::Tensor total;
  double task = 0.0;
  double link = 0.0;
  double entropy = 0.0;
};

/// ||A - S S^T||_F.
nn::Tensor link_loss(const nn::Tensor& s, const Matrix& adjacency);
/// Mean natural-log entropy of the rows of S.
nn::Tensor entropy_loss(const nn::Tensor& s);
/// MSE for regression, mean per-label BCE-with-logits for multi-label.
nn::Tensor task_loss(const nn::Tensor& prediction, std::span<const double> target, TaskKind task);

/// L = task + lambda_link * link + lambda_entropy * entropy. Throws
/// ConfigError when the target width does not match the prediction.
LossBreakdown mgt_loss(const MGTOutput& out, std::span<const double> target,
                       const Matrix& adjacency, TaskKind task, double lambda_link,
                       double lambda_entropy);

}  // namespace mgt::model
