// SPDX-License-Identifier: Apache-2.0

#include "mgt/model.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "mgt/error.hpp"
#include "mgt/ops.hpp"
#include "mgt/spectral.hpp"

namespace mgt::model {

using nn::Tensor;

std::string_view to_string(PositionalKind kind) {
  switch (kind) {
    case PositionalKind::WavePE: return "wavepe";
    case PositionalKind::RWPE: return "rwpe";
    case PositionalKind::LapPE: return "lappe";
    case PositionalKind::None: return "none";
  }
  return "none";
}

std::string_view to_string(Readout readout) {
  switch (readout) {
    case Readout::Sum: return "sum";
    case Readout::Mean: return "mean";
    case Readout::Max: return "max";
  }
  return "mean";
}

std::string_view to_string(TaskKind task) {
  return task == TaskKind::Regression ? "regression" : "multilabel";
}

PositionalKind parse_positional(std::string_view name) {
  if (name == "wavepe") return PositionalKind::WavePE;
  if (name == "rwpe") return PositionalKind::RWPE;
  if (name == "lappe") return PositionalKind::LapPE;
  if (name == "none") return PositionalKind::None;
  throw ConfigError("unknown positional encoding \"" + std::string(name) + "\"");
}

Readout parse_readout(std::string_view name) {
  if (name == "sum") return Readout::Sum;
  if (name == "mean") return Readout::Mean;
  if (name == "max") return Readout::Max;
  throw ConfigError("unknown readout \"" + std::string(name) + "\"");
}

TaskKind parse_task(std::string_view name) {
  if (name == "regression") return TaskKind::Regression;
  if (name == "multilabel") return TaskKind::MultiLabel;
  throw ConfigError("unknown task \"" + std::string(name) + "\"");
}

std::size_t MGTConfig::raw_positional_width() const {
  switch (positional) {
    case PositionalKind::WavePE: return scales.size();
    case PositionalKind::RWPE:
    case PositionalKind::LapPE: return pe_steps;
    case PositionalKind::None: return 0;
  }
  return 0;
}

void MGTConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (embed_dim == 0) fail("embed_dim must be positive");
  if (positional != PositionalKind::None && positional_dim == 0) {
    fail("positional_dim must be positive");
  }
  if (positional == PositionalKind::WavePE) {
    if (scales.empty()) fail("scales must not be empty");
    for (double s : scales) {
      if (!(s >= 0.0)) fail("scales must be non-negative");
    }
  }
  if ((positional == PositionalKind::RWPE || positional == PositionalKind::LapPE) && pe_steps == 0) {
    fail("pe_steps must be positive");
  }
  if (heads == 0) fail("heads must be positive");
  if (width() % heads != 0) {
    fail("width " + std::to_string(width()) + " is not divisible by " + std::to_string(heads) +
         " heads");
  }
  if (clusters == 0) fail("clusters must be positive");
  if (!(lambda_link >= 0.0) || !(lambda_entropy >= 0.0)) fail("loss weights must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(attention_dropout >= 0.0 && attention_dropout < 1.0)) {
    fail("attention_dropout must lie in [0, 1)");
  }
}

ClusterAssignment ClusterAssignment::from_soft(Tensor soft) {
  ClusterAssignment out;
  const std::size_t n = soft.rows(), c = soft.cols();
  out.hard_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (soft.at(i, j) > soft.at(i, best)) best = j;
    }
    out.hard_labels[i] = best;
  }
  out.soft = std::move(soft);
  return out;
}

GpsLayer::GpsLayer(nn::ParamStore& store, const std::string& name, const MGTConfig& cfg, Rng& rng)
    : local_(store, name + ".mpnn", cfg.width(), rng),
      global_(store, name + ".attention", cfg.width(), cfg.heads, cfg.attention_dropout, rng),
      fuse_(store, name + ".ffn", cfg.width(), 2 * cfg.width(), cfg.width(), cfg.dropout, rng) {}

std::pair<Tensor, Tensor> GpsLayer::operator()(const Tensor& x, const Tensor& e,
                                               const nn::EdgeIndex& edges,
                                               nn::ForwardContext& ctx) const {
  auto [x_local, e_next] = local_(x, e, edges);
  const Tensor x_global = global_(x, ctx);
  return {fuse_(nn::add(x_local, x_global), ctx), e_next};
}

ClusterNetwork::ClusterNetwork(nn::ParamStore& store, const std::string& name, std::size_t dim,
                               std::size_t out_dim, double dropout, Rng& rng)
    : first_(store, name + ".gcn1", dim, rng),
      first_norm_(store, name + ".bn1", dim),
      second_(store, name + ".gcn2", dim, rng),
      second_norm_(store, name + ".bn2", dim),
      head_(store, name + ".ffn", 2 * dim, dim, out_dim, dropout, rng) {}

namespace {

std::vector<Tensor> normalize_jointly(const nn::BatchNorm& norm, const std::vector<Tensor>& parts,
                                      nn::ForwardContext& ctx) {
  if (parts.size() == 1) return {norm(parts.front(), ctx)};
  const Tensor all = norm(nn::concat_rows(parts), ctx);
  std::vector<Tensor> out;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    out.push_back(nn::slice_rows(all, offset, p.rows()));
    offset += p.rows();
  }
  return out;
}

GraphBatch single(const Tensor& x, const Tensor& e, const nn::EdgeIndex& edges) {
  return GraphBatch{{x}, {e}, {edges}};
}

}  // namespace

Tensor ClusterNetwork::operator()(const Tensor& x, const Tensor& e, const nn::EdgeIndex& edges,
                                  nn::ForwardContext& ctx) const {
  return (*this)(single(x, e, edges), ctx).front();
}

std::vector<Tensor> ClusterNetwork::operator()(const GraphBatch& batch,
                                               nn::ForwardContext& ctx) const {
  const std::size_t b = batch.size();
  std::vector<Tensor> z1(b), e1(b), z2(b);
  for (std::size_t k = 0; k < b; ++k) {
    auto [z, e] = first_(batch.x[k], batch.e[k], batch.edges[k]);
    z1[k] = nn::relu(z);
    e1[k] = e;
  }
  z1 = normalize_jointly(first_norm_, z1, ctx);
  for (std::size_t k = 0; k < b; ++k) z2[k] = nn::relu(second_(z1[k], e1[k], batch.edges[k]).first);
  z2 = normalize_jointly(second_norm_, z2, ctx);
  std::vector<Tensor> out;
  for (std::size_t k = 0; k < b; ++k) {
    const Tensor both[] = {z1[k], z2[k]};
    out.push_back(head_(nn::concat_cols(both), ctx));
  }
  return out;
}

LearnToCluster::LearnToCluster(nn::ParamStore& store, const std::string& name,
                               const MGTConfig& cfg, Rng& rng)
    : embed_(store, name + ".embed", cfg.width(), cfg.width(), cfg.dropout, rng),
      assign_(store, name + ".assign", cfg.width(), cfg.clusters, cfg.dropout, rng) {}

std::pair<Tensor, ClusterAssignment> LearnToCluster::operator()(const Tensor& x, const Tensor& e,
                                                                const nn::EdgeIndex& edges,
                                                                nn::ForwardContext& ctx) const {
  return std::move((*this)(single(x, e, edges), ctx).front());
}

std::vector<std::pair<Tensor, ClusterAssignment>> LearnToCluster::operator()(
    const GraphBatch& batch, nn::ForwardContext& ctx) const {
  const std::vector<Tensor> z = embed_(batch, ctx);
  const std::vector<Tensor> logits = assign_(batch, ctx);
  std::vector<std::pair<Tensor, ClusterAssignment>> out;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    out.emplace_back(z[k], ClusterAssignment::from_soft(nn::softmax_rows(logits[k])));
  }
  return out;
}

Tensor coarsen(const Tensor& z, const Tensor& s) {
  if (z.rank() != 2 || s.rank() != 2 || z.rows() != s.rows()) {
    throw ShapeError("coarsen: Z and S must have the same number of rows");
  }
  return nn::matmul(nn::transpose(s), z);
}

SubstructureEncoder::SubstructureEncoder(nn::ParamStore& store, const std::string& name,
                                         const MGTConfig& cfg, Rng& rng) {
  const std::size_t w = cfg.width();
  for (std::size_t l = 0; l < cfg.substructure_layers; ++l) {
    const std::string prefix = name + ".block" + std::to_string(l);
    Block b{nn::MultiHeadAttention(store, prefix + ".attention", w, cfg.heads,
                                   cfg.attention_dropout, rng),
            nn::LayerNorm(store, prefix + ".norm1", w),
            nn::FeedForward(store, prefix + ".ffn", w, 2 * w, w, cfg.dropout, rng),
            nn::LayerNorm(store, prefix + ".norm2", w)};
    blocks_.push_back(std::move(b));
  }
  skip_ = nn::FeedForward(store, name + ".skip", 2 * w, w, w, cfg.dropout, rng);
}

Tensor SubstructureEncoder::operator()(const Tensor& xs, nn::ForwardContext& ctx) const {
  if (xs.rank() != 2 || xs.rows() == 0) throw ShapeError("substructure encoder: no substructures");
  Tensor h = xs;
  for (const Block& b : blocks_) {
    const Tensor h1 = b.attention_norm(nn::add(b.attention(h, ctx), h));
    h = b.ffn_norm(nn::add(b.ffn(h1, ctx), h1));
  }
  const Tensor both[] = {xs, h};
  return skip_(nn::concat_cols(both), ctx);
}

Tensor aggregate(const Tensor& hs, Readout readout) {
  switch (readout) {
    case Readout::Sum: return nn::sum_rows(hs);
    case Readout::Mean: return nn::mean_rows(hs);
    case Readout::Max: return nn::max_rows(hs);
  }
  throw ConfigError("aggregate: invalid readout");
}

Matrix raw_positional(const Graph& g, const MGTConfig& cfg) {
  const std::size_t n = g.num_nodes();
  switch (cfg.positional) {
    case PositionalKind::RWPE: return spectral::rwpe(g, cfg.pe_steps);
    case PositionalKind::LapPE: {
      Matrix out(n, cfg.pe_steps);
      const std::size_t m = std::min(cfg.pe_steps, n > 0 ? n - 1 : 0);
      if (m == 0) return out;
      const Matrix vecs = spectral::lappe(g, m);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = vecs(i, j);
      return out;
    }
    case PositionalKind::None: return Matrix(n, 0);
    case PositionalKind::WavePE: break;
  }
  throw ConfigError("raw_positional: wavelet encodings are tensors; use wavelet_tensor");
}

MGTModel::MGTModel(const MGTConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.out_dim == 0) throw ConfigError("model config: out_dim must be resolved");
  Rng rng(seed);
  const std::size_t w = cfg_.width();
  node_embed_ = nn::Linear(store_, "atom_encoder", cfg_.node_features, cfg_.embed_dim, rng);
  edge_embed_ = nn::Linear(store_, "bond_encoder", cfg_.edge_features, w, rng);
  if (cfg_.positional == PositionalKind::WavePE) {
    wavelet_encoder_ = equivariant::make_wavelet_encoder(store_, "wavepe", cfg_.scales.size(),
                                                         cfg_.wavelet_layers, rng);
  }
  if (cfg_.positional != PositionalKind::None) {
    positional_encoder_ = nn::Linear(store_, "positional", cfg_.raw_positional_width(),
                                     cfg_.positional_dim, rng);
  }
  for (std::size_t l = 0; l < cfg_.atom_layers; ++l) {
    gps_.emplace_back(store_, "gps" + std::to_string(l), cfg_, rng);
  }
  cluster_ = LearnToCluster(store_, "cluster", cfg_, rng);
  substructure_ = SubstructureEncoder(store_, "substructure", cfg_, rng);
  head_ = nn::FeedForward(store_, "head", w, w, cfg_.out_dim, cfg_.dropout, rng);
}

void MGTModel::set_wavelet_encoder_trainable(bool trainable) {
  store_.set_trainable_prefix("wavepe.", trainable);
}

Tensor MGTModel::build_positional(const Graph& g) const {
  const std::size_t n = g.num_nodes();
  switch (cfg_.positional) {
    case PositionalKind::None: return Tensor::zeros({n, 0});
    case PositionalKind::WavePE: {
      const auto wavelets = spectral::wavelet_tensor(g, cfg_.scales);
      return positional_encoder_(
          equivariant::encode_wavelets(wavelets, g.adjacency(), wavelet_encoder_));
    }
    case PositionalKind::RWPE:
    case PositionalKind::LapPE:
      return positional_encoder_(Tensor::from_matrix(raw_positional(g, cfg_)));
  }
  throw ConfigError("build_positional: invalid selector");
}

Tensor MGTModel::input_features(const Graph& g) const {
  if (g.num_nodes() == 0) throw ConfigError("model input: graph has no nodes");
  if (g.node_feature_dim() != cfg_.node_features) {
    throw ConfigError("model input: node features have width " +
                      std::to_string(g.node_feature_dim()) + ", model expects " +
                      std::to_string(cfg_.node_features));
  }
  const Tensor x = node_embed_(Tensor::from_matrix(g.node_features()));
  if (cfg_.positional == PositionalKind::None) return x;
  const Tensor parts[] = {x, build_positional(g)};
  return nn::concat_cols(parts);
}

Tensor MGTModel::input_edges(const Graph& g, const nn::EdgeIndex& edges) const {
  if (g.num_edges() == 0) return edge_embed_(Tensor::zeros({0, cfg_.edge_features}));
  if (g.edge_feature_dim() != cfg_.edge_features) {
    throw ConfigError("model input: edge features have width " +
                      std::to_string(g.edge_feature_dim()) + ", model expects " +
                      std::to_string(cfg_.edge_features));
  }
  return edge_embed_(nn::gather_rows(Tensor::from_matrix(g.edge_features()), edges.edge_of_slot));
}

MGTOutput MGTModel::forward(const Graph& g, nn::ForwardContext& ctx) const {
  const Graph* one[] = {&g};
  return std::move(forward_batch(one, ctx).front());
}

std::vector<MGTOutput> MGTModel::forward_batch(std::span<const Graph* const> graphs,
                                               nn::ForwardContext& ctx) const {
  if (graphs.empty()) throw ConfigError("forward: empty batch");
  GraphBatch batch;
  for (const Graph* g : graphs) {
    nn::EdgeIndex edges = nn::EdgeIndex::from_graph(*g);
    Tensor x = input_features(*g);
    Tensor e = input_edges(*g, edges);
    for (const GpsLayer& layer : gps_) std::tie(x, e) = layer(x, e, edges, ctx);
    batch.x.push_back(x);
    batch.e.push_back(e);
    batch.edges.push_back(std::move(edges));
  }
  auto clustered = cluster_(batch, ctx);

  std::vector<MGTOutput> outputs(graphs.size());
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    MGTOutput& out = outputs[k];
    out.atom_embeddings = batch.x[k];
    out.atom_edges = batch.e[k];
    out.cluster_embeddings = clustered[k].first;
    out.assignment = std::move(clustered[k].second);
    out.substructures = substructure_(coarsen(out.cluster_embeddings, out.assignment.soft), ctx);
    out.graph_embedding = aggregate(out.substructures, cfg_.readout);
    out.prediction = head_(out.graph_embedding, ctx);
  }
  return outputs;
}

Tensor link_loss(const Tensor& s, const Matrix& adjacency) {
  if (s.rank() != 2 || s.rows() != adjacency.rows() || adjacency.rows() != adjacency.cols()) {
    throw ShapeError("link_loss: S rows must match the adjacency size");
  }
  return nn::frobenius_norm(nn::sub(Tensor::from_matrix(adjacency), nn::matmul(s, nn::transpose(s))));
}

Tensor entropy_loss(const Tensor& s) { return nn::mean_row_entropy(s); }

Tensor task_loss(const Tensor& prediction, std::span<const double> target, TaskKind task) {
  if (prediction.numel() != target.size()) {
    throw ConfigError("task loss: target has width " + std::to_string(target.size()) +
                      ", prediction " + std::to_string(prediction.numel()));
  }
  if (task == TaskKind::MultiLabel) {
    for (double y : target) {
      if (y != 0.0 && y != 1.0) throw ConfigError("task loss: multi-label targets must be 0 or 1");
    }
    return nn::bce_with_logits(prediction, target);
  }
  return nn::mse_loss(prediction, target);
}

LossBreakdown mgt_loss(const MGTOutput& out, std::span<const double> target,
                       const Matrix& adjacency, TaskKind task, double lambda_link,
                       double lambda_entropy) {
  LossBreakdown loss;
  const Tensor l1 = task_loss(out.prediction, target, task);
  const Tensor link = link_loss(out.assignment.soft, adjacency);
  const Tensor entropy = entropy_loss(out.assignment.soft);
  loss.task = l1.item();
  loss.link = link.item();
  loss.entropy = entropy.item();
  loss.total = l1;
  if (lambda_link != 0.0) loss.total = nn::add(loss.total, nn::scale(link, lambda_link));
  if (lambda_entropy != 0.0) loss.total = nn::add(loss.total, nn::scale(entropy, lambda_entropy));
  return loss;
}

}  // namespace mgt::model
