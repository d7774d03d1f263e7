// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgt/matrix.hpp"

namespace mgt {

/// Undirected edge between two distinct nodes.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  bool operator==(const Edge&) const = default;
};

/// Node/edge-attributed undirected simple graph.
///
/// Immutable after construction. The adjacency matrix is binary, symmetric,
/// and has a zero diagonal; each unordered node pair appears at most once in
/// the edge list. Edge features belong to the unordered edge and are shared by
/// both orientations.
class Graph {
 public:
  /// Validates and builds a graph. Throws GraphError with the location of the
  /// first offending item.
  static Graph create(Matrix node_features, std::vector<Edge> edges, Matrix edge_features,
                      std::optional<Matrix> positional = std::nullopt,
                      std::optional<std::vector<double>> target = std::nullopt);

  /// Graph with `n` nodes, unit scalar node features and no edge features.
  static Graph from_edges(std::size_t n, std::vector<Edge> edges);

  std::size_t num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t node_feature_dim() const { return node_features_.cols(); }
  std::size_t edge_feature_dim() const { return edge_features_.cols(); }

  const Matrix& adjacency() const { return adjacency_; }
  const Matrix& node_features() const { return node_features_; }
  const Matrix& edge_features() const { return edge_features_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::optional<Matrix>& positional() const { return positional_; }
  const std::optional<std::vector<double>>& target() const { return target_; }

  /// Degree of node i (row sum of the binary adjacency).
  double degree(std::size_t i) const;

  /// True when positional rows were supplied by the source document rather
  /// than computed. Such values are kept but never consumed by the model.
  bool has_document_positional() const { return positional_.has_value(); }

  bool operator==(const Graph&) const = default;

 private:
  Graph() = default;

  std::size_t n_ = 0;
  Matrix adjacency_;
  Matrix node_features_;
  std::vector<Edge> edges_;
  Matrix edge_features_;
  std::optional<Matrix> positional_;
  std::optional<std::vector<double>> target_;
};

/// Node relabeling: node i of the source graph becomes node mapping[i].
class Permutation {
 public:
  /// Throws GraphError unless `mapping` is a bijection on {0..n-1}.
  explicit Permutation(std::vector<std::size_t> mapping);

  static Permutation identity(std::size_t n);

  std::size_t size() const { return mapping_.size(); }
  std::size_t operator()(std::size_t i) const { return mapping_[i]; }
  const std::vector<std::size_t>& mapping() const { return mapping_; }
  Permutation inverse() const;

 private:
  std::vector<std::size_t> mapping_;
};

/// Relabels every node of `g` by `sigma`: adjacency is conjugated, feature and
/// positional rows move with their nodes, edge endpoints are renamed and the
/// edge order is kept.
Graph apply_permutation(const Graph& g, const Permutation& sigma);

/// [sigma . M]_{a,b} = M_{sigma^-1(a), sigma^-1(b)}.
Matrix permute_square(const Matrix& m, const Permutation& sigma);
/// [sigma . M]_{a,:} = M_{sigma^-1(a),:}.
Matrix permute_rows(const Matrix& m, const Permutation& sigma);

/// I - D^{-1/2} A D^{-1/2}. Rows and columns of isolated nodes are zero,
/// including the diagonal.
Matrix normalized_laplacian(const Graph& g);

/// Parses a graph document (JSON). Throws GraphError on any format or
/// invariant violation.
Graph load_graph(std::string_view document);
Graph load_graph_file(const std::string& path);

/// Serializes to the graph-document format; load_graph(save_graph(g)) == g.
std::string save_graph(const Graph& g);
void save_graph_file(const Graph& g, const std::string& path);

}  // namespace mgt
