// SPDX-License-Identifier: Apache-2.0

#include "mgt/graph.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "mgt/error.hpp"

namespace mgt {

using json = nlohmann::json;

Graph Graph::create(Matrix node_features, std::vector<Edge> edges, Matrix edge_features,
                    std::optional<Matrix> positional, std::optional<std::vector<double>> target) {
  const std::size_t n = node_features.rows();
  if (edge_features.rows() != edges.size()) {
    throw GraphError("edge features: " + std::to_string(edge_features.rows()) + " rows for " +
                     std::to_string(edges.size()) + " edges");
  }
  if (positional && positional->rows() != n) {
    throw GraphError("positional: " + std::to_string(positional->rows()) + " rows for " +
                     std::to_string(n) + " nodes");
  }

  Graph g;
  g.n_ = n;
  g.adjacency_ = Matrix(n, n);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    const std::string where = "edges[" + std::to_string(k) + "]";
    if (e.src >= n || e.dst >= n) {
      throw GraphError(where + ": node index out of range (" + std::to_string(e.src) + ", " +
                       std::to_string(e.dst) + ") with " + std::to_string(n) + " nodes");
    }
    if (e.src == e.dst) throw GraphError(where + ": self-loop at node " + std::to_string(e.src));
    const auto key = std::minmax(e.src, e.dst);
    if (!seen.insert({key.first, key.second}).second) {
      throw GraphError(where + ": duplicate edge {" + std::to_string(key.first) + ", " +
                       std::to_string(key.second) + "}");
    }
    g.adjacency_(e.src, e.dst) = 1.0;
    g.adjacency_(e.dst, e.src) = 1.0;
  }
  g.node_features_ = std::move(node_features);
  g.edges_ = std::move(edges);
  g.edge_features_ = std::move(edge_features);
  g.positional_ = std::move(positional);
  g.target_ = std::move(target);
  return g;
}

Graph Graph::from_edges(std::size_t n, std::vector<Edge> edges) {
  Matrix edge_features(edges.size(), 0);
  return create(Matrix(n, 1, 1.0), std::move(edges), std::move(edge_features));
}

double Graph::degree(std::size_t i) const {
  double d = 0.0;
  for (std::size_t j = 0; j < n_; ++j) d += adjacency_(i, j);
  return d;
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  std::vector<bool> hit(mapping_.size(), false);
  for (std::size_t i = 0; i < mapping_.size(); ++i) {
    const std::size_t v = mapping_[i];
    if (v >= mapping_.size() || hit[v]) {
      throw GraphError("permutation: mapping is not a bijection at position " + std::to_string(i));
    }
    hit[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(mapping_.size());
  for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = i;
  return Permutation(std::move(inv));
}

Matrix permute_square(const Matrix& m, const Permutation& sigma) {
  if (m.rows() != sigma.size() || m.cols() != sigma.size()) {
    throw ShapeError("permute_square: permutation length does not match matrix");
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(sigma(i), sigma(j)) = m(i, j);
  return out;
}

Matrix permute_rows(const Matrix& m, const Permutation& sigma) {
  if (m.rows() != sigma.size()) throw ShapeError("permute_rows: permutation length mismatch");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    auto dst = out.row(sigma(i));
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

Graph apply_permutation(const Graph& g, const Permutation& sigma) {
  if (sigma.size() != g.num_nodes()) {
    throw ShapeError("apply_permutation: permutation of length " + std::to_string(sigma.size()) +
                     " for a graph with " + std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (const Edge& e : g.edges()) edges.push_back({sigma(e.src), sigma(e.dst)});
  std::optional<Matrix> positional;
  if (g.positional()) positional = permute_rows(*g.positional(), sigma);
  return Graph::create(permute_rows(g.node_features(), sigma), std::move(edges),
                       g.edge_features(), std::move(positional), g.target());
}

Matrix normalized_laplacian(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = g.degree(i);
    inv_sqrt_degree[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  const Matrix& a = g.adjacency();
  Matrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double diag = (i == j && inv_sqrt_degree[i] > 0.0) ? 1.0 : 0.0;
      lap(i, j) = diag - a(i, j) * inv_sqrt_degree[i] * inv_sqrt_degree[j];
    }
  }
  return lap;
}

namespace {

std::vector<double> parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw GraphError(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw GraphError(where + "[" + std::to_string(i) + "]: expected a number");
    }
    const double v = j[i].get<double>();
    if (!std::isfinite(v)) throw GraphError(where + "[" + std::to_string(i) + "]: not finite");
    out.push_back(v);
  }
  return out;
}

Matrix parse_rows(const json& j, const std::string& where) {
  if (!j.is_array()) throw GraphError(where + ": expected an array of rows");
  std::vector<double> values;
  std::size_t width = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_where = where + "[" + std::to_string(i) + "]";
    std::vector<double> row = parse_vector(j[i], row_where);
    if (i == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw GraphError(row_where + ": inconsistent feature width " + std::to_string(row.size()) +
                       " (expected " + std::to_string(width) + ")");
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(j.size(), width, std::move(values));
}

std::size_t parse_index(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) throw GraphError(where + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

}  // namespace

Graph load_graph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw GraphError(std::string("malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw GraphError("malformed document: top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "nodes" && key != "edges" && key != "target" && key != "positional") {
      throw GraphError("malformed document: unknown key \"" + key + "\"");
    }
  }
  if (!doc.contains("nodes")) throw GraphError("malformed document: missing \"nodes\"");
  Matrix nodes = parse_rows(doc["nodes"], "nodes");

  std::vector<Edge> edges;
  std::vector<double> edge_values;
  std::size_t edge_width = 0;
  if (doc.contains("edges")) {
    const json& je = doc["edges"];
    if (!je.is_array()) throw GraphError("edges: expected an array");
    for (std::size_t k = 0; k < je.size(); ++k) {
      const std::string where = "edges[" + std::to_string(k) + "]";
      const json& e = je[k];
      if (!e.is_object()) throw GraphError(where + ": expected an object");
      for (const auto& [key, value] : e.items()) {
        if (key != "src" && key != "dst" && key != "feat") {
          throw GraphError(where + ": unknown key \"" + key + "\"");
        }
      }
      if (!e.contains("src") || !e.contains("dst")) {
        throw GraphError(where + ": missing \"src\" or \"dst\"");
      }
      Edge edge{parse_index(e["src"], where + ".src"), parse_index(e["dst"], where + ".dst")};
      std::vector<double> feat;
      if (e.contains("feat")) feat = parse_vector(e["feat"], where + ".feat");
      if (k == 0) {
        edge_width = feat.size();
      } else if (feat.size() != edge_width) {
        throw GraphError(where + ".feat: inconsistent feature width " +
                         std::to_string(feat.size()) + " (expected " +
                         std::to_string(edge_width) + ")");
      }
      edges.push_back(edge);
      edge_values.insert(edge_values.end(), feat.begin(), feat.end());
    }
  }
  Matrix edge_features(edges.size(), edge_width, std::move(edge_values));

  std::optional<std::vector<double>> target;
  if (doc.contains("target")) target = parse_vector(doc["target"], "target");
  std::optional<Matrix> positional;
  if (doc.contains("positional")) positional = parse_rows(doc["positional"], "positional");

  return Graph::create(std::move(nodes), std::move(edges), std::move(edge_features),
                       std::move(positional), std::move(target));
}

Graph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GraphError("cannot open graph file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return load_graph(buffer.str());
  } catch (const GraphError& e) {
    throw GraphError(path + ": " + e.what());
  }
}

namespace {

json rows_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

}  // namespace

std::string save_graph(const Graph& g) {
  json doc;
  doc["nodes"] = rows_to_json(g.node_features());
  json edges = json::array();
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    auto feat = g.edge_features().row(k);
    edges.push_back({{"src", g.edges()[k].src},
                     {"dst", g.edges()[k].dst},
                     {"feat", std::vector<double>(feat.begin(), feat.end())}});
  }
  doc["edges"] = std::move(edges);
  if (g.target()) doc["target"] = *g.target();
  if (g.positional()) doc["positional"] = rows_to_json(*g.positional());
  return doc.dump();
}

void save_graph_file(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GraphError("cannot write graph file " + path);
  out << save_graph(g) << '\n';
}

}  // namespace mgt
