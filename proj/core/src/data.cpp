// SPDX-License-Identifier: Apache-2.0

#include "mgt/data.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mgt/error.hpp"

namespace mgt::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split \"" + std::string(name) + "\"");
}

std::size_t Dataset::target_dim() const {
  return samples.empty() || !samples.front().graph.target() ? 0
                                                            : samples.front().graph.target()->size();
}

std::size_t Dataset::node_feature_dim() const {
  return samples.empty() ? 0 : samples.front().graph.node_feature_dim();
}

std::size_t Dataset::edge_feature_dim() const {
  for (const Sample& s : samples) {
    if (s.graph.num_edges() > 0) return s.graph.edge_feature_dim();
  }
  return 0;
}

std::vector<const Sample*> Dataset::split(Split which) const {
  std::vector<const Sample*> out;
  for (const Sample& s : samples) {
    if (s.split == which) out.push_back(&s);
  }
  return out;
}

void Dataset::validate() const {
  if (samples.empty()) throw ConfigError("dataset: no graphs");
  const std::size_t targets = target_dim();
  const std::size_t nodes = node_feature_dim();
  const std::size_t edges = edge_feature_dim();
  for (const Sample& s : samples) {
    if (!s.graph.target()) throw ConfigError("dataset: " + s.file + " has no target");
    if (s.graph.target()->size() != targets || targets == 0) {
      throw ConfigError("dataset: " + s.file + " target width differs");
    }
    if (s.graph.node_feature_dim() != nodes) {
      throw ConfigError("dataset: " + s.file + " node feature width differs");
    }
    if (s.graph.num_edges() > 0 && s.graph.edge_feature_dim() != edges) {
      throw ConfigError("dataset: " + s.file + " edge feature width differs");
    }
    if (s.graph.num_nodes() == 0) throw ConfigError("dataset: " + s.file + " has no nodes");
  }
}

Dataset load_dataset(const std::string& dir) {
  const fs::path index_path = fs::path(dir) / kIndexFile;
  std::ifstream in(index_path);
  if (!in) throw ConfigError("dataset: cannot open " + index_path.string());
  json index;
  try {
    index = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("dataset: malformed index: " + std::string(e.what()));
  }
  if (!index.is_object() || !index.contains("graphs") || !index["graphs"].is_array()) {
    throw ConfigError("dataset: index must hold a \"graphs\" array");
  }
  Dataset ds;
  for (const json& entry : index["graphs"]) {
    if (!entry.is_object() || !entry.contains("file") || !entry["file"].is_string()) {
      throw ConfigError("dataset: index entries need a \"file\" string");
    }
    const std::string file = entry["file"].get<std::string>();
    const Split split =
        entry.contains("split") ? parse_split(entry["split"].get<std::string>()) : Split::Train;
    ds.samples.push_back(Sample{file, split, load_graph_file((fs::path(dir) / file).string())});
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(dir);
  json graphs = json::array();
  for (const Sample& s : dataset.samples) {
    save_graph_file(s.graph, (fs::path(dir) / s.file).string());
    graphs.push_back({{"file", s.file}, {"split", std::string(to_string(s.split))}});
  }
  std::ofstream out(fs::path(dir) / kIndexFile, std::ios::binary);
  if (!out) throw ConfigError("dataset: cannot write index in " + dir);
  out << json{{"graphs", graphs}}.dump(2) << '\n';
}

Motif parse_motif(std::string_view name) {
  if (name == "triangle") return Motif::Triangle;
  if (name == "square") return Motif::Square;
  if (name == "clique4") return Motif::Clique4;
  throw ConfigError("unknown motif \"" + std::string(name) + "\"");
}

std::string_view to_string(Motif motif) {
  switch (motif) {
    case Motif::Triangle: return "triangle";
    case Motif::Square: return "square";
    case Motif::Clique4: return "clique4";
  }
  return "triangle";
}

std::size_t motif_nodes(Motif motif) { return motif == Motif::Triangle ? 3 : 4; }

std::vector<Edge> motif_edges(Motif motif) {
  switch (motif) {
    case Motif::Triangle: return {{0, 1}, {1, 2}, {2, 0}};
    case Motif::Square: return {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    case Motif::Clique4: return {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  }
  return {};
}

Graph motif_chain(Motif motif, std::size_t repeats, double noise, Rng* rng) {
  if (repeats == 0) throw ConfigError("motif_chain: at least one repeat is required");
  const std::size_t k = motif_nodes(motif);
  const std::vector<Edge> local = motif_edges(motif);
  const std::size_t n = k * repeats;

  Matrix nodes(n, 1, 1.0);
  if (rng != nullptr && noise > 0.0) {
    for (std::size_t i = 0; i < n; ++i) nodes(i, 0) += noise * rng->normal();
  }
  std::vector<Edge> edges;
  std::vector<double> feats;
  for (std::size_t c = 0; c < repeats; ++c) {
    for (const Edge& e : local) {
      edges.push_back({c * k + e.src, c * k + e.dst});
      feats.insert(feats.end(), {1.0, 0.0});
    }
  }
  if (repeats >= 2) {
    for (std::size_t c = 0; c < repeats; ++c) {
      edges.push_back({c * k + k - 1, ((c + 1) % repeats) * k});
      feats.insert(feats.end(), {0.0, 1.0});
    }
  }
  const std::size_t m = edges.size();
  const double target = static_cast<double>(repeats) + 0.1 * static_cast<double>(local.size());
  return Graph::create(std::move(nodes), std::move(edges), Matrix(m, 2, std::move(feats)),
                       std::nullopt, std::vector<double>{target});
}

Dataset generate_motif_dataset(const MotifOptions& options) {
  if (options.count == 0) throw ConfigError("generate_motif_dataset: count must be positive");
  if (options.min_repeats == 0 || options.max_repeats < options.min_repeats) {
    throw ConfigError("generate_motif_dataset: invalid repeats range");
  }
  Rng rng(options.seed);
  Dataset ds;
  for (std::size_t i = 0; i < options.count; ++i) {
    const auto r = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(options.min_repeats), static_cast<std::int64_t>(options.max_repeats)));
    char name[32];
    std::snprintf(name, sizeof name, "g%04zu.json", i);
    ds.samples.push_back(Sample{name, Split::Train, motif_chain(options.motif, r, options.noise, &rng)});
  }

  std::vector<std::size_t> order(options.count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng = Rng::derive(options.seed, 0x5b117);
  for (std::size_t i = order.size(); i-- > 1;) {
    std::swap(order[i], order[static_cast<std::size_t>(split_rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
  }
  const std::size_t n_val = options.count / 8;
  const std::size_t n_test = options.count / 8;
  const std::size_t n_train = options.count - n_val - n_test;
  for (std::size_t k = 0; k < order.size(); ++k) {
    Split s = Split::Train;
    if (k >= n_train) s = k < n_train + n_val ? Split::Val : Split::Test;
    ds.samples[order[k]].split = s;
  }
  return ds;
}

}  // namespace mgt::data
