// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mgt/graph.hpp"
#include "mgt/rng.hpp"

namespace mgt::data {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct Sample {
  std::string file;
  Split split = Split::Train;
  Graph graph;
};

/// Graphs with targets and split membership. Every graph carries a target of
/// the same width.
struct Dataset {
  std::vector<Sample> samples;

  std::size_t target_dim() const;
  std::size_t node_feature_dim() const;
  std::size_t edge_feature_dim() const;
  std::vector<const Sample*> split(Split which) const;

  /// Throws ConfigError on empty datasets or mismatched target/feature widths.
  void validate() const;
};

/// Name of the index file inside a dataset directory.
inline constexpr std::string_view kIndexFile = "index.json";

/// Reads `<dir>/index.json` ({"graphs": [{"file": ..., "split": ...}, ...]})
/// and every listed graph document.
Dataset load_dataset(const std::string& dir);
void save_dataset(const Dataset& dataset, const std::string& dir);

enum class Motif { Triangle, Square, Clique4 };

Motif parse_motif(std::string_view name);
std::string_view to_string(Motif motif);
std::size_t motif_nodes(Motif motif);
std::vector<Edge> motif_edges(Motif motif);

struct MotifOptions {
  std::uint64_t seed = 0;
  std::size_t count = 32;
  Motif motif = Motif::Triangle;
  std::size_t min_repeats = 1;
  std::size_t max_repeats = 4;
  /// Standard deviation of Gaussian noise on the scalar node feature.
  double noise = 0.05;
};

/// Motif chain for r repeats: r copies of the motif where the last node of
/// copy i is bridged to the first node of copy (i + 1) mod r. For r >= 2 that
/// is r bridge edges (closing the ring); a single copy has none. Node
/// feature: [1 + noise]; edge features: [1, 0] inside a motif, [0, 1] on a
/// bridge. Target: [r + 0.1 * edge_count(motif)].
Graph motif_chain(Motif motif, std::size_t repeats, double noise, Rng* rng);

/// `count` motif chains with repeats drawn uniformly from the configured
/// range and a seeded 75/12.5/12.5 train/val/test split (at least one graph
/// in train). Deterministic per seed.
Dataset generate_motif_dataset(const MotifOptions& options);

}  // namespace mgt::data
