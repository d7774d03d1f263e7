// SPDX-License-Identifier: Apache-2.0
//
// mgt: positional encodings, synthetic data, training, evaluation and
// export from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgt/checkpoint.hpp"
#include "mgt/data.hpp"
#include "mgt/equivariant.hpp"
#include "mgt/error.hpp"
#include "mgt/spectral.hpp"
#include "mgt/train.hpp"

namespace {

using json = nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mgt::ConfigError("cannot write " + path);
  out << text;
}

json rows_of(const mgt::Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

std::string encoding_document(const std::string& kind, const mgt::Matrix& m) {
  return json{{"kind", kind}, {"n", m.rows()}, {"k", m.cols()}, {"rows", rows_of(m)}}.dump(2) + "\n";
}

struct PeArgs {
  std::string kind;
  std::string graph;
  std::vector<double> scales = mgt::spectral::default_scales();
  std::size_t steps = 5;
  std::size_t dim = 2;
  std::string checkpoint;
  std::string out;
};

// Without a checkpoint the raw wavelet stack is emitted: row i concatenates
// row i of every slice. With one, the trained encoder maps it to n x k.
void run_pe(const PeArgs& args) {
  const mgt::Graph g = mgt::load_graph_file(args.graph);
  if (args.kind == "rw") {
    write_text(args.out, encoding_document("rwpe", mgt::spectral::rwpe(g, args.steps)));
  } else if (args.kind == "lap") {
    write_text(args.out, encoding_document("lappe", mgt::spectral::lappe(g, args.dim)));
  } else if (args.checkpoint.empty()) {
    const auto w = mgt::spectral::wavelet_tensor(g, args.scales);
    const std::size_t n = w.num_nodes();
    mgt::Matrix rows(n, n * w.num_scales());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < w.num_scales(); ++s) {
        for (std::size_t j = 0; j < n; ++j) rows(i, s * n + j) = w.matrices[s](i, j);
      }
    }
    write_text(args.out, encoding_document("wavepe", rows));
  } else {
    const auto model = mgt::train::restore_model(mgt::train::load_checkpoint(args.checkpoint));
    const auto& cfg = model->config();
    if (cfg.positional != mgt::model::PositionalKind::WavePE) {
      throw mgt::ConfigError("checkpoint does not use wavelet positional encoding");
    }
    mgt::nn::NoGradGuard no_grad;
    const auto w = mgt::spectral::wavelet_tensor(g, cfg.scales);
    const auto encoded = mgt::equivariant::encode_wavelets(w, g.adjacency(), model->wavelet_encoder());
    write_text(args.out, encoding_document("wavepe", encoded.to_matrix()));
  }
}

struct GenArgs {
  std::string motif = "triangle";
  std::size_t count = 32;
  std::uint64_t seed = 0;
  std::size_t min_repeats = 1;
  std::size_t max_repeats = 4;
  double noise = 0.05;
  std::string out;
};

void run_gen(const GenArgs& args) {
  mgt::data::MotifOptions options;
  options.seed = args.seed;
  options.count = args.count;
  options.motif = mgt::data::parse_motif(args.motif);
  options.min_repeats = args.min_repeats;
  options.max_repeats = args.max_repeats;
  options.noise = args.noise;
  const auto ds = mgt::data::generate_motif_dataset(options);
  mgt::data::save_dataset(ds, args.out);
  std::printf("wrote %zu graphs to %s\n", ds.samples.size(), args.out.c_str());
}

void run_train(const std::string& config_path, bool freeze) {
  auto cfg = mgt::train::load_config_file(config_path);
  if (freeze) cfg.freeze_wavelet_encoder = true;
  const auto result = mgt::train::train(cfg);
  const auto& last = result.history.back();
  std::printf("epochs %zu  final total %.6g  l1 %.6g  best epoch %zu  val %.6g\n",
              result.history.size(), last.total, last.task, result.best_epoch,
              result.best_val_metric);
}

void run_eval(const std::string& checkpoint, const std::string& data_dir, const std::string& split,
              const std::string& out) {
  const auto ckpt = mgt::train::load_checkpoint(checkpoint);
  const auto model = mgt::train::restore_model(ckpt);
  const auto ds = mgt::data::load_dataset(data_dir);
  const auto report =
      mgt::train::evaluate(*model, ckpt.config, ds, mgt::data::parse_split(split));
  write_text(out, mgt::train::to_json(report) + "\n");
}

void run_clusters(const std::string& checkpoint, const std::string& graph, const std::string& out) {
  const auto model = mgt::train::restore_model(mgt::train::load_checkpoint(checkpoint));
  const auto g = mgt::load_graph_file(graph);
  write_text(out, mgt::train::to_json(mgt::train::export_clusters(*model, g)) + "\n");
}

void run_embed(const std::string& checkpoint, const std::string& data_dir, const std::string& out) {
  const auto model = mgt::train::restore_model(mgt::train::load_checkpoint(checkpoint));
  const auto ds = mgt::data::load_dataset(data_dir);
  write_text(out, mgt::train::export_embeddings(*model, ds));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiresolution graph transformer toolkit"};
  app.require_subcommand(1);

  PeArgs pe;
  auto* pe_cmd = app.add_subcommand("pe", "Compute node positional encodings for one graph");
  pe_cmd->add_option("kind", pe.kind, "wave, rw or lap")
      ->required()
      ->check(CLI::IsMember({"wave", "rw", "lap"}));
  pe_cmd->add_option("--graph", pe.graph, "Graph JSON file")->required()->check(CLI::ExistingFile);
  pe_cmd->add_option("--scales", pe.scales, "Wavelet scales")->delimiter(',');
  pe_cmd->add_option("--steps", pe.steps, "Random-walk steps")->check(CLI::PositiveNumber);
  pe_cmd->add_option("--dim", pe.dim, "Laplacian eigenvector count")->check(CLI::PositiveNumber);
  pe_cmd->add_option("--checkpoint", pe.checkpoint, "Encode wavelets with a trained model");
  pe_cmd->add_option("--out", pe.out, "Output file (stdout when omitted)");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic motif-chain dataset");
  gen_cmd->add_option("--motif", gen.motif)->check(CLI::IsMember({"triangle", "square", "clique4"}));
  gen_cmd->add_option("--count", gen.count)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--min-repeats", gen.min_repeats)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-repeats", gen.max_repeats)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--noise", gen.noise)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Dataset directory")->required();

  std::string config_path;
  bool freeze = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
  train_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_flag("--freeze-wavepe", freeze, "Keep the wavelet encoder at its initialization");

  std::string checkpoint, data_dir, split = "test", graph, out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", out, "Report file (stdout when omitted)");

  auto* clusters_cmd = app.add_subcommand("clusters", "Export soft and hard cluster assignments");
  clusters_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  clusters_cmd->add_option("--graph", graph)->required()->check(CLI::ExistingFile);
  clusters_cmd->add_option("--out", out);

  auto* embed_cmd = app.add_subcommand("embed", "Export graph embeddings as CSV");
  embed_cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--data", data_dir)->required()->check(CLI::ExistingDirectory);
  embed_cmd->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (*pe_cmd) run_pe(pe);
    if (*gen_cmd) run_gen(gen);
    if (*train_cmd) run_train(config_path, freeze);
    if (*eval_cmd) run_eval(checkpoint, data_dir, split, out);
    if (*clusters_cmd) run_clusters(checkpoint, graph, out);
    if (*embed_cmd) run_embed(checkpoint, data_dir, out);
  } catch (const mgt::Error& e) {
    std::fprintf(stderr, "mgt: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mgt: unexpected failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
