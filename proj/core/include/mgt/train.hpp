// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mgt/config.hpp"
#include "mgt/data.hpp"
#include "mgt/model.hpp"

namespace mgt::train {

struct EpochRecord {
  std::size_t epoch = 0;
  double total = 0.0;
  double task = 0.0;
  double link = 0.0;
  double entropy = 0.0;
  double val_metric = 0.0;
};

/// Loss of one graph in one optimizer step.
struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double total = 0.0;
  double task = 0.0;
  double link = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_metric = 0.0;
  std::unique_ptr<model::MGTModel> model;  // parameters after the final epoch
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_graph;
};

/// Fills input/output widths left at zero from the dataset and checks the
/// rest against it. Throws ConfigError on mismatch.
TrainConfig resolve_config(TrainConfig cfg, const data::Dataset& dataset);

/// Minibatch training on the train split. Writes the per-epoch CSV log and
/// the best-validation checkpoint when their paths are set. Throws
/// NumericError on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const data::Dataset& dataset, const TrainHooks& hooks = {});

/// Loads the dataset named by the config and trains.
TrainResult train(const TrainConfig& cfg);

/// Header of the training log CSV.
inline constexpr const char* kLogHeader = "epoch,total,l1,link,entropy,val_metric";

std::string format_log(const std::vector<EpochRecord>& history);

/// Eval-mode predictions, one row per sample.
Matrix predict(const model::MGTModel& model, const std::vector<const data::Sample*>& samples);

struct EvalReport {
  std::string split;
  std::string metric;  // "mae" or "ap"
  double value = 0.0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// MAE for regression, AP for multi-label. Throws Error on an empty split
/// and ConfigError when the data does not fit the model.
EvalReport evaluate(const model::MGTModel& model, const TrainConfig& cfg,
                    const data::Dataset& dataset, data::Split split);
/// Metric used for validation-based checkpoint selection.
double split_metric(const model::MGTModel& model, model::TaskKind task,
                    const std::vector<const data::Sample*>& samples);

std::string to_json(const EvalReport& report);

struct ClusterExport {
  Matrix soft;
  std::vector<std::size_t> hard_labels;
};

ClusterExport export_clusters(const model::MGTModel& model, const Graph& graph);
std::string to_json(const ClusterExport& clusters);

/// CSV with header file,split,z0..z{d-1}; one eval-mode graph embedding per row.
std::string export_embeddings(const model::MGTModel& model, const data::Dataset& dataset);

}  // namespace mgt::train
