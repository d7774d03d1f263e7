// SPDX-License-Identifier: Apache-2.0

#include "mgt/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mgt/checkpoint.hpp"
#include "mgt/error.hpp"
#include "mgt/metrics.hpp"
#include "mgt/ops.hpp"
#include "mgt/optim.hpp"

namespace mgt::train {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kDropoutStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_widths(const model::MGTConfig& m, model::TaskKind task, const data::Dataset& dataset) {
  if (m.node_features != dataset.node_feature_dim()) {
    throw ConfigError("node feature width " + std::to_string(dataset.node_feature_dim()) +
                      " does not match model width " + std::to_string(m.node_features));
  }
  const std::size_t edge = dataset.edge_feature_dim();
  if (edge != 0 && m.edge_features != edge) {
    throw ConfigError("edge feature width " + std::to_string(edge) +
                      " does not match model width " + std::to_string(m.edge_features));
  }
  if (m.out_dim != dataset.target_dim()) {
    throw ConfigError("target width " + std::to_string(dataset.target_dim()) +
                      " does not match model output " + std::to_string(m.out_dim));
  }
  if (task == model::TaskKind::MultiLabel) {
    for (const data::Sample& s : dataset.samples) {
      for (double t : *s.graph.target()) {
        if (t != 0.0 && t != 1.0) {
          throw ConfigError("multilabel targets must be 0 or 1 (" + s.file + ")");
        }
      }
    }
  }
}

bool improves(model::TaskKind task, double candidate, double best) {
  return task == model::TaskKind::Regression ? candidate < best : candidate > best;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

}  // namespace

TrainConfig resolve_config(TrainConfig cfg, const data::Dataset& dataset) {
  dataset.validate();
  model::MGTConfig& m = cfg.model;
  if (m.node_features == 0) m.node_features = dataset.node_feature_dim();
  if (m.edge_features == 0) m.edge_features = dataset.edge_feature_dim();
  if (m.out_dim == 0) m.out_dim = dataset.target_dim();
  check_widths(m, cfg.task, dataset);
  cfg.validate();
  m.validate();
  return cfg;
}

TrainResult train(const TrainConfig& raw_cfg, const data::Dataset& dataset, const TrainHooks& hooks) {
  const TrainConfig cfg = resolve_config(raw_cfg, dataset);
  const auto train_set = dataset.split(data::Split::Train);
  if (train_set.empty()) throw ConfigError("dataset has no train graphs");
  auto val_set = dataset.split(data::Split::Val);
  if (val_set.empty()) val_set = train_set;

  TrainResult result;
  result.model = std::make_unique<model::MGTModel>(cfg.model, cfg.seed);
  model::MGTModel& net = *result.model;
  if (cfg.freeze_wavelet_encoder) net.set_wavelet_encoder_trainable(false);

  optim::Adam adam({cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
  Rng dropout_rng = Rng::derive(cfg.seed, kDropoutStream);
  Rng shuffle_rng = Rng::derive(cfg.seed, kShuffleStream);
  nn::ForwardContext ctx{nn::Mode::Train, &dropout_rng};

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  result.best_val_metric = cfg.task == model::TaskKind::Regression
                               ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i)));
      std::swap(order[i], order[j]);
    }
    EpochRecord record;
    record.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      net.params().zero_grad();
      ++step;
      std::vector<const Graph*> graphs;
      for (std::size_t k = start; k < end; ++k) graphs.push_back(&train_set[order[k]]->graph);
      const std::vector<model::MGTOutput> outputs = net.forward_batch(graphs, ctx);
      std::vector<nn::Tensor> totals;
      for (std::size_t k = start; k < end; ++k) {
        const data::Sample& sample = *train_set[order[k]];
        const model::LossBreakdown loss =
            model::mgt_loss(outputs[k - start], *sample.graph.target(), sample.graph.adjacency(),
                            cfg.task, cfg.model.lambda_link, cfg.model.lambda_entropy);
        const double total = loss.total.item();
        if (!std::isfinite(total)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step) + ", graph " + sample.file + ": total=" +
                             format_double(total) + " l1=" + format_double(loss.task) +
                             " link=" + format_double(loss.link) +
                             " entropy=" + format_double(loss.entropy));
        }
        totals.push_back(loss.total);
        record.total += total;
        record.task += loss.task;
        record.link += loss.link;
        record.entropy += loss.entropy;
        if (hooks.on_graph) {
          hooks.on_graph(StepRecord{epoch, step, total, loss.task, loss.link, loss.entropy});
        }
      }
      nn::Tensor batch_total = totals.front();
      for (std::size_t k = 1; k < totals.size(); ++k) batch_total = nn::add(batch_total, totals[k]);
      batch_total.backward();
      adam.step(net.params(), 1.0 / static_cast<double>(end - start));
    }
    const double count = static_cast<double>(order.size());
    record.total /= count;
    record.task /= count;
    record.link /= count;
    record.entropy /= count;
    record.val_metric = split_metric(net, cfg.task, val_set);
    result.history.push_back(record);

    if (result.best_epoch == 0 || improves(cfg.task, record.val_metric, result.best_val_metric)) {
      result.best_epoch = epoch;
      result.best_val_metric = record.val_metric;
      if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, cfg, net.params());
    }
  }
  if (!cfg.log_path.empty()) write_file(cfg.log_path, format_log(result.history));
  return result;
}

TrainResult train(const TrainConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("config: dataset path is not set");
  return train(cfg, data::load_dataset(cfg.dataset));
}

std::string format_log(const std::vector<EpochRecord>& history) {
  std::string out = std::string(kLogHeader) + "\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + "," + format_double(r.total) + "," + format_double(r.task) +
           "," + format_double(r.link) + "," + format_double(r.entropy) + "," +
           format_double(r.val_metric) + "\n";
  }
  return out;
}

Matrix predict(const model::MGTModel& model, const std::vector<const data::Sample*>& samples) {
  nn::NoGradGuard no_grad;
  nn::ForwardContext ctx{nn::Mode::Eval, nullptr};
  const std::size_t c = model.config().out_dim;
  Matrix out(samples.size(), c);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const model::MGTOutput result = model.forward(samples[i]->graph, ctx);
    const auto y = result.prediction.data();
    for (std::size_t j = 0; j < c; ++j) out(i, j) = y[j];
  }
  return out;
}

double split_metric(const model::MGTModel& model, model::TaskKind task,
                    const std::vector<const data::Sample*>& samples) {
  if (samples.empty()) throw Error("evaluation split is empty");
  const Matrix pred = predict(model, samples);
  Matrix target(pred.rows(), pred.cols());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& t = *samples[i]->graph.target();
    if (t.size() != pred.cols()) throw ConfigError("target width differs in " + samples[i]->file);
    for (std::size_t j = 0; j < t.size(); ++j) target(i, j) = t[j];
  }
  return task == model::TaskKind::Regression ? metrics::mae(pred, target)
                                             : metrics::average_precision(pred, target);
}

EvalReport evaluate(const model::MGTModel& model, const TrainConfig& cfg,
                    const data::Dataset& dataset, data::Split split) {
  dataset.validate();
  check_widths(model.config(), cfg.task, dataset);
  EvalReport report;
  report.split = std::string(data::to_string(split));
  report.metric = cfg.task == model::TaskKind::Regression ? "mae" : "ap";
  const auto samples = dataset.split(split);
  if (samples.empty()) throw Error("split \"" + report.split + "\" is empty");
  report.value = split_metric(model, cfg.task, samples);
  report.count = samples.size();
  report.seed = cfg.seed;
  report.config_hash = config_hash(cfg);
  return report;
}

std::string to_json(const EvalReport& report) {
  return json{{"split", report.split},
              {"metric", report.metric},
              {"value", report.value},
              {"count", report.count},
              {"seed", report.seed},
              {"config_hash", report.config_hash}}
             .dump(2);
}

ClusterExport export_clusters(const model::MGTModel& model, const Graph& graph) {
  nn::NoGradGuard no_grad;
  nn::ForwardContext ctx{nn::Mode::Eval, nullptr};
  const model::MGTOutput out = model.forward(graph, ctx);
  return ClusterExport{out.assignment.soft.to_matrix(), out.assignment.hard_labels};
}

std::string to_json(const ClusterExport& clusters) {
  json rows = json::array();
  for (std::size_t i = 0; i < clusters.soft.rows(); ++i) {
    auto row = clusters.soft.row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"n", clusters.soft.rows()},
              {"clusters", clusters.soft.cols()},
              {"soft", rows},
              {"labels", clusters.hard_labels}}
             .dump(2);
}

std::string export_embeddings(const model::MGTModel& model, const data::Dataset& dataset) {
  nn::NoGradGuard no_grad;
  nn::ForwardContext ctx{nn::Mode::Eval, nullptr};
  const std::size_t d = model.config().width();
  std::string out = "file,split";
  for (std::size_t j = 0; j < d; ++j) out += ",z" + std::to_string(j);
  out += "\n";
  for (const data::Sample& s : dataset.samples) {
    const model::MGTOutput result = model.forward(s.graph, ctx);
    const auto z = result.graph_embedding.data();
    out += s.file + "," + std::string(data::to_string(s.split));
    for (double v : z) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace mgt::train
