// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "mgt/model.hpp"

namespace mgt::train {

/// Everything needed to reproduce a training run.
struct TrainConfig {
  model::MGTConfig model;
  model::TaskKind task = model::TaskKind::Regression;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool freeze_wavelet_encoder = false;
  std::string dataset;
  std::string log_path;
  std::string checkpoint_path;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Parses the JSON config file format. Every key is optional and falls back
/// to the defaults above; unknown keys (at any level) raise ConfigError.
TrainConfig parse_config(std::string_view json);
TrainConfig load_config_file(const std::string& path);

/// Canonical JSON form (sorted keys, fixed formatting).
std::string to_json(const TrainConfig& cfg);

/// Copy with the output paths cleared. Checkpoints echo this form and the
/// hash covers it, so runs that differ only in where they write match.
TrainConfig run_identity(TrainConfig cfg);

/// FNV-1a 64 of the canonical JSON of run_identity(cfg), as 16 lowercase hex
/// digits.
std::string config_hash(const TrainConfig& cfg);

}  // namespace mgt::train
