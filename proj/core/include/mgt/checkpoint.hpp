// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mgt/config.hpp"
#include "mgt/model.hpp"
#include "mgt/params.hpp"

namespace mgt::train {

// Checkpoint byte layout (all integers little-endian, floats IEEE-754
// binary64 little-endian):
//
//   magic        8 bytes   "MGTCKPT\0"
//   version      u32       = 1
//   config_len   u64
//   config       config_len bytes, canonical TrainConfig JSON
//   entry_count  u64
//   entry_count times:
//     name_len   u32
//     name       name_len bytes
//     trainable  u8
//     count      u64
//     values     count * f64
//
// Entries follow ParamStore registration order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  bool trainable = true;
  std::vector<double> values;
};

struct Checkpoint {
  TrainConfig config;
  std::vector<CheckpointEntry> entries;
};

std::string encode_checkpoint(const TrainConfig& cfg, const nn::ParamStore& store);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     const nn::ParamStore& store);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds the model from the config echo and copies every entry in.
/// Throws ConfigError when names, order, or sizes disagree.
std::unique_ptr<model::MGTModel> restore_model(const Checkpoint& ckpt);

}  // namespace mgt::train
