// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgt/rng.hpp"
#include "mgt/tensor.hpp"

namespace mgt::nn {

/// Named tensors in registration order, plus per-entry optimizer slots.
/// Non-trainable entries (running statistics) are stored and checkpointed but
/// skipped by the optimizer.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable = true;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
  };

  /// Registers a tensor; throws ConfigError if the name is taken.
  Tensor add(const std::string& name, Shape shape, std::vector<double> values,
             bool trainable = true);

  /// Weight with entries uniform in +-sqrt(6 / (fan_in + fan_out)).
  Tensor add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor add_zeros(const std::string& name, Shape shape, bool trainable = true);
  Tensor add_filled(const std::string& name, Shape shape, double value, bool trainable = true);

  std::size_t size() const { return entries_.size(); }
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find(const std::string& name) const;
  Entry* find(const std::string& name);

  /// Scalar count over trainable entries.
  std::size_t trainable_count() const;

  void zero_grad();
  void set_trainable_prefix(const std::string& prefix, bool trainable);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace mgt::nn
