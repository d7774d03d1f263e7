// SPDX-License-Identifier: Apache-2.0

#include "mgt/params.hpp"

#include <cmath>

#include "mgt/error.hpp"

namespace mgt::nn {

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<double> values,
                       bool trainable) {
  if (index_.count(name)) throw ConfigError("ParamStore: duplicate parameter name " + name);
  Tensor t = Tensor::parameter(std::move(shape), std::move(values));
  t.node()->requires_grad = trainable;
  index_.emplace(name, entries_.size());
  const std::size_t count = t.numel();
  entries_.push_back(Entry{name, t, trainable, std::vector<double>(count, 0.0),
                           std::vector<double>(count, 0.0)});
  return t;
}

Tensor ParamStore::add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                              Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, fan_in + fan_out)));
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = rng.uniform(-limit, limit);
  return add(name, {fan_in, fan_out}, std::move(values));
}

Tensor ParamStore::add_zeros(const std::string& name, Shape shape, bool trainable) {
  return add_filled(name, std::move(shape), 0.0, trainable);
}

Tensor ParamStore::add_filled(const std::string& name, Shape shape, double value, bool trainable) {
  const std::size_t count = numel(shape);
  return add(name, std::move(shape), std::vector<double>(count, value), trainable);
}

const ParamStore::Entry* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

ParamStore::Entry* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::size_t ParamStore::trainable_count() const {
  std::size_t total = 0;
  for (const Entry& e : entries_) {
    if (e.trainable) total += e.value.numel();
  }
  return total;
}

void ParamStore::zero_grad() {
  for (Entry& e : entries_) e.value.zero_grad();
}

void ParamStore::set_trainable_prefix(const std::string& prefix, bool trainable) {
  for (Entry& e : entries_) {
    if (e.name.rfind(prefix, 0) != 0) continue;
    // Running statistics stay frozen regardless.
    if (!e.trainable && !e.value.node()->requires_grad && e.name.find("running_") != std::string::npos) {
      continue;
    }
    e.trainable = trainable;
    e.value.node()->requires_grad = trainable;
  }
}

}  // namespace mgt::nn
