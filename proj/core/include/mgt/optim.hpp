// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mgt/params.hpp"

namespace mgt::optim {

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected adaptive-moment update of `params` in place, using and
/// updating the moment buffers. `step` is 1-based.
void adam_step(std::span<double> params, std::span<const double> grads,
               std::span<double> first_moment, std::span<double> second_moment,
               std::size_t step, const AdamOptions& options);

/// Applies adam_step to every trainable entry whose gradient is populated,
/// scaling gradients by `grad_scale` first.
class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(options) {}

  void step(nn::ParamStore& store, double grad_scale = 1.0);
  std::size_t steps_taken() const { return step_; }

 private:
  AdamOptions options_;
  std::size_t step_ = 0;
};

}  // namespace mgt::optim
