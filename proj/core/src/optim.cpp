// SPDX-License-Identifier: Apache-2.0

#include "mgt/optim.hpp"

#include <cmath>

#include "mgt/error.hpp"

namespace mgt::optim {

void adam_step(std::span<double> params, std::span<const double> grads,
               std::span<double> first_moment, std::span<double> second_moment,
               std::size_t step, const AdamOptions& options) {
  if (step == 0) throw ConfigError("adam_step: step counter is 1-based");
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw ShapeError("adam_step: buffer sizes differ");
  }
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_moment[i] = options.beta1 * first_moment[i] + (1.0 - options.beta1) * grads[i];
    second_moment[i] = options.beta2 * second_moment[i] + (1.0 - options.beta2) * grads[i] * grads[i];
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

void Adam::step(nn::ParamStore& store, double grad_scale) {
  ++step_;
  std::vector<double> scaled;
  for (auto& entry : store.entries()) {
    if (!entry.trainable) continue;
    auto grad = entry.value.grad();
    if (grad.empty()) continue;
    scaled.assign(grad.begin(), grad.end());
    for (double& g : scaled) g *= grad_scale;
    adam_step(entry.value.mutable_data(), scaled, entry.first_moment, entry.second_moment, step_,
              options_);
  }
}

}  // namespace mgt::optim
