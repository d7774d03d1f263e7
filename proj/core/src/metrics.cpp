// SPDX-License-Identifier: Apache-2.0

#include "mgt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mgt/error.hpp"

namespace mgt::metrics {

double mae(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mae: prediction and target shapes differ");
  }
  if (pred.values().empty()) throw ShapeError("mae: no entries");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.values().size(); ++i) {
    total += std::abs(pred.values()[i] - target.values()[i]);
  }
  return total / static_cast<double>(pred.values().size());
}

double average_precision(const Matrix& scores, const Matrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw ShapeError("average_precision: score and label shapes differ");
  }
  const std::size_t m = scores.rows();
  double total = 0.0;
  std::size_t classes = 0;
  std::vector<std::size_t> order(m);
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(a, c) > scores(b, c); });
    std::size_t positives = 0;
    for (std::size_t i = 0; i < m; ++i) positives += labels(i, c) > 0.5 ? 1 : 0;
    if (positives == 0) continue;
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (labels(order[k], c) > 0.5) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
      }
    }
    total += ap / static_cast<double>(positives);
    ++classes;
  }
  if (classes == 0) throw Error("average_precision: no class has a positive label");
  return total / static_cast<double>(classes);
}

}  // namespace mgt::metrics
