// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mgt/matrix.hpp"
#include "mgt/rng.hpp"
#include "mgt/tensor.hpp"

// Differentiable operations. Matrices are rank-2 tensors [rows, cols]; all
// shape violations raise mgt::ShapeError.
namespace mgt::nn {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
/// a[m,n] + bias[n] broadcast over rows.
Tensor add_row_vector(const Tensor& a, const Tensor& bias);
/// a[m,n] * scale[n] broadcast over rows.
Tensor mul_row_vector(const Tensor& a, const Tensor& scale);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& a);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
/// Stacks matrices with equal column counts.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);

/// out[k,:] = a[index[k],:].
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
/// out[index[k],:] += a[k,:], out has `out_rows` rows.
Tensor scatter_add_rows(const Tensor& a, std::span<const std::size_t> index,
                        std::size_t out_rows);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Column-wise reductions over rows: [m,n] -> [1,n].
Tensor sum_rows(const Tensor& a);
Tensor mean_rows(const Tensor& a);
/// Column-wise max; the gradient goes to the first row attaining the max.
Tensor max_rows(const Tensor& a);

/// sqrt(sum of squares). The gradient at zero is taken as zero.
Tensor frobenius_norm(const Tensor& a);

/// (1/rows) * sum_i H(a[i,:]) with natural log, 0 log 0 = 0. Expects rows of
/// probabilities; zero entries get a zero gradient.
Tensor mean_row_entropy(const Tensor& probs);

/// Mean squared error against a constant target of the same shape.
Tensor mse_loss(const Tensor& pred, std::span<const double> target);
/// Mean binary cross-entropy over entries, computed from logits.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels);

struct BatchStats {
  std::vector<double> mean;
  std::vector<double> var;  // biased
};

/// Per-column standardization with batch statistics (no affine part).
Tensor batch_standardize(const Tensor& x, double eps, BatchStats* stats_out = nullptr);
/// Per-row standardization (no affine part).
Tensor layer_standardize(const Tensor& x, double eps);

/// Elementwise multiplication by a constant mask of 0 or 1/(1-rate).
Tensor dropout(const Tensor& x, double rate, Rng& rng);

}  // namespace mgt::nn
