// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mgt/matrix.hpp"

namespace mgt::metrics {

/// Mean of |pred - target| over all entries. Throws ShapeError on mismatch.
double mae(const Matrix& pred, const Matrix& target);

/// Macro-averaged average precision. Rows are samples, columns classes. Per
/// class, samples are ranked by descending score (lower index first on ties)
/// and AP = sum over positive ranks k of precision@k / #positives. Classes
/// without positives are skipped; throws Error if no class has one.
double average_precision(const Matrix& scores, const Matrix& labels);

}  // namespace mgt::metrics
