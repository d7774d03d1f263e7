// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mgt/graph.hpp"
#include "mgt/matrix.hpp"

namespace mgt::spectral {

/// Eigensystem of a real symmetric matrix: eigenvalues ascending, column j of
/// `eigenvectors` paired with eigenvalues[j].
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

/// Stack of heat-kernel wavelet matrices, one n x n slice per scale.
struct WaveletTensor {
  std::vector<double> scales;
  std::vector<Matrix> matrices;

  std::size_t num_nodes() const { return matrices.empty() ? 0 : matrices.front().rows(); }
  std::size_t num_scales() const { return scales.size(); }
};

struct JacobiOptions {
  double tolerance = 1e-12;
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigensolver. Requires max|M - M^T| < 1e-12 (ShapeError /
/// NumericError otherwise); throws NumericError when the sweep cap is hit.
EigenDecomposition eigendecompose(const Matrix& m, const JacobiOptions& options = {});

/// psi_s = U diag(exp(-s * lambda)) U^T. Throws NumericError for s < 0.
Matrix wavelet_matrix(const EigenDecomposition& eig, double scale);

/// One wavelet slice per scale from a single eigendecomposition of the
/// normalized Laplacian.
WaveletTensor wavelet_tensor(const Graph& g, std::span<const double> scales);

/// Scales used when none are configured.
inline const std::vector<double>& default_scales() {
  static const std::vector<double> scales{1.0, 2.0, 3.0, 4.0, 5.0};
  return scales;
}

/// Random-walk encoding: column t-1 is diag((D^-1 A)^t), t = 1..steps.
/// Isolated nodes get zero rows.
Matrix rwpe(const Graph& g, std::size_t steps);

/// Random-walk transition matrix D^-1 A (zero rows for isolated nodes).
Matrix transition_matrix(const Graph& g);

/// Laplacian eigenvector encoding: eigenvectors 1..m (skipping the first),
/// each flipped so its largest-magnitude entry (lowest index on ties) is
/// positive. The sign convention is deterministic but not permutation-stable.
/// Requires 1 <= m <= n - 1.
Matrix lappe(const Graph& g, std::size_t m);

}  // namespace mgt::spectral
