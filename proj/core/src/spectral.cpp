// SPDX-License-Identifier: Apache-2.0

#include "mgt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mgt/error.hpp"

namespace mgt::spectral {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) acc += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(acc);
}

// Applies the rotation in the (p, q) plane that annihilates a(p, q).
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomposition eigendecompose(const Matrix& m, const JacobiOptions& options) {
  if (m.rows() != m.cols()) throw ShapeError("eigendecompose: matrix is not square");
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(std::abs(m(i, j) - m(j, i)) < 1e-12)) {
        throw NumericError("eigendecompose: matrix is not symmetric at (" + std::to_string(i) +
                           ", " + std::to_string(j) + ")");
      }
    }
  }

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  const double scale = std::max(1.0, frobenius_norm(a));
  bool converged = false;
  for (int sweep = 0; sweep <= options.max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= options.tolerance * scale) {
      converged = true;
      break;
    }
    if (sweep == options.max_sweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) != 0.0) rotate(a, v, p, q);
      }
    }
  }
  if (!converged) {
    throw NumericError("eigendecompose: no convergence after " +
                       std::to_string(options.max_sweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition eig;
  eig.eigenvalues.resize(n);
  eig.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    eig.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) eig.eigenvectors(i, j) = v(i, order[j]);
  }
  return eig;
}

Matrix wavelet_matrix(const EigenDecomposition& eig, double scale) {
  if (!(scale >= 0.0)) throw NumericError("wavelet_matrix: scale must be non-negative");
  const std::size_t n = eig.eigenvalues.size();
  const Matrix& u = eig.eigenvectors;
  std::vector<double> gain(n);
  for (std::size_t k = 0; k < n; ++k) gain[k] = std::exp(-scale * eig.eigenvalues[k]);

  Matrix psi(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += u(i, k) * gain[k] * u(j, k);
      psi(i, j) = acc;
      psi(j, i) = acc;
    }
  }
  return psi;
}

WaveletTensor wavelet_tensor(const Graph& g, std::span<const double> scales) {
  if (scales.empty()) throw ConfigError("wavelet_tensor: at least one scale is required");
  for (double s : scales) {
    if (!(s >= 0.0)) throw NumericError("wavelet_tensor: scales must be non-negative");
  }
  const EigenDecomposition eig = eigendecompose(normalized_laplacian(g));
  WaveletTensor out;
  out.scales.assign(scales.begin(), scales.end());
  out.matrices.reserve(scales.size());
  for (double s : scales) out.matrices.push_back(wavelet_matrix(eig, s));
  return out;
}

Matrix transition_matrix(const Graph& g) {
  const std::size_t n = g.num_nodes();
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = g.degree(i);
    if (d == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) p(i, j) = g.adjacency()(i, j) / d;
  }
  return p;
}

Matrix rwpe(const Graph& g, std::size_t steps) {
  if (steps == 0) throw ConfigError("rwpe: walk length must be at least 1");
  const std::size_t n = g.num_nodes();
  const Matrix p = transition_matrix(g);
  Matrix out(n, steps);
  Matrix power = p;
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) power = power * p;
    for (std::size_t i = 0; i < n; ++i) out(i, t) = power(i, i);
  }
  return out;
}

Matrix lappe(const Graph& g, std::size_t m) {
  const std::size_t n = g.num_nodes();
  if (m == 0 || m + 1 > n) {
    throw ConfigError("lappe: eigenvector count " + std::to_string(m) +
                      " outside [1, n-1] for n = " + std::to_string(n));
  }
  const EigenDecomposition eig = eigendecompose(normalized_laplacian(g));
  Matrix out(n, m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t col = c + 1;
    std::size_t lead = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(eig.eigenvectors(i, col)) > std::abs(eig.eigenvectors(lead, col)) + 1e-12) {
        lead = i;
      }
    }
    const double sign = eig.eigenvectors(lead, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out(i, c) = sign * eig.eigenvectors(i, col);
  }
  return out;
}

}  // namespace mgt::spectral
