// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mgt/graph.hpp"
#include "mgt/layers.hpp"
#include "mgt/matrix.hpp"
#include "mgt/params.hpp"
#include "mgt/spectral.hpp"
#include "mgt/tensor.hpp"

namespace mgt::equivariant {

/// Dense tensor with `dims.size()` indexed axes followed by a trailing
/// feature-channel axis. Row-major; the channel index varies fastest.
struct IndexedTensor {
  std::vector<std::size_t> dims;
  std::size_t channels = 1;
  std::vector<double> data;

  IndexedTensor() = default;
  IndexedTensor(std::vector<std::size_t> dims, std::size_t channels, double fill = 0.0);
  IndexedTensor(std::vector<std::size_t> dims, std::size_t channels, std::vector<double> values);

  std::size_t order() const { return dims.size(); }
  std::size_t offset(std::span<const std::size_t> index, std::size_t channel = 0) const;
  double& at(std::span<const std::size_t> index, std::size_t channel = 0) {
    return data[offset(index, channel)];
  }
  double at(std::span<const std::size_t> index, std::size_t channel = 0) const {
    return data[offset(index, channel)];
  }
};

/// C_{i..., j...} = A_{i...} B_{j...}; channels combine as an outer product
/// (A's channel index major).
IndexedTensor tensor_product(const IndexedTensor& a, const IndexedTensor& b);

/// Ties every axis listed in `axes` to one summation index and sums it out:
/// one axis is a plain sum, two axes a trace. Remaining axes keep their
/// order. Throws ShapeError for empty, duplicate, out-of-range, or
/// unequal-extent axes.
IndexedTensor contract(const IndexedTensor& a, std::span<const std::size_t> axes);

/// Relabels every indexed axis: [sigma . T]_{i1..ik,c} = T_{sigma^-1(i1)..,c}.
IndexedTensor permute(const IndexedTensor& t, const Permutation& sigma);

/// Second-order tensor carried as an [n*n, channels] autodiff matrix with row
/// index i*n + j.
struct SecondOrderTensor {
  std::size_t n = 0;
  nn::Tensor data;

  std::size_t channels() const { return data.dim(1); }
  IndexedTensor to_indexed() const;
  static SecondOrderTensor from_indexed(const IndexedTensor& t);
};

/// The six pair contractions of the fourth-order product A (x) H, with A
/// constant. Output channel block p (of width c) holds the contraction over
/// the p-th pair in the order {0,1},{0,2},{0,3},{1,2},{1,3},{2,3}; the two
/// surviving axes keep their order. Differentiable in H.
nn::Tensor pair_contractions(const Matrix& adjacency, const nn::Tensor& h, std::size_t n);

/// First-order reduction of [n*n, c] to [n, 3c]: row sums, column sums, then
/// the diagonal.
nn::Tensor first_order_reduction(const nn::Tensor& h, std::size_t n);

enum class Nonlinearity { Identity, Relu };

/// Channel mixing map W_t (6c -> c_out) followed by gamma.
struct EquivariantLayerParams {
  nn::Linear mix;
  Nonlinearity gamma = Nonlinearity::Relu;

  std::size_t in_channels() const { return mix.in_features() / 6; }
  std::size_t out_channels() const { return mix.out_features(); }
};

/// H_t = gamma(W_t [ concat of the six pair contractions of A (x) H_{t-1} ]).
SecondOrderTensor second_order_mp_layer(const Matrix& adjacency, const SecondOrderTensor& h,
                                        const EquivariantLayerParams& params);

/// Layer stack plus the final first-order channel map (3c -> k).
struct WaveletEncoderParams {
  std::vector<EquivariantLayerParams> layers;
  nn::Linear reduce;
};

/// Registers a stack of `num_layers` k -> k layers and the 3k -> k reduction.
WaveletEncoderParams make_wavelet_encoder(nn::ParamStore& store, const std::string& name,
                                          std::size_t scales, std::size_t num_layers, Rng& rng);

/// Encodes the n x n x k wavelet stack into n x k node features. The wavelet
/// slices initialize the channels; messages use `adjacency`.
nn::Tensor encode_wavelets(const spectral::WaveletTensor& wavelets, const Matrix& adjacency,
                           const WaveletEncoderParams& params);

/// Wavelet slices as channels of a second-order tensor.
SecondOrderTensor wavelet_channels(const spectral::WaveletTensor& wavelets);

}  // namespace mgt::equivariant
