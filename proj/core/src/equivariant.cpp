// SPDX-License-Identifier: Apache-2.0

#include "mgt/equivariant.hpp"

#include <algorithm>
#include <string>

#include "mgt/error.hpp"
#include "mgt/ops.hpp"

namespace mgt::equivariant {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t p = 1;
  for (std::size_t d : dims) p *= d;
  return p;
}

// Advances a row-major multi-index; returns false after the last one.
bool next_index(std::vector<std::size_t>& index, const std::vector<std::size_t>& dims) {
  for (std::size_t k = dims.size(); k-- > 0;) {
    if (++index[k] < dims[k]) return true;
    index[k] = 0;
  }
  return false;
}

}  // namespace

IndexedTensor::IndexedTensor(std::vector<std::size_t> dims_in, std::size_t channels_in, double fill)
    : dims(std::move(dims_in)), channels(channels_in), data(product(dims) * channels_in, fill) {}

IndexedTensor::IndexedTensor(std::vector<std::size_t> dims_in, std::size_t channels_in,
                             std::vector<double> values)
    : dims(std::move(dims_in)), channels(channels_in), data(std::move(values)) {
  if (data.size() != product(dims) * channels) throw ShapeError("IndexedTensor: size mismatch");
}

std::size_t IndexedTensor::offset(std::span<const std::size_t> index, std::size_t channel) const {
  if (index.size() != dims.size() || channel >= channels) {
    throw ShapeError("IndexedTensor: index rank mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (index[k] >= dims[k]) throw ShapeError("IndexedTensor: index out of range");
    flat = flat * dims[k] + index[k];
  }
  return flat * channels + channel;
}

IndexedTensor tensor_product(const IndexedTensor& a, const IndexedTensor& b) {
  std::vector<std::size_t> dims = a.dims;
  dims.insert(dims.end(), b.dims.begin(), b.dims.end());
  IndexedTensor c(std::move(dims), a.channels * b.channels);
  const std::size_t na = product(a.dims);
  const std::size_t nb = product(b.dims);
  std::size_t out = 0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      for (std::size_t ca = 0; ca < a.channels; ++ca) {
        for (std::size_t cb = 0; cb < b.channels; ++cb) {
          c.data[out++] = a.data[i * a.channels + ca] * b.data[j * b.channels + cb];
        }
      }
    }
  }
  return c;
}

IndexedTensor contract(const IndexedTensor& a, std::span<const std::size_t> axes) {
  if (axes.empty()) throw ShapeError("contract: no axes given");
  std::vector<bool> tied(a.order(), false);
  for (std::size_t ax : axes) {
    if (ax >= a.order()) {
      throw ShapeError("contract: axis " + std::to_string(ax) + " out of range for order " +
                       std::to_string(a.order()));
    }
    if (tied[ax]) throw ShapeError("contract: duplicate axis " + std::to_string(ax));
    if (a.dims[ax] != a.dims[axes.front()]) throw ShapeError("contract: tied axes differ in extent");
    tied[ax] = true;
  }
  std::vector<std::size_t> kept;
  std::vector<std::size_t> out_dims;
  for (std::size_t k = 0; k < a.order(); ++k) {
    if (!tied[k]) {
      kept.push_back(k);
      out_dims.push_back(a.dims[k]);
    }
  }
  const std::size_t extent = a.dims[axes.front()];
  IndexedTensor c(out_dims, a.channels);
  std::vector<std::size_t> out_index(out_dims.size(), 0);
  std::vector<std::size_t> full(a.order(), 0);
  std::size_t flat = 0;
  do {
    for (std::size_t k = 0; k < kept.size(); ++k) full[kept[k]] = out_index[k];
    for (std::size_t ch = 0; ch < a.channels; ++ch) {
      double acc = 0.0;
      for (std::size_t j = 0; j < extent; ++j) {
        for (std::size_t ax : axes) full[ax] = j;
        acc += a.at(full, ch);
      }
      c.data[flat * a.channels + ch] = acc;
    }
    ++flat;
  } while (!out_dims.empty() && next_index(out_index, out_dims));
  return c;
}

IndexedTensor permute(const IndexedTensor& t, const Permutation& sigma) {
  for (std::size_t d : t.dims) {
    if (d != sigma.size()) throw ShapeError("permute: axis extent differs from permutation length");
  }
  IndexedTensor out(t.dims, t.channels);
  if (t.data.empty()) return out;
  std::vector<std::size_t> index(t.order(), 0);
  std::vector<std::size_t> image(t.order(), 0);
  do {
    for (std::size_t k = 0; k < index.size(); ++k) image[k] = sigma(index[k]);
    for (std::size_t ch = 0; ch < t.channels; ++ch) out.at(image, ch) = t.at(index, ch);
  } while (!t.dims.empty() && next_index(index, t.dims));
  return out;
}

IndexedTensor SecondOrderTensor::to_indexed() const {
  return IndexedTensor({n, n}, channels(), std::vector<double>(data.data().begin(), data.data().end()));
}

SecondOrderTensor SecondOrderTensor::from_indexed(const IndexedTensor& t) {
  if (t.order() != 2 || t.dims[0] != t.dims[1]) {
    throw ShapeError("SecondOrderTensor: expected a square order-2 tensor");
  }
  return {t.dims[0], nn::Tensor::constant({t.dims[0] * t.dims[0], t.channels}, t.data)};
}

nn::Tensor pair_contractions(const Matrix& adjacency, const nn::Tensor& h, std::size_t n) {
  if (adjacency.rows() != n || adjacency.cols() != n) {
    throw ShapeError("pair_contractions: adjacency is not n x n");
  }
  if (h.rank() != 2 || h.rows() != n * n) {
    throw ShapeError("pair_contractions: tensor rows must be n * n");
  }
  const std::size_t c = h.cols();
  const std::size_t w = 6 * c;
  const Matrix& a = adjacency;
  auto hv = h.data();
  auto H = [&](std::size_t i, std::size_t j, std::size_t ch) { return hv[(i * n + j) * c + ch]; };

  double trace_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace_a += a(i, i);
  std::vector<double> trace_h(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) trace_h[ch] += H(i, i, ch);

  std::vector<double> out(n * n * w, 0.0);
  auto O = [&](std::size_t x, std::size_t y, std::size_t p, std::size_t ch) -> double& {
    return out[(x * n + y) * w + p * c + ch];
  };
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          s1 += a(j, x) * H(j, y, ch);  // {0,2}
          s2 += a(j, x) * H(y, j, ch);  // {0,3}
          s3 += a(x, j) * H(j, y, ch);  // {1,2}
          s4 += a(x, j) * H(y, j, ch);  // {1,3}
        }
        O(x, y, 0, ch) = trace_a * H(x, y, ch);
        O(x, y, 1, ch) = s1;
        O(x, y, 2, ch) = s2;
        O(x, y, 3, ch) = s3;
        O(x, y, 4, ch) = s4;
        O(x, y, 5, ch) = a(x, y) * trace_h[ch];
      }
    }
  }

  return nn::Tensor::make_result(
      {n * n, w}, std::move(out), {h}, [a, n, c, w, trace_a](nn::Tensor::Node& self) {
        auto& gh = self.parents[0]->grad_buffer();
        const auto& g = self.grad;
        auto G = [&](std::size_t x, std::size_t y, std::size_t p, std::size_t ch) {
          return g[(x * n + y) * w + p * c + ch];
        };
        auto dH = [&](std::size_t i, std::size_t j, std::size_t ch) -> double& {
          return gh[(i * n + j) * c + ch];
        };
        for (std::size_t ch = 0; ch < c; ++ch) {
          double diag = 0.0;
          for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) diag += a(x, y) * G(x, y, 5, ch);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              double acc = trace_a * G(i, j, 0, ch);
              for (std::size_t b = 0; b < n; ++b) {
                acc += a(i, b) * G(b, j, 1, ch);  // H(i,j) feeds {0,2} at (b, j)
                acc += a(j, b) * G(b, i, 2, ch);  // H(i,j) feeds {0,3} at (b, i)
                acc += a(b, i) * G(b, j, 3, ch);  // H(i,j) feeds {1,2} at (b, j)
                acc += a(b, j) * G(b, i, 4, ch);  // H(i,j) feeds {1,3} at (b, i)
              }
              if (i == j) acc += diag;
              dH(i, j, ch) += acc;
            }
          }
        }
      });
}

nn::Tensor first_order_reduction(const nn::Tensor& h, std::size_t n) {
  if (h.rank() != 2 || h.rows() != n * n) {
    throw ShapeError("first_order_reduction: tensor rows must be n * n");
  }
  const std::size_t c = h.cols();
  auto hv = h.data();
  std::vector<double> out(n * 3 * c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[i * 3 * c + ch] += hv[(i * n + j) * c + ch];
        out[j * 3 * c + c + ch] += hv[(i * n + j) * c + ch];
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) out[i * 3 * c + 2 * c + ch] = hv[(i * n + i) * c + ch];
  }
  return nn::Tensor::make_result({n, 3 * c}, std::move(out), {h}, [n, c](nn::Tensor::Node& self) {
    auto& gh = self.parents[0]->grad_buffer();
    const auto& g = self.grad;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = g[i * 3 * c + ch] + g[j * 3 * c + c + ch];
          if (i == j) acc += g[i * 3 * c + 2 * c + ch];
          gh[(i * n + j) * c + ch] += acc;
        }
      }
    }
  });
}

SecondOrderTensor second_order_mp_layer(const Matrix& adjacency, const SecondOrderTensor& h,
                                        const EquivariantLayerParams& params) {
  if (h.channels() * 6 != params.mix.in_features()) {
    throw ShapeError("second_order_mp_layer: layer expects " +
                     std::to_string(params.mix.in_features() / 6) + " channels, got " +
                     std::to_string(h.channels()));
  }
  nn::Tensor mixed = params.mix(pair_contractions(adjacency, h.data, h.n));
  if (params.gamma == Nonlinearity::Relu) mixed = nn::relu(mixed);
  return {h.n, mixed};
}

WaveletEncoderParams make_wavelet_encoder(nn::ParamStore& store, const std::string& name,
                                          std::size_t scales, std::size_t num_layers, Rng& rng) {
  WaveletEncoderParams params;
  for (std::size_t t = 0; t < num_layers; ++t) {
    EquivariantLayerParams layer;
    layer.mix = nn::Linear(store, name + ".layer" + std::to_string(t), 6 * scales, scales, rng);
    params.layers.push_back(layer);
  }
  params.reduce = nn::Linear(store, name + ".reduce", 3 * scales, scales, rng);
  return params;
}

SecondOrderTensor wavelet_channels(const spectral::WaveletTensor& wavelets) {
  const std::size_t n = wavelets.num_nodes();
  const std::size_t k = wavelets.num_scales();
  std::vector<double> values(n * n * k);
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) values[(i * n + j) * k + s] = wavelets.matrices[s](i, j);
  return {n, nn::Tensor::constant({n * n, k}, std::move(values))};
}

nn::Tensor encode_wavelets(const spectral::WaveletTensor& wavelets, const Matrix& adjacency,
                           const WaveletEncoderParams& params) {
  const std::size_t k = wavelets.num_scales();
  const std::size_t expected =
      params.layers.empty() ? params.reduce.in_features() / 3 : params.layers.front().in_channels();
  if (k != expected) {
    throw ShapeError("encode_wavelets: encoder expects " + std::to_string(expected) +
                     " scales, got " + std::to_string(k));
  }
  SecondOrderTensor h = wavelet_channels(wavelets);
  for (const EquivariantLayerParams& layer : params.layers) {
    h = second_order_mp_layer(adjacency, h, layer);
  }
  return params.reduce(first_order_reduction(h.data, h.n));
}

}  // namespace mgt::equivariant
