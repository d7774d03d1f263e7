// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "mgt/equivariant.hpp"
#include "mgt/error.hpp"
#include "mgt/ops.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

namespace mgt::equivariant {
namespace {

using testing::contract_oracle;

IndexedTensor random_indexed(Rng& rng, std::vector<std::size_t> dims, std::size_t channels) {
  IndexedTensor t(std::move(dims), channels);
  for (double& v : t.data) v = rng.normal();
  return t;
}

void set_values(const nn::Tensor& t, const std::vector<double>& values) {
  nn::Tensor handle = t;
  std::copy(values.begin(), values.end(), handle.mutable_data().begin());
}

SecondOrderTensor permute_second(const SecondOrderTensor& h, const Permutation& sigma) {
  return SecondOrderTensor::from_indexed(permute(h.to_indexed(), sigma));
}

TEST(TensorProduct, Vectors) {
  const IndexedTensor c = tensor_product(IndexedTensor({2}, 1, {1, 2}), IndexedTensor({2}, 1, {3, 4}));
  EXPECT_EQ(c.dims, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(c.data, (std::vector<double>{3, 4, 6, 8}));
}

TEST(TensorProduct, ZeroFactorGivesZero) {
  Rng rng(1);
  const IndexedTensor c = tensor_product(random_indexed(rng, {3, 2}, 2), IndexedTensor({4}, 1, 0.0));
  for (double v : c.data) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(c.channels, 2u);
}

TEST(TensorProduct, IdentityTimesScalar) {
  const IndexedTensor c = tensor_product(IndexedTensor({2, 2}, 1, {1, 0, 0, 1}), IndexedTensor({1}, 1, {5}));
  EXPECT_EQ(c.order(), 3u);
  const std::array<std::size_t, 3> i00{0, 0, 0}, i01{0, 1, 0}, i11{1, 1, 0};
  EXPECT_EQ(c.at(i00), 5.0);
  EXPECT_EQ(c.at(i01), 0.0);
  EXPECT_EQ(c.at(i11), 5.0);
}

TEST(TensorProduct, ChannelsFormOuterProduct) {
  const IndexedTensor c = tensor_product(IndexedTensor({1}, 2, {1, 2}), IndexedTensor({1}, 2, {10, 20}));
  EXPECT_EQ(c.channels, 4u);
  EXPECT_EQ(c.data, (std::vector<double>{10, 20, 20, 40}));
}

TEST(Contract, TraceOfMatrix) {
  const std::array<std::size_t, 2> both{0, 1};
  EXPECT_EQ(contract(IndexedTensor({2, 2}, 1, {1, 2, 3, 4}), both).data, (std::vector<double>{5}));
  EXPECT_EQ(contract(IndexedTensor({4, 4}, 1, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}), both).data,
            (std::vector<double>{4}));
}

TEST(Contract, OrderThreeDiagonalSum) {
  Rng rng(2);
  const IndexedTensor t = random_indexed(rng, {3, 3, 2}, 2);
  const std::array<std::size_t, 2> axes{0, 1};
  const IndexedTensor c = contract(t, axes);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t ch = 0; ch < 2; ++ch) {
      double expected = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        const std::array<std::size_t, 3> idx{i, i, k};
        expected += t.at(idx, ch);
      }
      const std::array<std::size_t, 1> out{k};
      EXPECT_EQ(c.at(out, ch), expected);
    }
  }
}

TEST(Contract, MatchesBruteForceExactly) {
  Rng rng(3);
  const std::vector<std::vector<std::size_t>> axis_sets{{0}, {1}, {0, 1}, {0, 2}, {1, 3}, {2, 3},
                                                         {0, 1, 2}, {1, 2, 3}, {0, 1, 2, 3}};
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t order = 1; order <= 4; ++order) {
      const IndexedTensor t = random_indexed(rng, std::vector<std::size_t>(order, n), 2);
      for (const auto& axes : axis_sets) {
        if (axes.back() >= order) continue;
        EXPECT_EQ(contract(t, axes).data, contract_oracle(t, axes).data)
            << "n=" << n << " order=" << order;
      }
    }
  }
}

TEST(Contract, RejectsBadAxes) {
  const IndexedTensor t({2, 2, 3}, 1);
  EXPECT_THROW(contract(t, std::vector<std::size_t>{}), ShapeError);
  EXPECT_THROW(contract(t, std::vector<std::size_t>{0, 0}), ShapeError);
  EXPECT_THROW(contract(t, std::vector<std::size_t>{3}), ShapeError);
  EXPECT_THROW(contract(t, std::vector<std::size_t>{1, 2}), ShapeError);
}

TEST(Equivariance, ProductAndContraction) {
  Rng rng(4);
  const std::vector<std::vector<std::size_t>> axis_sets{{0, 1}, {0, 3}, {1, 2}, {2, 3}, {0}, {1, 2, 3}};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 3));
    const Permutation sigma = testing::random_permutation(rng, n);
    const IndexedTensor a = random_indexed(rng, {n, n}, 1);
    const IndexedTensor b = random_indexed(rng, {n, n}, 2);
    const IndexedTensor ab = tensor_product(a, b);
    const IndexedTensor ab_sigma = tensor_product(permute(a, sigma), permute(b, sigma));
    const IndexedTensor expected = permute(ab, sigma);
    for (std::size_t i = 0; i < ab.data.size(); ++i) EXPECT_NEAR(ab_sigma.data[i], expected.data[i], 1e-9);
    for (const auto& axes : axis_sets) {
      const IndexedTensor lhs = contract(ab_sigma, axes);
      const IndexedTensor rhs = permute(contract(ab, axes), sigma);
      for (std::size_t i = 0; i < lhs.data.size(); ++i) EXPECT_NEAR(lhs.data[i], rhs.data[i], 1e-9);
    }
  }
}

TEST(PairContractions, MatchProductThenContract) {
  Rng rng(5);
  const std::vector<std::array<std::size_t, 2>> pairs{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (std::size_t n = 1; n <= 4; ++n) {
    const Matrix a = testing::random_matrix(rng, n, n);
    const IndexedTensor h = random_indexed(rng, {n, n}, 3);
    const IndexedTensor a_t({n, n}, 1, a.values());
    const IndexedTensor product = tensor_product(a_t, h);
    const nn::Tensor got = pair_contractions(a, SecondOrderTensor::from_indexed(h).data, n);
    ASSERT_EQ(got.cols(), 18u);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const IndexedTensor want = contract(product, pairs[p]);
      for (std::size_t i = 0; i < n * n; ++i)
        for (std::size_t c = 0; c < 3; ++c)
          EXPECT_NEAR(got.at(i, p * 3 + c), want.data[i * 3 + c], 1e-12) << "pair " << p;
    }
  }
}

TEST(SecondOrderLayer, SingleNodeSumsSixCopies) {
  nn::ParamStore store;
  Rng rng(6);
  EquivariantLayerParams params{nn::Linear(store, "mix", 6, 1, rng), Nonlinearity::Identity};
  set_values(params.mix.weight(), std::vector<double>(6, 1.0));
  set_values(params.mix.bias(), {0.0});
  const double a = 1.5, h = -0.75;
  const SecondOrderTensor out =
      second_order_mp_layer(Matrix{{a}}, {1, nn::Tensor::constant({1, 1}, {h})}, params);
  EXPECT_NEAR(out.data.item(), 6 * a * h, 1e-15);
}

TEST(SecondOrderLayer, ChannelCountAndShapeErrors) {
  nn::ParamStore store;
  Rng rng(7);
  EquivariantLayerParams params{nn::Linear(store, "mix", 18, 2, rng), Nonlinearity::Relu};
  EXPECT_EQ(params.in_channels(), 3u);
  Rng data(8);
  const SecondOrderTensor h{4, testing::random_parameter(data, {16, 3})};
  const SecondOrderTensor out = second_order_mp_layer(testing::random_matrix(data, 4, 4), h, params);
  EXPECT_EQ(out.data.shape(), (nn::Shape{16, 2}));
  EXPECT_THROW(second_order_mp_layer(testing::random_matrix(data, 3, 3), h, params), ShapeError);
}

TEST(SecondOrderLayer, PermutationEquivariance) {
  nn::ParamStore store;
  Rng rng(9);
  EquivariantLayerParams params{nn::Linear(store, "mix", 12, 3, rng), Nonlinearity::Relu};
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5;
    const Graph g = testing::random_graph(rng, n, 0.5);
    const SecondOrderTensor h{n, testing::random_parameter(rng, {n * n, 2})};
    const Permutation sigma = testing::random_permutation(rng, n);
    const SecondOrderTensor lhs = second_order_mp_layer(permute_square(g.adjacency(), sigma),
                                                        permute_second(h, sigma), params);
    const SecondOrderTensor rhs = permute_second(second_order_mp_layer(g.adjacency(), h, params), sigma);
    for (std::size_t i = 0; i < lhs.data.numel(); ++i) EXPECT_NEAR(lhs.data.data()[i], rhs.data.data()[i], 1e-10);
  }
}

TEST(FirstOrderReduction, RowColumnDiagonal) {
  const nn::Tensor h = nn::Tensor::constant({4, 1}, {1, 2, 3, 4});  // [[1,2],[3,4]]
  const nn::Tensor r = first_order_reduction(h, 2);
  EXPECT_EQ(r.shape(), (nn::Shape{2, 3}));
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()),
            (std::vector<double>{3, 4, 1, 7, 6, 4}));
}

TEST(EncodeWavelets, IdentitySliceFeatures) {
  const spectral::WaveletTensor w = spectral::wavelet_tensor(testing::path_graph(3), std::vector<double>{0.0});
  const nn::Tensor reduced = first_order_reduction(wavelet_channels(w).data, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(reduced.at(i, c), 1.0, 1e-10);

  nn::ParamStore store;
  Rng rng(10);
  WaveletEncoderParams params = make_wavelet_encoder(store, "enc", 1, 0, rng);
  set_values(params.reduce.weight(), {0.0, 0.0, 1.0});
  set_values(params.reduce.bias(), {0.0});
  const nn::Tensor p = encode_wavelets(w, testing::path_graph(3).adjacency(), params);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.at(i, 0), 1.0, 1e-10);
}

TEST(EncodeWavelets, ShapeAndEquivariance) {
  nn::ParamStore store;
  Rng rng(11);
  const WaveletEncoderParams params = make_wavelet_encoder(store, "enc", 5, 2, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 6));
    const Graph g = testing::random_graph(rng, n, 0.4);
    const Permutation sigma = testing::random_permutation(rng, n);
    const nn::Tensor p = encode_wavelets(spectral::wavelet_tensor(g, spectral::default_scales()),
                                         g.adjacency(), params);
    ASSERT_EQ(p.shape(), (nn::Shape{n, 5}));
    const Graph gs = apply_permutation(g, sigma);
    const nn::Tensor ps = encode_wavelets(spectral::wavelet_tensor(gs, spectral::default_scales()),
                                          gs.adjacency(), params);
    EXPECT_LT(max_abs_diff(ps.to_matrix(), permute_rows(p.to_matrix(), sigma)), 1e-9);
  }
}

TEST(Gradients, PairContractionsAndReduction) {
  Rng rng(12);
  for (std::size_t n : {1u, 2u, 4u}) {
    const Matrix a = testing::random_matrix(rng, n, n);
    nn::Tensor h = testing::random_parameter(rng, {n * n, 2});
    const nn::Tensor w6 = testing::weights_like(rng, pair_contractions(a, h, n));
    EXPECT_LT(testing::gradient_error([&] { return nn::sum(nn::mul(pair_contractions(a, h, n), w6)); }, h), 1e-4);
    const nn::Tensor w3 = testing::weights_like(rng, first_order_reduction(h, n));
    EXPECT_LT(testing::gradient_error([&] { return nn::sum(nn::mul(first_order_reduction(h, n), w3)); }, h), 1e-4);
  }
}

TEST(Gradients, EncodeWaveletsParameters) {
  nn::ParamStore store;
  Rng rng(13);
  const WaveletEncoderParams params = make_wavelet_encoder(store, "enc", 3, 2, rng);
  testing::randomize_biases(store, rng);
  const Graph g = testing::random_connected_graph(rng, 5, 0.3);
  const auto w = spectral::wavelet_tensor(g, std::vector<double>{0.5, 1.0, 2.0});
  const nn::Tensor weights = testing::weights_like(rng, encode_wavelets(w, g.adjacency(), params));
  const auto loss = [&] { return nn::sum(nn::mul(encode_wavelets(w, g.adjacency(), params), weights)); };
  EXPECT_LT(testing::store_gradient_error(loss, store), 1e-4);
}

}  // namespace
}  // namespace mgt::equivariant
