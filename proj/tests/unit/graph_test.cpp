// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "mgt/error.hpp"
#include "mgt/graph.hpp"
#include "support/test_support.hpp"

namespace mgt {
namespace {

TEST(LoadGraph, BuildsSymmetricAdjacency) {
  const Graph g = load_graph(R"({"nodes": [[1.0], [2.0]], "edges": [{"src": 0, "dst": 1, "feat": [0.5]}]})");
  EXPECT_EQ(g.num_nodes(), 2u);
  EXPECT_EQ(g.adjacency(), (Matrix{{0, 1}, {1, 0}}));
  EXPECT_EQ(g.node_features(), (Matrix{{1.0}, {2.0}}));
  EXPECT_EQ(g.edge_features(), (Matrix{{0.5}}));
  EXPECT_FALSE(g.target().has_value());
}

TEST(LoadGraph, ReadsTarget) {
  const Graph g = load_graph(R"({"nodes": [[1]], "edges": [], "target": [3.5, -1]})");
  ASSERT_TRUE(g.target().has_value());
  EXPECT_EQ(*g.target(), (std::vector<double>{3.5, -1.0}));
}

TEST(LoadGraph, RejectsSelfLoop) {
  try {
    load_graph(R"({"nodes": [[1], [2]], "edges": [{"src": 0, "dst": 0, "feat": []}]})");
    FAIL() << "self-loop accepted";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[0]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("self-loop"), std::string::npos) << e.what();
  }
}

TEST(LoadGraph, RejectsDuplicateUnorderedEdge) {
  try {
    load_graph(R"({"nodes": [[1], [2]], "edges": [{"src": 0, "dst": 1}, {"src": 1, "dst": 0}]})");
    FAIL() << "duplicate accepted";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[1]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos) << e.what();
  }
}

TEST(LoadGraph, RejectsOutOfRangeAndWidthMismatch) {
  EXPECT_THROW(load_graph(R"({"nodes": [[1], [2]], "edges": [{"src": 0, "dst": 2}]})"), GraphError);
  EXPECT_THROW(load_graph(R"({"nodes": [[1], [2, 3]], "edges": []})"), GraphError);
  EXPECT_THROW(load_graph(R"({"nodes": [[1], [2], [3]],
      "edges": [{"src": 0, "dst": 1, "feat": [1]}, {"src": 1, "dst": 2, "feat": [1, 2]}]})"),
               GraphError);
}

TEST(LoadGraph, RejectsMalformedDocuments) {
  EXPECT_THROW(load_graph("{"), GraphError);
  EXPECT_THROW(load_graph(R"({"edges": []})"), GraphError);
  EXPECT_THROW(load_graph(R"({"nodes": [[1]], "edges": [], "colour": 1})"), GraphError);
  EXPECT_THROW(load_graph(R"({"nodes": [[1]], "edges": [{"src": -1, "dst": 0}]})"), GraphError);
}

TEST(LoadGraph, SaveRoundTrips) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::random_graph(rng, 7, 0.4, 3, 2);
    EXPECT_EQ(load_graph(save_graph(g)), g);
  }
  const Graph with_target = Graph::create(Matrix{{1.0}, {2.0}}, {{0, 1}}, Matrix{{0.25}},
                                          std::nullopt, std::vector<double>{0.1, 0.2});
  EXPECT_EQ(load_graph(save_graph(with_target)), with_target);
}

TEST(Permutation, RejectsNonBijection) {
  EXPECT_THROW(Permutation({0, 0}), GraphError);
  EXPECT_THROW(Permutation({0, 2}), GraphError);
  const Permutation p({2, 0, 1});
  const Permutation inv = p.inverse();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(inv(p(i)), i);
}

TEST(ApplyPermutation, SwapOnTwoPath) {
  const Graph g = Graph::create(Matrix{{1.0}, {2.0}}, {{0, 1}}, Matrix(1, 0));
  const Graph h = apply_permutation(g, Permutation({1, 0}));
  EXPECT_EQ(h.node_features(), (Matrix{{2.0}, {1.0}}));
  EXPECT_EQ(h.adjacency(), g.adjacency());
}

TEST(ApplyPermutation, IdentityIsNoOp) {
  Rng rng(3);
  const Graph g = testing::random_graph(rng, 6, 0.5, 2, 1);
  EXPECT_EQ(apply_permutation(g, Permutation::identity(6)), g);
}

TEST(ApplyPermutation, RelabelsThreePath) {
  const Graph h = apply_permutation(testing::path_graph(3), Permutation({2, 0, 1}));
  // Edges {0,1} and {1,2} become {2,0} and {0,1}.
  EXPECT_EQ(h.adjacency(), (Matrix{{0, 1, 1}, {1, 0, 0}, {1, 0, 0}}));
  EXPECT_EQ(h.edges()[0], (Edge{2, 0}));
  EXPECT_EQ(h.edges()[1], (Edge{0, 1}));
}

TEST(ApplyPermutation, LengthMismatchThrows) {
  EXPECT_THROW(apply_permutation(testing::path_graph(3), Permutation::identity(2)), ShapeError);
}

TEST(NormalizedLaplacian, SmallGraphs) {
  EXPECT_EQ(normalized_laplacian(testing::path_graph(2)), (Matrix{{1, -1}, {-1, 1}}));
  const Matrix k3 = normalized_laplacian(testing::complete_graph(3));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(k3(i, j), i == j ? 1.0 : -0.5, 1e-15);
  EXPECT_EQ(normalized_laplacian(Graph::from_edges(1, {})), (Matrix{{0.0}}));
}

TEST(NormalizedLaplacian, IsolatedNodeRowIsZero) {
  const Matrix l = normalized_laplacian(Graph::from_edges(3, {{0, 1}}));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(l(2, j), 0.0);
    EXPECT_EQ(l(j, 2), 0.0);
  }
}

TEST(NormalizedLaplacian, PermutationConjugatesExactly) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 10));
    const Graph g = testing::random_graph(rng, n, 0.4);
    const Permutation sigma = testing::random_permutation(rng, n);
    EXPECT_EQ(normalized_laplacian(apply_permutation(g, sigma)),
              permute_square(normalized_laplacian(g), sigma));
  }
}

}  // namespace
}  // namespace mgt
