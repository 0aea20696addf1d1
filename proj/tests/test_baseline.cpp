#include "oracles.hpp"

#include "thnn/baseline.hpp"
#include "thnn/train.hpp"
#include "thnn/verify.hpp"

#include <gtest/gtest.h>

using namespace thnn;

namespace {

HgnnLayerParams identity_layer(Index dim, Index num_edges) {
  return {DenseMatrix::Identity(dim, dim), DenseMatrix::Ones(num_edges, 1)};
}

double max_abs(const DenseMatrix& a, const DenseMatrix& b) {
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.cols(), b.cols());
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Hgnn, SingleEdgeAveragesItsMembers) {
  const DenseMatrix y = hgnn_forward(Hypergraph(2, {{0, 1}}), DenseMatrix::Identity(2, 2),
                                     identity_layer(2, 1), Activation::kIdentity);
  EXPECT_LT(max_abs(y, DenseMatrix::Constant(2, 2, 0.5)), 1e-15);
}

TEST(Hgnn, ZeroFeaturesGiveZero) {
  std::mt19937_64 rng(1);
  const Hypergraph h(4, {{0, 1, 2}, {1, 3}});
  const DenseMatrix y = hgnn_forward(h, DenseMatrix::Zero(4, 3), init_hgnn_layer(3, 2, 2, rng),
                                     Activation::kRelu);
  EXPECT_EQ(y, DenseMatrix::Zero(4, 2));
}

TEST(Hgnn, MatchesPerVertexSummation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Hypergraph h = random_mixed_hypergraph(8, 6, 4, rng);
    HgnnLayerParams p;
    p.theta = oracle::random_matrix(3, 2, rng);
    p.edge_weights = oracle::random_matrix(h.num_edges(), 1, rng, 0.1, 2.0);
    const DenseMatrix x = oracle::random_matrix(8, 3, rng);
    const DenseMatrix expected = oracle::hgnn_aggregation(h, x, p.theta, p.edge_weights.col(0));
    EXPECT_LT(max_abs(hgnn_forward(h, x, p, Activation::kIdentity), expected), 1e-12);
  }
}

TEST(Hgnn, GraphCaseIsHalfOfGcnPlusIdentity) {
  // Simple graph, unit weights, no isolated vertices:
  // 2 * HGNN(X) = D^{-1/2} A D^{-1/2} X theta + X theta.
  std::mt19937_64 rng(3);
  const Hypergraph g(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 2}});
  HgnnLayerParams p{oracle::random_matrix(3, 2, rng), DenseMatrix::Ones(5, 1)};
  const DenseMatrix x = oracle::random_matrix(5, 3, rng);
  const DenseMatrix xt = oracle::matmul(x, p.theta);
  const DenseMatrix rhs = oracle::matmul(oracle::normalized_graph(g), xt) + xt;
  EXPECT_LT(max_abs(2.0 * hgnn_forward(g, x, p, Activation::kIdentity), rhs), 1e-12);
  EXPECT_LT(max_abs(gcn_on_clique(g, x, p.theta, Activation::kIdentity, false) + xt, rhs), 1e-12);
}

TEST(Hgnn, IsolatedVertexGivesZeroRow) {
  std::mt19937_64 rng(4);
  const DenseMatrix y = hgnn_forward(Hypergraph(4, {{0, 1, 2}}), oracle::random_matrix(4, 2, rng),
                                     identity_layer(2, 1), Activation::kIdentity);
  EXPECT_EQ(y.row(3), DenseMatrix::Zero(1, 2));
  EXPECT_TRUE(y.allFinite());
}

TEST(Hgnn, ClampsTinyEdgeWeights) {
  std::mt19937_64 rng(5);
  const Hypergraph h(4, {{0, 1}, {2, 3}});
  const DenseMatrix x = oracle::random_matrix(4, 2, rng);
  HgnnLayerParams p = identity_layer(2, 2);
  p.edge_weights(1, 0) = -3.0;
  const DenseMatrix y = hgnn_forward(h, x, p, Activation::kIdentity);
  EXPECT_TRUE(y.allFinite());
  p.edge_weights(1, 0) = kMinEdgeWeight;
  EXPECT_LT(max_abs(y, hgnn_forward(h, x, p, Activation::kIdentity)), 1e-15);
}

TEST(Gcn, IsolatedVertexKeepsItsOwnFeatures) {
  std::mt19937_64 rng(6);
  const DenseMatrix x = oracle::random_matrix(3, 2, rng);
  const DenseMatrix theta = oracle::random_matrix(2, 2, rng);
  const DenseMatrix y = gcn_on_clique(Hypergraph(3, {{0, 1}}), x, theta);
  EXPECT_LT(max_abs(y.row(2), oracle::matmul(x.row(2), theta)), 1e-15);
}

TEST(Gcn, GraphInputMatchesSelfLoopNormalization) {
  std::mt19937_64 rng(7);
  const Hypergraph g(5, {{0, 1}, {1, 2}, {1, 3}, {3, 4}});
  const DenseMatrix x = oracle::random_matrix(5, 3, rng);
  const DenseMatrix theta = oracle::random_matrix(3, 2, rng);
  const DenseMatrix expected =
      oracle::matmul(oracle::normalized_graph(g, true), oracle::matmul(x, theta));
  EXPECT_LT(max_abs(gcn_on_clique(g, x, theta), expected), 1e-12);
}

TEST(Gcn, TriangleAveragesAllMembers) {
  std::mt19937_64 rng(8);
  const DenseMatrix x = oracle::random_matrix(3, 2, rng);
  const DenseMatrix y = gcn_on_clique(Hypergraph(3, {{0, 1, 2}}), x, DenseMatrix::Identity(2, 2));
  for (Index i = 0; i < 3; ++i) EXPECT_LT(max_abs(y.row(i), x.colwise().mean()), 1e-15);
}

TEST(Baselines, Gradients) {
  std::mt19937_64 rng(9);
  const Hypergraph h = random_mixed_hypergraph(10, 8, 4, rng);
  const FeatureDataset data = random_dataset(10, 3, 3, rng);
  HgnnModel hgnn(h, 3, 4, 3, 2, rng);
  // Push some weights below the clamp so the masked branch is exercised.
  hgnn.parameters()[1].value(0, 0) = 1e-5;
  EXPECT_LT(gradcheck(hgnn, data, 64, 1), 1e-5);
  GcnModel gcn(h, 3, 4, 3, 2, rng);
  EXPECT_LT(gradcheck(gcn, data, 64, 2), 1e-5);
}

TEST(Baselines, LayerCountValidation) {
  std::mt19937_64 rng(10);
  const Hypergraph h(3, {{0, 1, 2}});
  EXPECT_THROW(HgnnModel(h, 2, 2, 2, 0, rng), std::invalid_argument);
  EXPECT_THROW(GcnModel(h, 2, 2, 2, 0, rng), std::invalid_argument);
  HgnnModel m(h, 2, 4, 3, 3, rng);
  EXPECT_EQ(m.parameters().size(), 6u);
  EXPECT_EQ(m.predict(DenseMatrix::Ones(3, 2)).cols(), 3);
}
