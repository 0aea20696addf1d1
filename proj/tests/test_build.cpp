#include "oracles.hpp"

#include "thnn/build.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace thnn;

namespace {

DenseMatrix points(std::initializer_list<double> xs) {
  DenseMatrix m(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

bool is_subset(const Hyperedge& small, const Hyperedge& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

TEST(Knn, LineExample) {
  const Hypergraph h = knn_hypergraph(points({0, 1, 10}), 2);
  EXPECT_EQ(h.edges(), (std::vector<Hyperedge>{{0, 1}, {1, 2}}));
}

TEST(Knn, FullNeighbourhoodCollapsesToOneEdge) {
  const Hypergraph h = knn_hypergraph(points({0, 3, 4, 9}), 4);
  EXPECT_EQ(h.edges(), (std::vector<Hyperedge>{{0, 1, 2, 3}}));
}

TEST(Knn, InfeasibleK) {
  EXPECT_THROW(knn_hypergraph(points({0, 1, 2}), 4), std::invalid_argument);
  EXPECT_THROW(knn_hypergraph(points({0, 1, 2}), 1), std::invalid_argument);
}

TEST(Knn, TiesBrokenByLowerId) {
  // Vertices 0 and 2 are both at distance 1 from vertex 1.
  EXPECT_EQ(nearest_neighbors(points({0, 1, 2}), 1, 1), (std::vector<VertexId>{0}));
}

TEST(Knn, AlwaysUniform) {
  std::mt19937_64 rng(1);
  for (Index k : {2, 3, 4, 6}) {
    const Hypergraph h = knn_hypergraph(oracle::random_matrix(30, 3, rng), k);
    EXPECT_EQ(is_uniform(h), k);
    EXPECT_LE(h.num_edges(), 30);
  }
}

TEST(ProbabilisticIncidence, ZeroDistanceGivesOne) {
  const ProbabilisticIncidence p = probabilistic_incidence(points({0, 0, 5}), 2);
  EXPECT_DOUBLE_EQ(p.values(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.values(0, 1), 1.0);
}

TEST(ProbabilisticIncidence, MeanDistanceGivesInverseE) {
  // Every centroid-neighbour distance is 1, so the mean is 1.
  const ProbabilisticIncidence p = probabilistic_incidence(points({0, 1}), 2);
  EXPECT_NEAR(p.values(1, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(p.values(0, 1), std::exp(-1.0), 1e-15);
}

TEST(ProbabilisticIncidence, CentroidEntryIsOne) {
  std::mt19937_64 rng(2);
  const ProbabilisticIncidence p = probabilistic_incidence(oracle::random_matrix(12, 2, rng), 4);
  for (Index v = 0; v < 12; ++v) EXPECT_EQ(p.values(v, v), 1.0);
}

TEST(ProbabilisticIncidence, BoundedAndMonotoneInDistance) {
  std::mt19937_64 rng(3);
  const DenseMatrix x = oracle::random_matrix(15, 3, rng);
  const ProbabilisticIncidence p = probabilistic_incidence(x, 5);
  for (Index e = 0; e < 15; ++e) {
    std::vector<std::pair<double, double>> dist_prob;
    Index count = 0;
    for (Index u = 0; u < 15; ++u) {
      const double v = p.values(u, e);
      if (v == 0.0) continue;
      ++count;
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
      dist_prob.emplace_back((x.row(u) - x.row(e)).norm(), v);
    }
    EXPECT_EQ(count, 5);
    std::sort(dist_prob.begin(), dist_prob.end());
    for (std::size_t i = 1; i < dist_prob.size(); ++i) {
      EXPECT_LE(dist_prob[i].second, dist_prob[i - 1].second);
    }
  }
}

TEST(ProbabilisticIncidence, DegenerateFeatures) {
  EXPECT_THROW(probabilistic_incidence(points({2, 2, 2}), 2), std::invalid_argument);
}

TEST(Bernoulli, AllOnesRecoversKnn) {
  std::mt19937_64 rng(4);
  const DenseMatrix x = oracle::random_matrix(20, 2, rng);
  ProbabilisticIncidence p = probabilistic_incidence(x, 3);
  p.values = (p.values.array() > 0.0).cast<double>();
  EXPECT_EQ(bernoulli_sample(p, 9), knn_hypergraph(x, 3));
}

TEST(Bernoulli, ZeroNeighboursDropsEverything) {
  ProbabilisticIncidence p{DenseMatrix::Identity(6, 6)};
  EXPECT_EQ(bernoulli_sample(p, 1).num_edges(), 0);
}

TEST(Bernoulli, DeterministicAndSubsetOfKnn) {
  std::mt19937_64 rng(5);
  const DenseMatrix x = oracle::random_matrix(40, 3, rng);
  const ProbabilisticIncidence p = probabilistic_incidence(x, 4);
  const Hypergraph a = bernoulli_sample(p, 7);
  EXPECT_EQ(a, bernoulli_sample(p, 7));
  EXPECT_NE(a, bernoulli_sample(p, 8));
  std::vector<Hyperedge> knn_edges;
  for (VertexId v = 0; v < 40; ++v) {
    Hyperedge e = nearest_neighbors(x, v, 3);
    e.push_back(v);
    std::sort(e.begin(), e.end());
    knn_edges.push_back(e);
  }
  for (const auto& e : a.edges()) {
    EXPECT_LE(e.size(), 4u);
    EXPECT_GE(e.size(), 2u);
    EXPECT_TRUE(std::any_of(knn_edges.begin(), knn_edges.end(),
                            [&](const Hyperedge& k) { return is_subset(e, k); }));
  }
}

TEST(Synthetic, NoiseFreeLabelsFollowGeneratingRule) {
  for (int classes : {2, 3}) {
    const auto [h, data] = synthetic_highorder(60, 3, classes, 0.0, 11);
    EXPECT_EQ(is_uniform(h), 3);
    EXPECT_EQ(h.num_edges(), 20);
    ASSERT_NO_THROW(data.validate());
    // Brute force: with no noise the feature is the latent sign.
    for (const auto& e : h.edges()) {
      for (VertexId v : e) {
        int negatives = 0;
        for (VertexId u : e) negatives += (u != v && data.features(u, 0) < 0) ? 1 : 0;
        EXPECT_EQ(data.labels[v], negatives % classes);
      }
    }
  }
}

TEST(Synthetic, TwoClassLabelIsNeighbourSignProduct) {
  const auto [h, data] = synthetic_highorder(90, 3, 2, 0.0, 3);
  std::map<int, int> seen;
  for (const auto& e : h.edges()) {
    for (VertexId v : e) {
      double prod = 1.0;
      for (VertexId u : e) prod *= u == v ? 1.0 : data.features(u, 0);
      EXPECT_EQ(data.labels[v], prod < 0 ? 1 : 0);
      ++seen[data.labels[v]];
    }
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Synthetic, SeededAndSplit) {
  const auto a = synthetic_highorder(60, 3, 2, 0.2, 5);
  const auto b = synthetic_highorder(60, 3, 2, 0.2, 5);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.second.features, synthetic_highorder(60, 3, 2, 0.2, 6).second.features);
  EXPECT_EQ(a.second.indices(Split::kTrain).size(), 36u);
  EXPECT_EQ(a.second.indices(Split::kVal).size(), 12u);
  EXPECT_EQ(a.second.indices(Split::kTest).size(), 12u);
}

TEST(Synthetic, InfeasibleSizes) {
  EXPECT_THROW(synthetic_highorder(60, 2, 2, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(synthetic_highorder(29, 3, 2, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(synthetic_highorder(31, 3, 2, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(synthetic_highorder(60, 3, 1, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(synthetic_highorder(60, 3, 2, -1.0, 0), std::invalid_argument);
}

TEST(Dataset, ValidateRejectsInconsistentData) {
  FeatureDataset d;
  d.features = DenseMatrix::Zero(3, 1);
  d.num_classes = 2;
  d.labels = {0, 1, 0};
  d.splits = {Split::kTrain, Split::kVal, Split::kTest};
  EXPECT_NO_THROW(d.validate());
  auto bad = d;
  bad.labels[1] = 2;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = d;
  bad.splits[2] = Split::kVal;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = d;
  bad.features(0, 0) = std::nan("");
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
