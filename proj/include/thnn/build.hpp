// Hypergraph construction from feature vectors and synthetic datasets.
#pragma once

#include "thnn/hypergraph.hpp"

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace thnn {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view split_name(Split s);
Split parse_split(std::string_view token);

/// Node features, labels and a train/val/test assignment for every vertex.
struct FeatureDataset {
  DenseMatrix features;     // |V| x D
  std::vector<int> labels;  // in [0, num_classes)
  int num_classes = 0;
  std::vector<Split> splits;

  Index num_vertices() const { return features.rows(); }
  std::vector<Index> indices(Split s) const;

  /// Throws std::invalid_argument when sizes disagree, a label is out of
  /// range, a feature is non-finite, or the train/test sets are empty.
  void validate() const;

  friend bool operator==(const FeatureDataset&, const FeatureDataset&) = default;
};

/// |V| x |V| matrix whose column v is the soft hyperedge centred on v.
struct ProbabilisticIncidence {
  DenseMatrix values;
};

/// Indices of the `count` nearest other vertices of `v` (Euclidean), ties
/// broken by lower id.
std::vector<VertexId> nearest_neighbors(const DenseMatrix& features, VertexId v, Index count);

/// One hyperedge per vertex: itself plus its k-1 nearest neighbours.
/// Duplicate hyperedges are merged; the result is k-uniform.
Hypergraph knn_hypergraph(const DenseMatrix& features, Index k);

/// Soft kNN incidence: exp(-d^2 / mean_d^2) for each neighbour, 1 for the
/// centroid itself, where mean_d averages every centroid-neighbour distance.
ProbabilisticIncidence probabilistic_incidence(const DenseMatrix& features, Index k);

/// Keeps every nonzero entry independently with its probability. Edges that
/// end up with fewer than 2 vertices are dropped, duplicates merged.
Hypergraph bernoulli_sample(const ProbabilisticIncidence& p, std::uint64_t seed);

/// A k-uniform hypergraph of disjoint hyperedges plus one scalar feature per
/// vertex, sign + noise * N(0,1). A vertex's label is the number of negative
/// latent signs among the other members of its hyperedge, modulo the class
/// count; for two classes this is the sign product of the k-1 neighbours.
/// Splits are a seeded 60/20/20 shuffle.
std::pair<Hypergraph, FeatureDataset> synthetic_highorder(Index num_vertices, Index order,
                                                          int num_classes, double noise,
                                                          std::uint64_t seed);

}  // namespace thnn
