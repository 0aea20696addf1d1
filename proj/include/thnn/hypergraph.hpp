// Hypergraphs over vertex ids 0..n-1 with multiset hyperedges.
#pragma once

#include "thnn/tensor.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace thnn {

using VertexId = std::int64_t;
/// Sorted vertex multiset.
using Hyperedge = std::vector<VertexId>;

class HypergraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a normalization coefficient would divide by a zero degree.
class DegenerateDegreeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Per-vertex incidence counts (multiplicity included), stored as doubles.
using DegreeVector = DenseVector;

class Hypergraph {
 public:
  Hypergraph() = default;

  /// Sorts every hyperedge. Throws on out-of-range ids, edges smaller than 2,
  /// or exact duplicate edges.
  Hypergraph(Index num_vertices, std::vector<Hyperedge> edges);

  /// Like the constructor, but silently drops exact duplicates (first kept).
  static Hypergraph deduplicated(Index num_vertices, std::vector<Hyperedge> edges);

  Index num_vertices() const { return num_vertices_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Hyperedge>& edges() const { return edges_; }
  const Hyperedge& edge(Index i) const { return edges_.at(static_cast<std::size_t>(i)); }

  DegreeVector degrees() const;
  Index max_edge_size() const;

  friend bool operator==(const Hypergraph&, const Hypergraph&) = default;

 private:
  Index num_vertices_ = 0;
  std::vector<Hyperedge> edges_;
};

/// |V| x |E| matrix of vertex multiplicities.
DenseMatrix incidence_matrix(const Hypergraph& h);

/// The common edge size, or nullopt when sizes differ or there are no edges.
std::optional<Index> is_uniform(const Hypergraph& h);

/// Simple graph on the same vertices: every unordered pair of distinct
/// vertices sharing a hyperedge, deduplicated.
Hypergraph clique_expansion(const Hypergraph& h);

/// Order-k adjacency tensor of a k-uniform hypergraph, |V|^k entries.
/// Unnormalized entries are 1 at every index permutation of every edge;
/// normalized entries are 1/(k-1)! * prod_j d_{i_j}^{-1/k}. `order` must be
/// given for an edgeless hypergraph and must agree with the edges otherwise.
DenseTensor adjacency_tensor_dense(const Hypergraph& h, bool normalized,
                                   std::optional<Index> order = std::nullopt);

/// prod_{j in e} d_j^{-1/|e|}, counting multiplicity. This is the adjacency
/// tensor entry times the (k-1)! orderings of the other members.
double hyperedge_norm_coefficient(const Hyperedge& e, const DegreeVector& d);

}  // namespace thnn
