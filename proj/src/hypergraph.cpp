#include "thnn/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace thnn {

namespace {

void normalize_edges(Index n, std::vector<Hyperedge>& edges) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto& e = edges[i];
    if (e.size() < 2) {
      throw HypergraphError("hyperedge " + std::to_string(i) + " has " +
                            std::to_string(e.size()) + " vertices; at least 2 required");
    }
    for (VertexId v : e) {
      if (v < 0 || v >= n) {
        throw HypergraphError("hyperedge " + std::to_string(i) + " references vertex " +
                              std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
      }
    }
    std::sort(e.begin(), e.end());
  }
}

double factorial(Index k) {
  double f = 1.0;
  for (Index i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace

Hypergraph::Hypergraph(Index num_vertices, std::vector<Hyperedge> edges)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
  if (num_vertices_ < 0) throw HypergraphError("negative vertex count");
  normalize_edges(num_vertices_, edges_);
  std::set<Hyperedge> seen;
  for (const auto& e : edges_) {
    if (!seen.insert(e).second) throw HypergraphError("duplicate hyperedge");
  }
}

Hypergraph Hypergraph::deduplicated(Index num_vertices, std::vector<Hyperedge> edges) {
  if (num_vertices < 0) throw HypergraphError("negative vertex count");
  normalize_edges(num_vertices, edges);
  std::set<Hyperedge> seen;
  std::vector<Hyperedge> kept;
  for (auto& e : edges) {
    if (seen.insert(e).second) kept.push_back(std::move(e));
  }
  return Hypergraph(num_vertices, std::move(kept));
}

DegreeVector Hypergraph::degrees() const {
  DegreeVector d = DegreeVector::Zero(num_vertices_);
  for (const auto& e : edges_) {
    for (VertexId v : e) d[v] += 1.0;
  }
  return d;
}

Index Hypergraph::max_edge_size() const {
  Index m = 0;
  for (const auto& e : edges_) m = std::max(m, static_cast<Index>(e.size()));
  return m;
}

DenseMatrix incidence_matrix(const Hypergraph& h) {
  DenseMatrix m = DenseMatrix::Zero(h.num_vertices(), h.num_edges());
  for (Index j = 0; j < h.num_edges(); ++j) {
    for (VertexId v : h.edge(j)) m(v, j) += 1.0;
  }
  return m;
}

std::optional<Index> is_uniform(const Hypergraph& h) {
  if (h.num_edges() == 0) return std::nullopt;
  const auto k = static_cast<Index>(h.edge(0).size());
  for (const auto& e : h.edges()) {
    if (static_cast<Index>(e.size()) != k) return std::nullopt;
  }
  return k;
}

Hypergraph clique_expansion(const Hypergraph& h) {
  std::set<Hyperedge> pairs;
  for (const auto& e : h.edges()) {
    for (std::size_t a = 0; a < e.size(); ++a) {
      for (std::size_t b = a + 1; b < e.size(); ++b) {
        if (e[a] != e[b]) pairs.insert({e[a], e[b]});
      }
    }
  }
  return Hypergraph(h.num_vertices(), {pairs.begin(), pairs.end()});
}

double hyperedge_norm_coefficient(const Hyperedge& e, const DegreeVector& d) {
  const double k = static_cast<double>(e.size());
  double c = 1.0;
  for (VertexId v : e) {
    if (d[v] <= 0.0) {
      throw DegenerateDegreeError("vertex " + std::to_string(v) +
                                  " has zero degree inside a hyperedge");
    }
    c *= std::pow(d[v], -1.0 / k);
  }
  return c;
}

DenseTensor adjacency_tensor_dense(const Hypergraph& h, bool normalized,
                                   std::optional<Index> order) {
  auto k = is_uniform(h);
  if (!k && h.num_edges() > 0) {
    throw HypergraphError("adjacency tensor requires a uniform hypergraph");
  }
  if (k && order && *k != *order) {
    throw HypergraphError("hypergraph is " + std::to_string(*k) + "-uniform, expected order " +
                          std::to_string(*order));
  }
  if (!k) k = order;
  if (!k) throw HypergraphError("adjacency tensor of an edgeless hypergraph needs an order");
  const Shape shape(static_cast<std::size_t>(*k), h.num_vertices());
  check_dense_cap(shape, "adjacency_tensor_dense");

  DenseTensor a(shape);
  const DegreeVector d = h.degrees();
  const double inv_perm = 1.0 / factorial(*k - 1);
  for (const auto& e : h.edges()) {
    const double value = normalized ? inv_perm * hyperedge_norm_coefficient(e, d) : 1.0;
    Hyperedge idx = e;  // sorted, so next_permutation visits each distinct ordering once
    do {
      a(Shape(idx.begin(), idx.end())) = value;
    } while (std::next_permutation(idx.begin(), idx.end()));
  }
  return a;
}

}  // namespace thnn
