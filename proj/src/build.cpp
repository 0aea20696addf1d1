#include "thnn/build.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace thnn {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view token) {
  if (token == "train") return Split::kTrain;
  if (token == "val") return Split::kVal;
  if (token == "test") return Split::kTest;
  throw std::invalid_argument("unknown split token '" + std::string(token) + "'");
}

std::vector<Index> FeatureDataset::indices(Split s) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(static_cast<Index>(i));
  }
  return out;
}

void FeatureDataset::validate() const {
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n || splits.size() != n) {
    throw std::invalid_argument("dataset has " + std::to_string(n) + " feature rows, " +
                                std::to_string(labels.size()) + " labels and " +
                                std::to_string(splits.size()) + " split tokens");
  }
  if (num_classes < 1) throw std::invalid_argument("dataset needs at least one class");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
  if (!features.allFinite()) throw std::invalid_argument("dataset features are not finite");
  if (indices(Split::kTrain).empty()) throw std::invalid_argument("empty train split");
  if (indices(Split::kTest).empty()) throw std::invalid_argument("empty test split");
}

std::vector<VertexId> nearest_neighbors(const DenseMatrix& features, VertexId v, Index count) {
  const Index n = features.rows();
  std::vector<std::pair<double, VertexId>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (VertexId u = 0; u < n; ++u) {
    if (u != v) dist.emplace_back((features.row(u) - features.row(v)).squaredNorm(), u);
  }
  const auto take = static_cast<std::ptrdiff_t>(std::min<Index>(count, n - 1));
  std::partial_sort(dist.begin(), dist.begin() + take, dist.end());
  std::vector<VertexId> out;
  for (std::ptrdiff_t i = 0; i < take; ++i) out.push_back(dist[i].second);
  return out;
}

namespace {

void check_knn_args(const DenseMatrix& features, Index k) {
  if (k < 2) throw std::invalid_argument("k must be at least 2, got " + std::to_string(k));
  if (k > features.rows()) {
    throw std::invalid_argument("infeasible k=" + std::to_string(k) + " for " +
                                std::to_string(features.rows()) + " vertices");
  }
  if (!features.allFinite()) throw std::invalid_argument("features are not finite");
}

}  // namespace

Hypergraph knn_hypergraph(const DenseMatrix& features, Index k) {
  check_knn_args(features, k);
  std::vector<Hyperedge> edges;
  for (VertexId v = 0; v < features.rows(); ++v) {
    Hyperedge e = nearest_neighbors(features, v, k - 1);
    e.push_back(v);
    edges.push_back(std::move(e));
  }
  return Hypergraph::deduplicated(features.rows(), std::move(edges));
}

ProbabilisticIncidence probabilistic_incidence(const DenseMatrix& features, Index k) {
  check_knn_args(features, k);
  const Index n = features.rows();
  std::vector<std::vector<VertexId>> nn(static_cast<std::size_t>(n));
  double total = 0.0;
  Index count = 0;
  for (VertexId v = 0; v < n; ++v) {
    nn[v] = nearest_neighbors(features, v, k - 1);
    for (VertexId u : nn[v]) {
      total += (features.row(u) - features.row(v)).norm();
      ++count;
    }
  }
  const double mean = count ? total / static_cast<double>(count) : 0.0;
  if (!(mean > 0.0)) {
    throw std::invalid_argument("degenerate features: mean neighbour distance is zero");
  }
  ProbabilisticIncidence p{DenseMatrix::Zero(n, n)};
  for (VertexId v = 0; v < n; ++v) {
    p.values(v, v) = 1.0;
    for (VertexId u : nn[v]) {
      const double d2 = (features.row(u) - features.row(v)).squaredNorm();
      p.values(u, v) = std::exp(-d2 / (mean * mean));
    }
  }
  return p;
}

Hypergraph bernoulli_sample(const ProbabilisticIncidence& p, std::uint64_t seed) {
  const DenseMatrix& h = p.values;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Hyperedge> edges;
  for (Index col = 0; col < h.cols(); ++col) {
    Hyperedge e;
    for (Index row = 0; row < h.rows(); ++row) {
      const double prob = h(row, col);
      if (prob <= 0.0) continue;
      // Always draw so the stream position does not depend on earlier outcomes.
      const double u = unit(rng);
      if (u < prob) e.push_back(row);
    }
    if (e.size() >= 2) edges.push_back(std::move(e));
  }
  return Hypergraph::deduplicated(h.rows(), std::move(edges));
}

std::pair<Hypergraph, FeatureDataset> synthetic_highorder(Index num_vertices, Index order,
                                                          int num_classes, double noise,
                                                          std::uint64_t seed) {
  if (order < 3) throw std::invalid_argument("synthetic task needs order >= 3");
  if (num_vertices < 10 * order) {
    throw std::invalid_argument("synthetic task needs at least 10*order vertices");
  }
  if (num_vertices % order != 0) {
    throw std::invalid_argument("vertex count must be a multiple of the order");
  }
  if (num_classes < 2) throw std::invalid_argument("synthetic task needs at least 2 classes");
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw std::invalid_argument("noise must be finite and non-negative");
  }

  std::mt19937_64 rng(seed);
  std::vector<VertexId> perm(static_cast<std::size_t>(num_vertices));
  std::iota(perm.begin(), perm.end(), VertexId{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Hyperedge> edges;
  for (Index start = 0; start < num_vertices; start += order) {
    edges.emplace_back(perm.begin() + start, perm.begin() + start + order);
  }

  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<int> sign(static_cast<std::size_t>(num_vertices));
  for (auto& s : sign) s = coin(rng) ? 1 : -1;

  FeatureDataset data;
  data.num_classes = num_classes;
  data.features.resize(num_vertices, 1);
  for (Index v = 0; v < num_vertices; ++v) {
    const double eps = gauss(rng);
    data.features(v, 0) = sign[v] + noise * eps;
  }
  data.labels.assign(static_cast<std::size_t>(num_vertices), 0);
  for (const auto& e : edges) {
    int negatives = 0;
    for (VertexId u : e) negatives += sign[u] < 0;
    for (VertexId v : e) {
      const int others = negatives - (sign[v] < 0);
      data.labels[v] = others % num_classes;
    }
  }

  std::vector<VertexId> order_ids(static_cast<std::size_t>(num_vertices));
  std::iota(order_ids.begin(), order_ids.end(), VertexId{0});
  std::shuffle(order_ids.begin(), order_ids.end(), rng);
  data.splits.assign(static_cast<std::size_t>(num_vertices), Split::kTest);
  const Index n_train = num_vertices * 6 / 10;
  const Index n_val = num_vertices * 2 / 10;
  for (Index i = 0; i < num_vertices; ++i) {
    const Split s = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
    data.splits[order_ids[i]] = s;
  }
  return {Hypergraph(num_vertices, std::move(edges)), std::move(data)};
}

}  // namespace thnn
