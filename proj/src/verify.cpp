#include "thnn/verify.hpp"

#include "thnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace thnn {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

DenseMatrix uniform_matrix(Index rows, Index cols, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Hyperedge random_edge(Index num_vertices, Index size, std::mt19937_64& rng) {
  std::vector<VertexId> all(static_cast<std::size_t>(num_vertices));
  std::iota(all.begin(), all.end(), VertexId{0});
  std::shuffle(all.begin(), all.end(), rng);
  Hyperedge e(all.begin(), all.begin() + size);
  std::sort(e.begin(), e.end());
  return e;
}

ThnnLayerParams random_layer(Index order, bool concat, bool inner_tanh, std::mt19937_64& rng) {
  const Index in = uniform_index(rng, 1, 5);
  const Index rank = uniform_index(rng, 1, 6);
  const Index out = uniform_index(rng, 1, 4);
  const Activation act = uniform_index(rng, 0, 1) ? Activation::kRelu : Activation::kIdentity;
  ThnnLayerParams p = init_thnn_layer(in, out, rank, order, act, rng, concat, inner_tanh);
  // Larger than Glorot so the inner tanh is exercised away from its linear range.
  p.theta = uniform_matrix(p.theta.rows(), p.theta.cols(), 1.0, rng);
  p.q = uniform_matrix(p.q.rows(), p.q.cols(), 1.0, rng);
  return p;
}

// Adds 0.5 to the entry whose first two indices are 0 and F-1.
WeightMutation planted_fault() {
  return [](DenseTensor& t) {
    Shape idx(t.shape().size(), 0);
    if (idx.size() > 2) idx[1] = t.dim(1) - 1;
    t(idx) += 0.5;
  };
}

SuiteResult gradient_suite(const std::string& name, const TrainConfig& config,
                           const Hypergraph& h, const FeatureDataset& data, int probes,
                           std::uint64_t seed) {
  const auto start = Clock::now();
  auto model = make_model(config, h, data.features.cols(), data.num_classes);
  SuiteResult r{name, probes, 0.0, 1e-5, 0.0};
  r.max_error = gradcheck(*model, data, probes, seed);
  r.seconds = elapsed(start);
  return r;
}

}  // namespace

Hypergraph random_uniform_hypergraph(Index order, Index max_vertices, std::mt19937_64& rng) {
  const Index n = uniform_index(rng, order, std::max(order, max_vertices));
  const Index tries = uniform_index(rng, 1, 6);
  std::set<Hyperedge> edges;
  for (Index t = 0; t < tries; ++t) edges.insert(random_edge(n, order, rng));
  return Hypergraph(n, {edges.begin(), edges.end()});
}

Hypergraph random_mixed_hypergraph(Index num_vertices, Index num_edges, Index max_order,
                                   std::mt19937_64& rng) {
  const Index top = std::min(max_order, num_vertices);
  std::set<Hyperedge> edges;
  for (Index t = 0; t < num_edges; ++t) {
    edges.insert(random_edge(num_vertices, uniform_index(rng, 2, top), rng));
  }
  return Hypergraph(num_vertices, {edges.begin(), edges.end()});
}

FeatureDataset random_dataset(Index num_vertices, Index dim, int num_classes,
                              std::mt19937_64& rng) {
  FeatureDataset d;
  d.features = uniform_matrix(num_vertices, dim, 1.0, rng);
  d.num_classes = num_classes;
  std::uniform_int_distribution<int> label(0, num_classes - 1);
  for (Index i = 0; i < num_vertices; ++i) {
    d.labels.push_back(label(rng));
    d.splits.push_back(static_cast<Split>(i % 3));
  }
  return d;
}

SuiteResult verify_equivalence(const VerifyOptions& opts) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opts.seed);
  const WeightMutation mutate = opts.plant_fault ? planted_fault() : WeightMutation{};
  SuiteResult r{"cp-equivalence", 0, 0.0, 1e-10, 0.0};
  for (Index k : opts.orders) {
    for (bool inner_tanh : {true, false}) {
      for (bool concat : {true, false}) {
        for (int i = 0; i < opts.equivalence_instances; ++i) {
          const Hypergraph h = random_uniform_hypergraph(k, 8, rng);
          const ThnnLayerParams p = random_layer(k, concat, inner_tanh, rng);
          const DenseMatrix x = uniform_matrix(h.num_vertices(), p.input_dim(), 1.0, rng);
          const DenseMatrix fast = forward_fast(h, x, p, h.degrees());
          const DenseMatrix naive = forward_naive(h, x, p, mutate);
          r.max_error = std::max(r.max_error, (fast - naive).cwiseAbs().maxCoeff());
          ++r.cases;
        }
      }
    }
  }
  r.seconds = elapsed(start);
  return r;
}

SuiteResult verify_symmetry(const VerifyOptions& opts) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opts.seed + 1);
  const WeightMutation mutate = opts.plant_fault ? planted_fault() : WeightMutation{};
  SuiteResult r{"partial-symmetry", 0, 0.0, 1e-12, 0.0};
  std::vector<Index> orders;
  for (Index k : opts.orders) {
    if (k >= 3) orders.push_back(k);
  }
  if (orders.empty()) orders.push_back(3);
  for (int probe = 0; probe < opts.symmetry_probes; ++probe) {
    const Index k = orders[static_cast<std::size_t>(probe) % orders.size()];
    const ThnnLayerParams p = random_layer(k, true, true, rng);
    DenseTensor w = reconstruct_full_weight(p);
    if (mutate) mutate(w);
    const DenseMatrix a = uniform_matrix(1, w.dim(0), 1.0, rng);
    const DenseMatrix b = uniform_matrix(1, w.dim(0), 1.0, rng);
    // W x_1 a x_2 b against W x_1 b x_2 a
    const DenseTensor ab = mode_n_product(mode_n_product(w, a, 0), b, 1);
    const DenseTensor ba = mode_n_product(mode_n_product(w, b, 0), a, 1);
    r.max_error = std::max(r.max_error, (ab.data() - ba.data()).cwiseAbs().maxCoeff());
    ++r.cases;
  }
  r.seconds = elapsed(start);
  return r;
}

SuiteResult verify_cancellation(const VerifyOptions& opts) {
  const auto start = Clock::now();
  std::mt19937_64 rng(opts.seed + 2);
  SuiteResult r{"normalization-cancellation", 0, 0.0, 1e-12, 0.0};
  for (int g = 0; g < opts.cancellation_graphs; ++g) {
    const Index k = opts.orders[static_cast<std::size_t>(g) % opts.orders.size()];
    const Hypergraph h = random_uniform_hypergraph(k, 7, rng);
    const Index n = h.num_vertices();
    const DenseTensor a = adjacency_tensor_dense(h, true, k);
    const DegreeVector d = h.degrees();
    const DenseMatrix x = uniform_matrix(n, 3, 1.0, rng);
    for (Index col = 0; col < x.cols(); ++col) {
      // Contract every neighbour mode of the tensor with the same feature column.
      DenseTensor t = a;
      const DenseMatrix xt = x.col(col).transpose();
      for (Index mode = 1; mode < k; ++mode) t = mode_n_product(t, xt, mode);
      // Per-hyperedge sum with coefficient c_e.
      DenseVector agg = DenseVector::Zero(n);
      for (const auto& e : h.edges()) {
        double c = 1.0;
        for (VertexId v : e) c *= std::pow(d[v], -1.0 / static_cast<double>(k));
        for (std::size_t pos = 0; pos < e.size(); ++pos) {
          double prod = c;
          for (std::size_t o = 0; o < e.size(); ++o) {
            if (o != pos) prod *= x(e[o], col);
          }
          agg[e[pos]] += prod;
        }
      }
      r.max_error = std::max(r.max_error, (t.data() - agg).cwiseAbs().maxCoeff());
    }
    ++r.cases;
  }
  r.seconds = elapsed(start);
  return r;
}

std::vector<SuiteResult> verify_gradients(const VerifyOptions& opts) {
  std::mt19937_64 rng(opts.seed + 3);
  std::set<Hyperedge> edges;
  while (edges.size() < 8) edges.insert(random_edge(12, 3, rng));
  const Hypergraph uniform(12, {edges.begin(), edges.end()});
  const Hypergraph mixed = random_mixed_hypergraph(12, 10, 4, rng);
  const FeatureDataset data = random_dataset(12, 3, 3, rng);

  TrainConfig base;
  base.rank = 4;
  base.hidden_dim = 5;
  base.layers = 2;
  base.seed = opts.seed;

  std::vector<SuiteResult> out;
  const int n = opts.gradcheck_probes;
  out.push_back(gradient_suite("gradcheck-thnn-uniform", base, uniform, data, n, opts.seed));
  TrainConfig c = base;
  c.nonuniform_mode = NonuniformMode::kGlobalNode;
  out.push_back(gradient_suite("gradcheck-thnn-global-node", c, mixed, data, n, opts.seed));
  c.nonuniform_mode = NonuniformMode::kMultiUniform;
  out.push_back(gradient_suite("gradcheck-thnn-multi-uniform", c, mixed, data, n, opts.seed));
  c = base;
  c.model = ModelKind::kHgnn;
  out.push_back(gradient_suite("gradcheck-hgnn", c, mixed, data, n, opts.seed));
  c.model = ModelKind::kGcn;
  out.push_back(gradient_suite("gradcheck-gcn", c, mixed, data, n, opts.seed));
  return out;
}

std::vector<SuiteResult> run_verification(const VerifyOptions& opts) {
  std::vector<SuiteResult> out{verify_equivalence(opts), verify_symmetry(opts),
                               verify_cancellation(opts)};
  for (auto& r : verify_gradients(opts)) out.push_back(std::move(r));
  return out;
}

}  // namespace thnn
