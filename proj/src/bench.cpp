#include "thnn/bench.hpp"

#include "thnn/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

namespace thnn {

Hypergraph bench_hypergraph(Index order, Index num_edges, std::uint64_t seed) {
  if (order < 2) throw std::invalid_argument("bench order must be at least 2");
  if (num_edges < 1) throw std::invalid_argument("bench edge count must be positive");
  const Index n = std::max(order + 1, num_edges);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<VertexId> pick(0, n - 1);
  std::set<Hyperedge> edges;
  while (static_cast<Index>(edges.size()) < num_edges) {
    Hyperedge e;
    while (static_cast<Index>(e.size()) < order) {
      const VertexId v = pick(rng);
      if (std::find(e.begin(), e.end(), v) == e.end()) e.push_back(v);
    }
    std::sort(e.begin(), e.end());
    edges.insert(std::move(e));
  }
  return Hypergraph(n, {edges.begin(), edges.end()});
}

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  if (opts.orders.empty() || opts.edges.empty()) {
    throw std::invalid_argument("bench needs at least one order and one edge count");
  }
  using Clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (Index k : opts.orders) {
    std::mt19937_64 rng(opts.seed);
    const ThnnLayerParams p =
        init_thnn_layer(opts.dim, opts.dim, opts.rank, k, Activation::kRelu, rng);
    for (Index m : opts.edges) {
      const Hypergraph h = bench_hypergraph(k, m, opts.seed);
      const HyperedgeIndex index = make_hyperedge_index(h, k);
      std::normal_distribution<double> normal;
      DenseMatrix x(h.num_vertices(), opts.dim);
      for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);

      std::vector<double> times;
      double total = 0.0;
      while (static_cast<int>(times.size()) < opts.min_repeats || total < opts.min_seconds) {
        const auto start = Clock::now();
        Tape tape;
        const Var out = forward_fast(index, tape.constant(x), tape.constant(p.theta),
                                     tape.constant(p.q), p);
        const double t = std::chrono::duration<double>(Clock::now() - start).count();
        if (!std::isfinite(out.value()(0, 0))) throw std::runtime_error("bench forward diverged");
        times.push_back(t);
        total += t;
      }
      std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
      rows.push_back({k, m, h.num_vertices(), opts.rank, opts.dim, times[times.size() / 2],
                      parameter_count(p)});
    }
  }
  return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope needs at least two paired points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope needs distinct x values");
  return sxy / sxx;
}

double time_slope(std::span<const BenchRow> rows, Index order) {
  std::vector<double> x, y;
  for (const auto& r : rows) {
    if (r.order != order) continue;
    x.push_back(static_cast<double>(r.num_edges));
    y.push_back(r.seconds);
  }
  return loglog_slope(x, y);
}

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "order,edges,vertices,rank,dim,seconds,cp_params,naive_params,param_ratio\n";
  for (const auto& r : rows) {
    os << r.order << ',' << r.num_edges << ',' << r.num_vertices << ',' << r.rank << ','
       << r.dim << ',' << format_double(r.seconds) << ',' << r.params.cp << ','
       << r.params.naive << ',' << format_double(r.param_ratio()) << '\n';
  }
}

}  // namespace thnn
