// Forward-pass timing of the factorized layer and parameter counts.
#pragma once

#include "thnn/thnn_layer.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace thnn {

struct BenchOptions {
  std::vector<Index> orders{3, 4};
  std::vector<Index> edges{100, 1000, 10000};
  Index rank = 128;
  Index dim = 128;  // input and output width
  /// Each point is timed at least this many times and for at least
  /// `min_seconds` in total; the median is reported.
  int min_repeats = 5;
  double min_seconds = 0.2;
  std::uint64_t seed = 0;
};

struct BenchRow {
  Index order = 0;
  Index num_edges = 0;
  Index num_vertices = 0;
  Index rank = 0;
  Index dim = 0;
  double seconds = 0.0;
  ParameterCount params;

  double param_ratio() const {
    return static_cast<double>(params.naive) / static_cast<double>(params.cp);
  }
};

/// Random k-uniform hypergraph with |V| = |E| (at least k) vertices.
Hypergraph bench_hypergraph(Index order, Index num_edges, std::uint64_t seed);

std::vector<BenchRow> run_bench(const BenchOptions& opts);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Slope of seconds against |E| for one order.
double time_slope(std::span<const BenchRow> rows, Index order);

/// order,edges,vertices,rank,dim,seconds,cp_params,naive_params,param_ratio
void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows);

}  // namespace thnn
