// Self-checks of the layer implementation, shared by the CLI and the tests.
#pragma once

#include "thnn/build.hpp"
#include "thnn/thnn_layer.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace thnn {

struct SuiteResult {
  std::string name;
  int cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool passed() const { return cases > 0 && max_error < tolerance; }
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::vector<Index> orders{2, 3, 4};
  /// Random instances per (order, inner tanh, concat-1) combination.
  int equivalence_instances = 50;
  int symmetry_probes = 200;
  int cancellation_graphs = 20;
  int gradcheck_probes = 64;
  /// Negative control: corrupts one off-diagonal weight entry so the dense
  /// oracle no longer matches the factorized layer.
  bool plant_fault = false;
};

/// Random simple k-uniform hypergraph on at most `max_vertices` vertices.
Hypergraph random_uniform_hypergraph(Index order, Index max_vertices, std::mt19937_64& rng);

/// Random hypergraph with simple edges of sizes 2..max_order.
Hypergraph random_mixed_hypergraph(Index num_vertices, Index num_edges, Index max_order,
                                   std::mt19937_64& rng);

/// Random features, labels and splits with train and test both non-empty.
FeatureDataset random_dataset(Index num_vertices, Index dim, int num_classes,
                              std::mt19937_64& rng);

/// Fast path against the dense oracle (max abs difference).
SuiteResult verify_equivalence(const VerifyOptions& opts);
/// W x_1 a x_2 b against W x_1 b x_2 a for random a, b.
SuiteResult verify_symmetry(const VerifyOptions& opts);
/// Normalized adjacency tensor contracted with features on its neighbour modes
/// against the per-hyperedge sum weighted by c_e.
SuiteResult verify_cancellation(const VerifyOptions& opts);
/// Tape gradients of every model family against central differences.
std::vector<SuiteResult> verify_gradients(const VerifyOptions& opts);

std::vector<SuiteResult> run_verification(const VerifyOptions& opts);

}  // namespace thnn
