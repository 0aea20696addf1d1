// Tensorized hypergraph layer.
//
// The weight tensor W of a layer is never stored; it is the partially
// symmetric CP form
//
//   W[i_1..i_{k-1}, o] = sum_r (prod_j theta[i_j, r]) * q[o, r]
//
// so a vertex's aggregated message is
//
//   pre_i = sum_{e containing i} q * tanh(c_e * (z_j1 * ... * z_j{k-1}))
//
// with z = theta^T [x; 1] and the product taken elementwise over the other
// k-1 members of e. forward_naive evaluates the same layer by materializing
// the normalized adjacency tensor and W, and exists only as an oracle.
#pragma once

#include "thnn/hypergraph.hpp"
#include "thnn/tape.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace thnn {

enum class Activation { kRelu, kIdentity };

struct ThnnLayerParams {
  DenseMatrix theta;  // (I_in + 1) x R, or I_in x R without concat-1
  DenseMatrix q;      // I_out x R
  Index order = 3;
  Activation activation_outer = Activation::kRelu;
  bool use_concat_one = true;
  bool use_inner_tanh = true;

  Index rank() const { return theta.cols(); }
  Index input_dim() const { return theta.rows() - (use_concat_one ? 1 : 0); }
  Index output_dim() const { return q.rows(); }

  /// Throws DimensionError/std::invalid_argument on inconsistent fields.
  void validate() const;
};

/// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
DenseMatrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng);

ThnnLayerParams init_thnn_layer(Index input_dim, Index output_dim, Index rank, Index order,
                                Activation activation, std::mt19937_64& rng,
                                bool use_concat_one = true, bool use_inner_tanh = true);

/// Hyperedges with their normalization coefficients, ready for the fast path.
struct HyperedgeIndex {
  Index num_vertices = 0;
  Index order = 0;
  std::vector<Hyperedge> edges;
  std::vector<double> coefficients;
};

/// Requires `h` to be uniform of `order` (an edgeless graph is accepted).
HyperedgeIndex make_hyperedge_index(const Hypergraph& h, Index order);
HyperedgeIndex make_hyperedge_index(const Hypergraph& h, Index order, const DegreeVector& d);

/// Appends a constant-1 column.
DenseMatrix concat_one(const DenseMatrix& x);

/// Dense W of shape F^{k-1} x I_out, F = theta.rows(). Oracle scale only.
DenseTensor reconstruct_full_weight(const ThnnLayerParams& p);

/// Dense theta-only part of W, shape F^{k-1} x R (q replaced by the identity).
DenseTensor reconstruct_projection_tensor(const ThnnLayerParams& p);

/// Hook applied to the dense weight (or, with inner tanh, projection) tensor
/// inside forward_naive. Used to plant faults for negative controls.
using WeightMutation = std::function<void(DenseTensor&)>;

/// Reference evaluation through the dense adjacency tensor.
DenseMatrix forward_naive(const Hypergraph& h, const DenseMatrix& x, const ThnnLayerParams& p,
                          const WeightMutation& mutate = {});

/// M[i] = sum over incident edges e of tanh(c_e * prod_{j in e minus one copy
/// of i} z[j]), visiting each distinct member of e once. `z` is |V| x R.
Var hyperedge_messages(const HyperedgeIndex& index, Var z, bool inner_tanh);

/// Recorded fast path. `theta` and `q` may be parameters or constants.
Var forward_fast(const HyperedgeIndex& index, Var x, Var theta, Var q,
                 const ThnnLayerParams& options);

/// Unrecorded fast path.
DenseMatrix forward_fast(const Hypergraph& h, const DenseMatrix& x, const ThnnLayerParams& p,
                         const DegreeVector& d);

struct ParameterCount {
  std::uint64_t cp = 0;
  std::uint64_t naive = 0;
};

/// CP parameters versus the dense weight tensor they replace.
ParameterCount parameter_count(const ThnnLayerParams& p);
ParameterCount parameter_count(Index input_dim, Index output_dim, Index rank, Index order);

Var apply_activation(Var v, Activation a);

}  // namespace thnn
