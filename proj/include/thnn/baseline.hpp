// First-order baselines: HGNN convolution and GCN on the clique expansion.
#pragma once

#include "thnn/model.hpp"

namespace thnn {

/// Edge weights below this are clamped before normalization.
inline constexpr double kMinEdgeWeight = 1e-3;

struct HgnnLayerParams {
  DenseMatrix theta;         // I_in x I_out
  DenseMatrix edge_weights;  // |E| x 1, diagonal of W
};

HgnnLayerParams init_hgnn_layer(Index input_dim, Index output_dim, Index num_edges,
                                std::mt19937_64& rng);

/// Fixed incidence structure of a hypergraph for HGNN propagation.
struct HgnnOperator {
  SparseMatrix incidence;     // |V| x |E|, multiplicities
  DenseVector edge_degrees;   // column sums of the incidence
};

HgnnOperator make_hgnn_operator(const Hypergraph& h);

/// Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2} p with Dv = H w recomputed from the
/// clamped weights. Vertices with zero weighted degree produce zero rows.
/// `op` must outlive the tape.
Var hgnn_propagate(const HgnnOperator& op, Var p, Var edge_weights);

DenseMatrix hgnn_forward(const Hypergraph& h, const DenseMatrix& x, const HgnnLayerParams& p,
                         Activation activation);

/// D^{-1/2} (A [+ I]) D^{-1/2} of the clique expansion, D the row sums.
SparseMatrix gcn_operator(const Hypergraph& h, bool self_loops = true);

DenseMatrix gcn_on_clique(const Hypergraph& h, const DenseMatrix& x, const DenseMatrix& theta,
                          Activation activation = Activation::kIdentity, bool self_loops = true);

class HgnnModel final : public Model {
 public:
  HgnnModel(const Hypergraph& h, Index input_dim, Index hidden_dim, Index output_dim,
            Index layers, std::mt19937_64& rng);

  std::string_view kind() const override { return "hgnn"; }
  Var forward(Tape& tape, Var x, std::span<const Var> params) const override;

 private:
  HgnnOperator op_;
  Index layers_;
};

class GcnModel final : public Model {
 public:
  GcnModel(const Hypergraph& h, Index input_dim, Index hidden_dim, Index output_dim,
           Index layers, std::mt19937_64& rng);

  std::string_view kind() const override { return "gcn"; }
  Var forward(Tape& tape, Var x, std::span<const Var> params) const override;

 private:
  SparseMatrix op_;
  Index layers_;
};

}  // namespace thnn
