// Running THNN on hypergraphs with mixed hyperedge sizes.
#pragma once

#include "thnn/model.hpp"

#include <map>
#include <utility>

namespace thnn {

/// Pads every hyperedge with a new vertex (id = num_vertices) until all edges
/// have the maximum size. The padded vertex may appear several times in one
/// edge. Returns the augmented hypergraph and the global vertex id.
std::pair<Hypergraph, VertexId> augment_global(const Hypergraph& h);

/// Splits the edges by size; every part keeps the full vertex set.
std::map<Index, Hypergraph> partition_by_order(const Hypergraph& h);

/// THNN stack over the global-node augmentation, with a trainable feature row
/// for the added vertex. Only real vertices are returned as logits.
class GlobalNodeModel final : public Model {
 public:
  /// `shape.order` is ignored; the maximum edge size is used.
  GlobalNodeModel(const Hypergraph& h, StackShape shape, std::mt19937_64& rng);

  std::string_view kind() const override { return "thnn-global-node"; }
  Var forward(Tape& tape, Var x, std::span<const Var> params) const override;

  VertexId global_vertex() const { return global_vertex_; }
  const Hypergraph& augmented() const { return augmented_; }

 private:
  Hypergraph augmented_;
  VertexId global_vertex_ = 0;
  HyperedgeIndex index_;
  std::vector<ThnnLayerParams> layers_;
};

/// One THNN stack per edge size. Stack outputs are concatenated in ascending
/// order and mapped to logits by a trainable merge matrix.
class MultiUniformModel final : public Model {
 public:
  /// Every stack uses ReLU on all layers and emits `shape.hidden_dim` columns;
  /// `shape.output_dim` is the width after merging.
  MultiUniformModel(const Hypergraph& h, StackShape shape, std::mt19937_64& rng);

  std::string_view kind() const override { return "thnn-multi-uniform"; }
  Var forward(Tape& tape, Var x, std::span<const Var> params) const override;

  /// Per-stack indices for another hypergraph on the same vertices. Throws
  /// if `h` has an edge size without a stack.
  std::vector<HyperedgeIndex> index_for(const Hypergraph& h) const;

  /// Forward over caller-owned indices, which must outlive the tape.
  Var forward_indexed(const std::vector<HyperedgeIndex>& indices, Var x,
                      std::span<const Var> params) const;

  const std::vector<Index>& orders() const { return orders_; }

 private:
  std::vector<Index> orders_;
  std::vector<HyperedgeIndex> indices_;
  std::vector<std::vector<ThnnLayerParams>> layers_;
  Index num_vertices_ = 0;
};

/// Unrecorded multi-uniform forward on an arbitrary hypergraph.
DenseMatrix multi_uniform_forward(const MultiUniformModel& m, const Hypergraph& h,
                                  const DenseMatrix& x);

}  // namespace thnn
