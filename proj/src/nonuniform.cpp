#include "thnn/nonuniform.hpp"

#include <algorithm>
#include <string>

namespace thnn {

std::pair<Hypergraph, VertexId> augment_global(const Hypergraph& h) {
  if (h.num_edges() == 0) throw HypergraphError("augment_global needs at least one hyperedge");
  const Index k_max = h.max_edge_size();
  const VertexId g = h.num_vertices();
  std::vector<Hyperedge> edges;
  edges.reserve(static_cast<std::size_t>(h.num_edges()));
  for (const auto& e : h.edges()) {
    Hyperedge padded = e;
    padded.resize(static_cast<std::size_t>(k_max), g);
    edges.push_back(std::move(padded));
  }
  return {Hypergraph(h.num_vertices() + 1, std::move(edges)), g};
}

std::map<Index, Hypergraph> partition_by_order(const Hypergraph& h) {
  std::map<Index, std::vector<Hyperedge>> groups;
  for (const auto& e : h.edges()) groups[static_cast<Index>(e.size())].push_back(e);
  std::map<Index, Hypergraph> out;
  for (auto& [k, edges] : groups) out.emplace(k, Hypergraph(h.num_vertices(), std::move(edges)));
  return out;
}

GlobalNodeModel::GlobalNodeModel(const Hypergraph& h, StackShape shape, std::mt19937_64& rng) {
  std::tie(augmented_, global_vertex_) = augment_global(h);
  shape.order = augmented_.max_edge_size();
  index_ = make_hyperedge_index(augmented_, shape.order);
  layers_ = stack_layers(shape);
  auto values = init_stack_parameters(shape, rng);
  for (std::size_t i = 0; i < values.size(); ++i) {
    add_parameter(stack_parameter_name("", i), std::move(values[i]));
  }
  add_parameter("global_feature", glorot_uniform(1, shape.input_dim, rng));
}

Var GlobalNodeModel::forward(Tape&, Var x, std::span<const Var> params) const {
  if (x.rows() != global_vertex_) {
    throw DimensionError("global-node model expects " + std::to_string(global_vertex_) +
                         " feature rows, got " + std::to_string(x.rows()));
  }
  const Var augmented_x = ad::stack_rows(x, params.back());
  const Var out = thnn_stack_forward(index_, augmented_x, params.first(params.size() - 1),
                                     layers_);
  return ad::top_rows(out, global_vertex_);
}

MultiUniformModel::MultiUniformModel(const Hypergraph& h, StackShape shape,
                                     std::mt19937_64& rng)
    : num_vertices_(h.num_vertices()) {
  const auto parts = partition_by_order(h);
  if (parts.empty()) throw HypergraphError("multi-uniform model needs at least one hyperedge");
  const Index final_dim = shape.output_dim;
  shape.output_dim = shape.hidden_dim;
  shape.last_activation = Activation::kRelu;
  for (const auto& [k, sub] : parts) {
    orders_.push_back(k);
    shape.order = k;
    indices_.push_back(make_hyperedge_index(sub, k));
    layers_.push_back(stack_layers(shape));
    auto values = init_stack_parameters(shape, rng);
    for (std::size_t i = 0; i < values.size(); ++i) {
      add_parameter(stack_parameter_name("k" + std::to_string(k) + "_", i), std::move(values[i]));
    }
  }
  const Index merged = shape.hidden_dim * static_cast<Index>(orders_.size());
  add_parameter("merge", glorot_uniform(merged, final_dim, rng));
}

Var MultiUniformModel::forward_indexed(const std::vector<HyperedgeIndex>& indices, Var x,
                                       std::span<const Var> params) const {
  std::vector<Var> blocks;
  std::size_t offset = 0;
  for (std::size_t s = 0; s < orders_.size(); ++s) {
    const std::size_t count = 2 * layers_[s].size();
    blocks.push_back(thnn_stack_forward(indices[s], x, params.subspan(offset, count), layers_[s]));
    offset += count;
  }
  if (offset + 1 != params.size()) throw ArityError("multi-uniform parameter count mismatch");
  return ad::matmul(ad::concat_cols(blocks), params[offset]);
}

Var MultiUniformModel::forward(Tape&, Var x, std::span<const Var> params) const {
  return forward_indexed(indices_, x, params);
}

std::vector<HyperedgeIndex> MultiUniformModel::index_for(const Hypergraph& h) const {
  if (h.num_vertices() != num_vertices_) throw DimensionError("vertex count mismatch");
  auto parts = partition_by_order(h);
  for (const auto& [k, sub] : parts) {
    if (!std::binary_search(orders_.begin(), orders_.end(), k)) {
      throw HypergraphError("no THNN stack for hyperedges of size " + std::to_string(k));
    }
  }
  std::vector<HyperedgeIndex> indices;
  for (Index k : orders_) {
    auto it = parts.find(k);
    const Hypergraph sub = it != parts.end() ? it->second : Hypergraph(h.num_vertices(), {});
    indices.push_back(make_hyperedge_index(sub, k));
  }
  return indices;
}

DenseMatrix multi_uniform_forward(const MultiUniformModel& m, const Hypergraph& h,
                                  const DenseMatrix& x) {
  Tape tape;
  std::vector<Var> params;
  for (const auto& p : m.parameters()) params.push_back(tape.constant(p.value));
  const auto indices = m.index_for(h);
  return m.forward_indexed(indices, tape.constant(x), params).value();
}

}  // namespace thnn
