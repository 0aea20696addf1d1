#include "thnn/model.hpp"

namespace thnn {

std::size_t Model::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

DenseMatrix Model::predict(const DenseMatrix& x) const {
  Tape tape;
  std::vector<Var> params;
  for (const auto& p : params_) params.push_back(tape.constant(p.value));
  return forward(tape, tape.constant(x), params).value();
}

void Model::add_parameter(std::string name, DenseMatrix value) {
  params_.push_back({std::move(name), std::move(value)});
}

std::vector<Var> bind_parameters(Tape& tape, const Model& m) {
  std::vector<Var> vars;
  for (const auto& p : m.parameters()) vars.push_back(tape.parameter(p.value));
  return vars;
}

std::vector<ThnnLayerParams> stack_layers(const StackShape& shape) {
  if (shape.layers < 1) throw std::invalid_argument("a THNN stack needs at least one layer");
  if (shape.rank < 1) throw std::invalid_argument("THNN rank must be at least 1");
  std::vector<ThnnLayerParams> layers;
  for (Index l = 0; l < shape.layers; ++l) {
    const bool last = l + 1 == shape.layers;
    ThnnLayerParams p;
    p.order = shape.order;
    p.activation_outer = last ? shape.last_activation : Activation::kRelu;
    p.use_concat_one = shape.use_concat_one;
    p.use_inner_tanh = shape.use_inner_tanh;
    layers.push_back(std::move(p));
  }
  return layers;
}

Var thnn_stack_forward(const HyperedgeIndex& index, Var x, std::span<const Var> params,
                       const std::vector<ThnnLayerParams>& layers) {
  if (params.size() != 2 * layers.size()) {
    throw ArityError("THNN stack expects two parameters per layer");
  }
  Var h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    h = forward_fast(index, h, params[2 * l], params[2 * l + 1], layers[l]);
  }
  return h;
}

std::vector<DenseMatrix> init_stack_parameters(const StackShape& shape, std::mt19937_64& rng) {
  const auto layers = stack_layers(shape);
  std::vector<DenseMatrix> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Index in = l == 0 ? shape.input_dim : shape.hidden_dim;
    const Index width = l + 1 == layers.size() ? shape.output_dim : shape.hidden_dim;
    ThnnLayerParams init = init_thnn_layer(in, width, shape.rank, shape.order,
                                           layers[l].activation_outer, rng,
                                           shape.use_concat_one, shape.use_inner_tanh);
    out.push_back(std::move(init.theta));
    out.push_back(std::move(init.q));
  }
  return out;
}

std::string stack_parameter_name(const std::string& prefix, std::size_t i) {
  return prefix + (i % 2 == 0 ? "theta" : "q") + std::to_string(i / 2);
}

ThnnModel::ThnnModel(const Hypergraph& h, const StackShape& shape, std::mt19937_64& rng)
    : index_(make_hyperedge_index(h, shape.order)), layers_(stack_layers(shape)) {
  auto values = init_stack_parameters(shape, rng);
  for (std::size_t i = 0; i < values.size(); ++i) {
    add_parameter(stack_parameter_name("", i), std::move(values[i]));
  }
}

Var ThnnModel::forward(Tape&, Var x, std::span<const Var> params) const {
  return thnn_stack_forward(index_, x, params, layers_);
}

}  // namespace thnn
