// Trainable node-classification models bound to one hypergraph.
#pragma once

#include "thnn/tape.hpp"
#include "thnn/thnn_layer.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thnn {

struct NamedParameter {
  std::string name;
  DenseMatrix value;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view kind() const = 0;

  /// Logits for every real vertex. `params` are the tape images of
  /// parameters(), in the same order.
  virtual Var forward(Tape& tape, Var x, std::span<const Var> params) const = 0;

  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::size_t num_scalars() const;

  /// Evaluates without recording gradients.
  DenseMatrix predict(const DenseMatrix& x) const;

 protected:
  void add_parameter(std::string name, DenseMatrix value);

 private:
  std::vector<NamedParameter> params_;
};

/// Records every parameter of `m` on `tape`.
std::vector<Var> bind_parameters(Tape& tape, const Model& m);

/// Layer layout of a THNN stack: hidden layers use ReLU, the last layer uses
/// `last_activation`.
struct StackShape {
  Index input_dim = 0;
  Index hidden_dim = 0;
  Index output_dim = 0;
  Index rank = 0;
  Index layers = 2;
  Index order = 3;
  Activation last_activation = Activation::kIdentity;
  bool use_concat_one = true;
  bool use_inner_tanh = true;
};

/// Layer options (params left empty) for every layer of a stack.
std::vector<ThnnLayerParams> stack_layers(const StackShape& shape);

/// Glorot-initialized theta_0, q_0, theta_1, q_1, ... for `shape`.
std::vector<DenseMatrix> init_stack_parameters(const StackShape& shape, std::mt19937_64& rng);
/// "theta0", "q0", "theta1", ... with an optional prefix.
std::string stack_parameter_name(const std::string& prefix, std::size_t i);

/// Runs a stack whose parameters are laid out theta_0, q_0, theta_1, q_1, ...
Var thnn_stack_forward(const HyperedgeIndex& index, Var x, std::span<const Var> params,
                       const std::vector<ThnnLayerParams>& layers);

/// THNN on a uniform hypergraph.
class ThnnModel final : public Model {
 public:
  ThnnModel(const Hypergraph& h, const StackShape& shape, std::mt19937_64& rng);

  std::string_view kind() const override { return "thnn"; }
  Var forward(Tape& tape, Var x, std::span<const Var> params) const override;

  const HyperedgeIndex& index() const { return index_; }
  const std::vector<ThnnLayerParams>& layers() const { return layers_; }

 private:
  HyperedgeIndex index_;
  std::vector<ThnnLayerParams> layers_;
};

}  // namespace thnn
