// Reverse-mode differentiation over dense matrices.
//
// A Tape owns every value produced during a forward pass. Operations append a
// node holding the input ids and an adjoint closure; the closure captures any
// forward values it needs. Nodes are only recorded when some input requires a
// gradient, so pure-constant subexpressions cost nothing at backward time.
#pragma once

#include "thnn/tensor.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace thnn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Raised by backward() when the loss is not a 1x1 value.
class RankError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const DenseMatrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Accumulates input adjoints from the output adjoint `dy`. Entries of `dx`
  /// are null for inputs that do not require a gradient.
  using Adjoint = std::function<void(const DenseMatrix& dy, std::span<DenseMatrix* const> dx)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(DenseMatrix value);
  Var parameter(DenseMatrix value);

  /// Appends an operation. All inputs must live on this tape.
  Var record(std::string_view op, std::vector<Var> inputs, DenseMatrix value, Adjoint adjoint);

  /// Seeds d(loss)=1 and propagates adjoints to every value in reverse order.
  void backward(Var loss);

  /// Adjoint of `v` after backward(); zeros if `v` was unreachable.
  const DenseMatrix& grad(Var v) const;

  const DenseMatrix& value(std::size_t id) const { return values_.at(id); }
  bool requires_grad(std::size_t id) const { return needs_grad_.at(id); }
  std::size_t num_values() const { return values_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::string_view op;
    std::vector<std::size_t> inputs;
    std::size_t output;
    Adjoint adjoint;
  };

  Var push(DenseMatrix value, bool needs_grad);

  std::deque<DenseMatrix> values_;  // stable addresses: adjoints hold references
  std::vector<bool> needs_grad_;
  std::vector<DenseMatrix> grads_;
  std::vector<Node> nodes_;
};

inline const DenseMatrix& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

namespace ad {

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_transposed(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// Elementwise tanh, clamped strictly inside (-1, 1).
Var tanh(Var a);
Var relu(Var a);
/// Sum of all entries as a 1x1 value.
Var sum(Var a);
/// Appends a constant-1 column. The constant column carries no gradient.
Var concat_one(Var a);
/// Horizontal concatenation of equal-height blocks.
Var concat_cols(const std::vector<Var>& blocks);
/// Vertical concatenation of a over b.
Var stack_rows(Var a, Var b);
/// First n rows.
Var top_rows(Var a, Index n);
/// Left-multiplication by a fixed sparse operator, which must outlive the tape.
Var propagate(const SparseMatrix& op, Var a);

}  // namespace ad

/// tanh clamped to the open interval (-1, 1).
double clamped_tanh(double x);

}  // namespace thnn
