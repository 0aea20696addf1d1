#include "thnn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace thnn {

namespace {

void require_same_tape(const std::vector<Var>& inputs, const Tape* tape) {
  for (const Var& v : inputs) {
    if (&v.tape() != tape) throw std::invalid_argument("operand recorded on a different tape");
  }
}

void require_same_shape(const char* op, const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

}  // namespace

Var Tape::push(DenseMatrix value, bool needs_grad) {
  values_.push_back(std::move(value));
  needs_grad_.push_back(needs_grad);
  return Var(this, values_.size() - 1);
}

Var Tape::constant(DenseMatrix value) { return push(std::move(value), false); }

Var Tape::parameter(DenseMatrix value) { return push(std::move(value), true); }

Var Tape::record(std::string_view op, std::vector<Var> inputs, DenseMatrix value,
                 Adjoint adjoint) {
  require_same_tape(inputs, this);
  bool needs = false;
  for (const Var& v : inputs) needs = needs || needs_grad_[v.id()];
  Var out = push(std::move(value), needs);
  if (needs) {
    Node node{op, {}, out.id(), std::move(adjoint)};
    node.inputs.reserve(inputs.size());
    for (const Var& v : inputs) node.inputs.push_back(v.id());
    nodes_.push_back(std::move(node));
  }
  return out;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw std::invalid_argument("loss recorded on a different tape");
  const DenseMatrix& lv = values_[loss.id()];
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw RankError("backward requires a scalar (1x1) loss, got " + shape_string(lv));
  }
  grads_.assign(values_.size(), DenseMatrix());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    grads_[i] = DenseMatrix::Zero(values_[i].rows(), values_[i].cols());
  }
  grads_[loss.id()](0, 0) = 1.0;

  std::vector<DenseMatrix*> dx;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output > loss.id()) continue;
    dx.clear();
    for (std::size_t in : it->inputs) dx.push_back(needs_grad_[in] ? &grads_[in] : nullptr);
    it->adjoint(grads_[it->output], dx);
  }
}

const DenseMatrix& Tape::grad(Var v) const {
  if (grads_.empty()) throw std::logic_error("grad() called before backward()");
  return grads_.at(v.id());
}

double clamped_tanh(double x) {
  static const double kBound = std::nextafter(1.0, 0.0);
  const double t = std::tanh(x);
  return std::clamp(t, -kBound, kBound);
}

namespace ad {

Var matmul(Var a, Var b) {
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(av) + " x " +
                         shape_string(bv));
  }
  DenseMatrix out = av * bv;
  return a.tape().record("matmul", {a, b}, std::move(out),
                         [&av, &bv](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) dx[0]->noalias() += dy * bv.transpose();
                           if (dx[1]) dx[1]->noalias() += av.transpose() * dy;
                         });
}

Var matmul_transposed(Var a, Var b) {
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.cols() != bv.cols()) {
    throw DimensionError("matmul_transposed: inner dimensions differ, " + shape_string(av) +
                         " x " + shape_string(bv) + "^T");
  }
  DenseMatrix out = av * bv.transpose();
  return a.tape().record("matmul_transposed", {a, b}, std::move(out),
                         [&av, &bv](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) dx[0]->noalias() += dy * bv;
                           if (dx[1]) dx[1]->noalias() += dy.transpose() * av;
                         });
}

Var transpose(Var a) {
  DenseMatrix out = a.value().transpose();
  return a.tape().record("transpose", {a}, std::move(out),
                         [](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) *dx[0] += dy.transpose();
                         });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  DenseMatrix out = a.value() + b.value();
  return a.tape().record("add", {a, b}, std::move(out),
                         [](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) *dx[0] += dy;
                           if (dx[1]) *dx[1] += dy;
                         });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  DenseMatrix out = av.cwiseProduct(bv);
  return a.tape().record("mul", {a, b}, std::move(out),
                         [&av, &bv](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) *dx[0] += dy.cwiseProduct(bv);
                           if (dx[1]) *dx[1] += dy.cwiseProduct(av);
                         });
}

Var scale(Var a, double s) {
  if (!std::isfinite(s)) throw std::invalid_argument("scale: factor must be finite");
  DenseMatrix out = a.value() * s;
  return a.tape().record("scale", {a}, std::move(out),
                         [s](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) *dx[0] += s * dy;
                         });
}

Var tanh(Var a) {
  DenseMatrix out = a.value().unaryExpr([](double x) { return clamped_tanh(x); });
  DenseMatrix saved = out;
  return a.tape().record("tanh", {a}, std::move(out),
                         [t = std::move(saved)](const DenseMatrix& dy,
                                                std::span<DenseMatrix* const> dx) {
                           if (dx[0]) {
                             *dx[0] += dy.cwiseProduct(
                                 (1.0 - t.array().square()).matrix());
                           }
                         });
}

Var relu(Var a) {
  const DenseMatrix& av = a.value();
  DenseMatrix out = av.cwiseMax(0.0);
  return a.tape().record("relu", {a}, std::move(out),
                         [&av](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) {
                             *dx[0] += (av.array() > 0.0).select(dy, 0.0).matrix();
                           }
                         });
}

Var sum(Var a) {
  DenseMatrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record("sum", {a}, std::move(out),
                         [](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) dx[0]->array() += dy(0, 0);
                         });
}

Var concat_one(Var a) {
  const Index r = a.rows(), c = a.cols();
  DenseMatrix out(r, c + 1);
  out.leftCols(c) = a.value();
  out.col(c).setOnes();
  return a.tape().record("concat_one", {a}, std::move(out),
                         [c](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) *dx[0] += dy.leftCols(c);
                         });
}

Var concat_cols(const std::vector<Var>& blocks) {
  if (blocks.empty()) throw ArityError("concat_cols needs at least one block");
  const Index r = blocks.front().rows();
  Index total = 0;
  std::vector<Index> widths;
  for (const Var& b : blocks) {
    if (b.rows() != r) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(blocks.front().value()) +
                           " vs " + shape_string(b.value()));
    }
    widths.push_back(b.cols());
    total += b.cols();
  }
  DenseMatrix out(r, total);
  Index off = 0;
  for (const Var& b : blocks) {
    out.middleCols(off, b.cols()) = b.value();
    off += b.cols();
  }
  return blocks.front().tape().record(
      "concat_cols", blocks, std::move(out),
      [widths](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
        Index o = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
          if (dx[i]) *dx[i] += dy.middleCols(o, widths[i]);
          o += widths[i];
        }
      });
}

Var stack_rows(Var a, Var b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("stack_rows: column mismatch " + shape_string(a.value()) + " vs " +
                         shape_string(b.value()));
  }
  const Index ra = a.rows(), rb = b.rows();
  DenseMatrix out(ra + rb, a.cols());
  out.topRows(ra) = a.value();
  out.bottomRows(rb) = b.value();
  return a.tape().record("stack_rows", {a, b}, std::move(out),
                         [ra, rb](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) *dx[0] += dy.topRows(ra);
                           if (dx[1]) *dx[1] += dy.bottomRows(rb);
                         });
}

Var top_rows(Var a, Index n) {
  if (n < 0 || n > a.rows()) {
    throw DimensionError("top_rows: " + std::to_string(n) + " rows requested from " +
                         shape_string(a.value()));
  }
  DenseMatrix out = a.value().topRows(n);
  return a.tape().record("top_rows", {a}, std::move(out),
                         [n](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) dx[0]->topRows(n) += dy;
                         });
}

Var propagate(const SparseMatrix& op, Var a) {
  if (op.cols() != a.rows()) {
    throw DimensionError("propagate: operator " + shape_string(op) + " vs operand " +
                         shape_string(a.value()));
  }
  DenseMatrix out = op * a.value();
  return a.tape().record("propagate", {a}, std::move(out),
                         [&op](const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
                           if (dx[0]) dx[0]->noalias() += op.transpose() * dy;
                         });
}

}  // namespace ad

}  // namespace thnn
