// Dense matrices and tensors, plus the contraction primitives the layers use.
//
// Matrices are Eigen row-major dynamic matrices. Tensors are a thin shape +
// contiguous row-major buffer (last index fastest). Every contraction goes
// through one path: permute to a (free x paired) layout, view as a matrix,
// multiply with Eigen, fold back.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thnn {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;

/// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation receives too few operands.
class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when materializing a dense object would exceed the oracle cap.
class SizeCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Shape product above which dense oracle objects are refused.
inline constexpr double kDenseElementCap = 1e7;

using Shape = std::vector<Index>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return shape_string(Shape{m.rows(), m.cols()});
}

inline Index shape_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

/// Throws SizeCapError if a tensor of this shape would exceed the dense cap.
inline void check_dense_cap(const Shape& shape, const char* what) {
  double n = 1.0;
  for (Index d : shape) n *= static_cast<double>(d);
  if (n > kDenseElementCap) {
    throw SizeCapError(std::string(what) + ": dense shape " + shape_string(shape) +
                       " exceeds the 1e7-element oracle cap");
  }
}

template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_ = Vector<Scalar>::Zero(shape_product(shape_));
  }

  Tensor(Shape shape, Vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != shape_product(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  static Tensor from_matrix(const Matrix<Scalar>& m) {
    Vector<Scalar> flat = Eigen::Map<const Vector<Scalar>>(m.data(), m.size());
    return Tensor({m.rows(), m.cols()}, std::move(flat));
  }

  static Tensor from_vector(const Vector<Scalar>& v) { return Tensor({v.size()}, v); }

  const Shape& shape() const { return shape_; }
  Index order() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index mode) const { return shape_.at(static_cast<std::size_t>(mode)); }
  Index size() const { return data_.size(); }

  const Vector<Scalar>& data() const { return data_; }
  Vector<Scalar>& data() { return data_; }

  /// Row-major strides.
  Shape strides() const {
    Shape s(shape_.size(), 1);
    for (Index i = order() - 2; i >= 0; --i) s[i] = s[i + 1] * shape_[i + 1];
    return s;
  }

  Index linear_index(const Shape& idx) const {
    Index lin = 0;
    for (std::size_t i = 0; i < shape_.size(); ++i) lin = lin * shape_[i] + idx[i];
    return lin;
  }

  Scalar& operator()(const Shape& idx) { return data_[linear_index(idx)]; }
  const Scalar& operator()(const Shape& idx) const { return data_[linear_index(idx)]; }

  /// View the buffer as a rows x (size/rows) row-major matrix.
  Matrix<Scalar> as_matrix(Index rows) const {
    return Eigen::Map<const Matrix<Scalar>>(data_.data(), rows, rows ? size() / rows : 0);
  }

 private:
  void validate_shape() const {
    if (shape_.empty()) throw DimensionError("tensor order must be at least 1");
    for (Index d : shape_) {
      if (d < 0) throw DimensionError("negative tensor dimension in " + shape_string(shape_));
    }
  }

  Shape shape_;
  Vector<Scalar> data_;
};

using DenseTensor = Tensor<double>;

/// Advances a row-major multi-index; returns false after the last element.
inline bool next_index(Shape& idx, const Shape& shape) {
  for (Index i = static_cast<Index>(shape.size()) - 1; i >= 0; --i) {
    if (++idx[i] < shape[i]) return true;
    idx[i] = 0;
  }
  return false;
}

/// Reorders axes: result axis i is input axis perm[i].
template <typename Scalar>
Tensor<Scalar> permute(const Tensor<Scalar>& t, const std::vector<Index>& perm) {
  const Index n = t.order();
  if (static_cast<Index>(perm.size()) != n) throw DimensionError("permutation length mismatch");
  std::vector<bool> seen(n, false);
  for (Index p : perm) {
    if (p < 0 || p >= n || seen[p]) throw DimensionError("invalid axis permutation");
    seen[p] = true;
  }
  Shape out_shape(n);
  for (Index i = 0; i < n; ++i) out_shape[i] = t.shape()[perm[i]];
  Tensor<Scalar> out(out_shape);
  if (out.size() == 0) return out;

  const Shape in_strides = t.strides();
  Shape gather(n);
  for (Index i = 0; i < n; ++i) gather[i] = in_strides[perm[i]];

  Shape idx(n, 0);
  Index dst = 0;
  do {
    Index src = 0;
    for (Index i = 0; i < n; ++i) src += idx[i] * gather[i];
    out.data()[dst++] = t.data()[src];
  } while (next_index(idx, out_shape));
  return out;
}

/// Outer product v1 o v2 o ... o vm.
template <typename Scalar>
Tensor<Scalar> outer_product(const std::vector<Vector<Scalar>>& vectors) {
  if (vectors.size() < 2) {
    throw ArityError("outer_product needs at least 2 vectors, got " +
                     std::to_string(vectors.size()));
  }
  Shape shape;
  for (const auto& v : vectors) {
    if (v.size() == 0) throw DimensionError("outer_product operand is empty");
    shape.push_back(v.size());
  }
  check_dense_cap(shape, "outer_product");
  // Fold left: (a o b) is a column-times-row product flattened row-major.
  Vector<Scalar> acc = vectors.front();
  for (std::size_t j = 1; j < vectors.size(); ++j) {
    const auto& v = vectors[j];
    Vector<Scalar> next(acc.size() * v.size());
    Eigen::Map<Matrix<Scalar>>(next.data(), acc.size(), v.size()).noalias() =
        acc * v.transpose();
    acc = std::move(next);
  }
  return Tensor<Scalar>(std::move(shape), std::move(acc));
}

/// Sums products over the paired modes. Result axes are the free modes of `a`
/// (in order) followed by the free modes of `b`. A full contraction yields a
/// shape-(1) tensor.
template <typename Scalar>
Tensor<Scalar> contract(const Tensor<Scalar>& a, const Tensor<Scalar>& b,
                        const std::vector<std::pair<Index, Index>>& pairs) {
  if (pairs.empty()) throw DimensionError("contract needs at least one mode pair");
  std::vector<bool> used_a(a.order(), false), used_b(b.order(), false);
  for (auto [ma, mb] : pairs) {
    if (ma < 0 || ma >= a.order() || mb < 0 || mb >= b.order()) {
      throw DimensionError("contract mode pair (" + std::to_string(ma) + "," +
                           std::to_string(mb) + ") out of range for shapes " +
                           shape_string(a.shape()) + " and " + shape_string(b.shape()));
    }
    if (used_a[ma] || used_b[mb]) throw DimensionError("contract mode repeated in pair list");
    used_a[ma] = used_b[mb] = true;
    if (a.dim(ma) != b.dim(mb)) {
      throw DimensionError("contract dimension mismatch: mode " + std::to_string(ma) + " of " +
                           shape_string(a.shape()) + " vs mode " + std::to_string(mb) + " of " +
                           shape_string(b.shape()));
    }
  }

  std::vector<Index> perm_a, perm_b;
  Shape free_shape;
  Index free_a = 1, free_b = 1, paired = 1;
  for (Index i = 0; i < a.order(); ++i) {
    if (!used_a[i]) {
      perm_a.push_back(i);
      free_shape.push_back(a.dim(i));
      free_a *= a.dim(i);
    }
  }
  for (auto [ma, mb] : pairs) {
    perm_a.push_back(ma);
    perm_b.push_back(mb);
    paired *= a.dim(ma);
  }
  for (Index i = 0; i < b.order(); ++i) {
    if (!used_b[i]) {
      perm_b.push_back(i);
      free_shape.push_back(b.dim(i));
      free_b *= b.dim(i);
    }
  }
  if (free_shape.empty()) free_shape.push_back(1);

  const Tensor<Scalar> pa = permute(a, perm_a);
  const Tensor<Scalar> pb = permute(b, perm_b);
  Eigen::Map<const Matrix<Scalar>> ma(pa.data().data(), free_a, paired);
  Eigen::Map<const Matrix<Scalar>> mb(pb.data().data(), paired, free_b);
  Vector<Scalar> out(free_a * free_b);
  Eigen::Map<Matrix<Scalar>>(out.data(), free_a, free_b).noalias() = ma * mb;
  return Tensor<Scalar>(std::move(free_shape), std::move(out));
}

/// Mode-n product t x_n m: contracts mode `mode` of t with the second mode of
/// m and puts m.rows() in that position.
template <typename Scalar>
Tensor<Scalar> mode_n_product(const Tensor<Scalar>& t, const Matrix<Scalar>& m, Index mode) {
  if (mode < 0 || mode >= t.order()) {
    throw DimensionError("mode " + std::to_string(mode) + " out of range for tensor " +
                         shape_string(t.shape()));
  }
  if (m.cols() != t.dim(mode)) {
    throw DimensionError("mode_n_product: matrix " + shape_string(m) +
                         " inner dimension does not match mode " + std::to_string(mode) +
                         " of tensor " + shape_string(t.shape()));
  }
  Tensor<Scalar> c = contract(t, Tensor<Scalar>::from_matrix(m), {{mode, 1}});
  // c has axes (free modes of t..., m.rows); move the last axis back to `mode`.
  const Index n = t.order();
  std::vector<Index> perm;
  for (Index i = 0; i < n; ++i) perm.push_back(i < mode ? i : (i == mode ? n - 1 : i - 1));
  return permute(c, perm);
}

}  // namespace thnn
