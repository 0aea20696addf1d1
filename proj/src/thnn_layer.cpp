#include "thnn/thnn_layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace thnn {

void ThnnLayerParams::validate() const {
  if (theta.cols() < 1) throw std::invalid_argument("THNN rank must be at least 1");
  if (q.cols() != theta.cols()) {
    throw DimensionError("theta " + shape_string(theta) + " and q " + shape_string(q) +
                         " disagree on rank");
  }
  if (order < 2) throw std::invalid_argument("THNN order must be at least 2");
  if (use_concat_one && theta.rows() < 1) {
    throw DimensionError("theta needs a row for the constant-1 input");
  }
  if (!theta.allFinite() || !q.allFinite()) {
    throw std::invalid_argument("THNN parameters are not finite");
  }
}

DenseMatrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-s, s);
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

ThnnLayerParams init_thnn_layer(Index input_dim, Index output_dim, Index rank, Index order,
                                Activation activation, std::mt19937_64& rng,
                                bool use_concat_one, bool use_inner_tanh) {
  ThnnLayerParams p;
  p.theta = glorot_uniform(input_dim + (use_concat_one ? 1 : 0), rank, rng);
  p.q = glorot_uniform(output_dim, rank, rng);
  p.order = order;
  p.activation_outer = activation;
  p.use_concat_one = use_concat_one;
  p.use_inner_tanh = use_inner_tanh;
  p.validate();
  return p;
}

HyperedgeIndex make_hyperedge_index(const Hypergraph& h, Index order) {
  return make_hyperedge_index(h, order, h.degrees());
}

HyperedgeIndex make_hyperedge_index(const Hypergraph& h, Index order, const DegreeVector& d) {
  const auto k = is_uniform(h);
  if (h.num_edges() > 0 && (!k || *k != order)) {
    throw HypergraphError("THNN layer of order " + std::to_string(order) +
                          " needs a " + std::to_string(order) +
                          "-uniform hypergraph; use the global-node or multi-uniform extension "
                          "for mixed edge sizes");
  }
  if (d.size() != h.num_vertices()) throw DimensionError("degree vector length mismatch");
  HyperedgeIndex idx;
  idx.num_vertices = h.num_vertices();
  idx.order = order;
  idx.edges = h.edges();
  idx.coefficients.reserve(idx.edges.size());
  for (const auto& e : idx.edges) idx.coefficients.push_back(hyperedge_norm_coefficient(e, d));
  return idx;
}

DenseMatrix concat_one(const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

DenseTensor reconstruct_projection_tensor(const ThnnLayerParams& p) {
  p.validate();
  const Index r = p.rank();
  const Index k = p.order;
  check_dense_cap(Shape(static_cast<std::size_t>(k), r), "reconstruct_full_weight");
  Shape out_shape(static_cast<std::size_t>(k - 1), p.theta.rows());
  out_shape.push_back(r);
  check_dense_cap(out_shape, "reconstruct_full_weight");

  DenseTensor w(Shape(static_cast<std::size_t>(k), r));
  for (Index i = 0; i < r; ++i) w(Shape(static_cast<std::size_t>(k), i)) = 1.0;
  for (Index mode = 0; mode < k - 1; ++mode) w = mode_n_product(w, p.theta, mode);
  return w;
}

DenseTensor reconstruct_full_weight(const ThnnLayerParams& p) {
  Shape out_shape(static_cast<std::size_t>(p.order - 1), p.theta.rows());
  out_shape.push_back(p.q.rows());
  check_dense_cap(out_shape, "reconstruct_full_weight");
  return mode_n_product(reconstruct_projection_tensor(p), p.q, p.order - 1);
}

namespace {

DenseMatrix activate(const DenseMatrix& m, Activation a) {
  return a == Activation::kRelu ? DenseMatrix(m.cwiseMax(0.0)) : m;
}

std::vector<std::pair<Index, Index>> leading_pairs(Index count, Index offset_a) {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index m = 0; m < count; ++m) pairs.emplace_back(m + offset_a, m);
  return pairs;
}

}  // namespace

DenseMatrix forward_naive(const Hypergraph& h, const DenseMatrix& x, const ThnnLayerParams& p,
                          const WeightMutation& mutate) {
  p.validate();
  const Index k = p.order;
  const DenseMatrix xh = p.use_concat_one ? concat_one(x) : x;
  if (xh.cols() != p.theta.rows()) {
    throw DimensionError("features " + shape_string(x) + " do not match theta " +
                         shape_string(p.theta));
  }
  const DenseTensor a = adjacency_tensor_dense(h, /*normalized=*/true, k);
  const Index n = h.num_vertices();
  DenseMatrix pre = DenseMatrix::Zero(n, p.output_dim());

  if (!p.use_inner_tanh) {
    // (A x_2 X^T ... x_k X^T) contracted with W on the feature modes.
    DenseTensor t = a;
    const DenseMatrix xt = xh.transpose();
    for (Index mode = 1; mode < k; ++mode) t = mode_n_product(t, xt, mode);
    DenseTensor w = reconstruct_full_weight(p);
    if (mutate) mutate(w);
    pre = contract(t, w, leading_pairs(k - 1, 1)).as_matrix(n);
    return activate(pre, p.activation_outer);
  }

  // tanh sits between the theta and q stages, so each hyperedge's fiber of the
  // adjacency tensor is contracted separately.
  DenseTensor proj = reconstruct_projection_tensor(p);
  if (mutate) mutate(proj);
  for (const auto& e : h.edges()) {
    for (std::size_t pos = 0; pos < e.size(); ++pos) {
      if (pos > 0 && e[pos] == e[pos - 1]) continue;
      const VertexId i = e[pos];
      Hyperedge rest = e;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(pos));

      DenseTensor fiber(Shape(static_cast<std::size_t>(k - 1), xh.cols()));
      do {
        Shape entry{i};
        entry.insert(entry.end(), rest.begin(), rest.end());
        const double coeff = a(entry);
        if (rest.size() == 1) {
          fiber.data() += coeff * xh.row(rest[0]).transpose();
        } else {
          std::vector<DenseVector> vs;
          for (VertexId j : rest) vs.emplace_back(xh.row(j).transpose());
          fiber.data() += coeff * outer_product(vs).data();
        }
      } while (std::next_permutation(rest.begin(), rest.end()));

      const DenseTensor msg = contract(fiber, proj, leading_pairs(k - 1, 0));
      const DenseVector t = msg.data().unaryExpr([](double v) { return clamped_tanh(v); });
      pre.row(i) += (p.q * t).transpose();
    }
  }
  return activate(pre, p.activation_outer);
}

Var hyperedge_messages(const HyperedgeIndex& index, Var z, bool inner_tanh) {
  const DenseMatrix& zv = z.value();
  if (zv.rows() != index.num_vertices) {
    throw DimensionError("hyperedge_messages: projected features " + shape_string(zv) +
                         " for " + std::to_string(index.num_vertices) + " vertices");
  }
  const Index r = zv.cols();
  DenseMatrix out = DenseMatrix::Zero(zv.rows(), r);
  const bool keep = z.requires_grad() && inner_tanh;
  std::vector<DenseVector> saved;  // tanh outputs per (edge, center) slot

  DenseVector prod(r);
  for (std::size_t ei = 0; ei < index.edges.size(); ++ei) {
    const auto& e = index.edges[ei];
    const double c = index.coefficients[ei];
    for (std::size_t pos = 0; pos < e.size(); ++pos) {
      if (pos > 0 && e[pos] == e[pos - 1]) continue;
      prod.setConstant(c);
      for (std::size_t o = 0; o < e.size(); ++o) {
        if (o != pos) prod.array() *= zv.row(e[o]).transpose().array();
      }
      if (inner_tanh) prod = prod.unaryExpr([](double v) { return clamped_tanh(v); });
      out.row(e[pos]) += prod.transpose();
      if (keep) saved.push_back(prod);
    }
  }

  return z.tape().record(
      "hyperedge_messages", {z}, std::move(out),
      [&index, &zv, inner_tanh, saved = std::move(saved)](const DenseMatrix& dy,
                                                          std::span<DenseMatrix* const> dx) {
        DenseMatrix& dz = *dx[0];
        const Index r = zv.cols();
        DenseVector g(r), partial(r);
        std::size_t slot = 0;
        for (std::size_t ei = 0; ei < index.edges.size(); ++ei) {
          const auto& e = index.edges[ei];
          const double c = index.coefficients[ei];
          for (std::size_t pos = 0; pos < e.size(); ++pos) {
            if (pos > 0 && e[pos] == e[pos - 1]) continue;
            g = c * dy.row(e[pos]).transpose();
            if (inner_tanh) {
              g.array() *= 1.0 - saved[slot].array().square();
            }
            ++slot;
            for (std::size_t o = 0; o < e.size(); ++o) {
              if (o == pos) continue;
              partial = g;
              for (std::size_t m = 0; m < e.size(); ++m) {
                if (m != pos && m != o) partial.array() *= zv.row(e[m]).transpose().array();
              }
              dz.row(e[o]) += partial.transpose();
            }
          }
        }
      });
}

Var apply_activation(Var v, Activation a) {
  return a == Activation::kRelu ? ad::relu(v) : v;
}

Var forward_fast(const HyperedgeIndex& index, Var x, Var theta, Var q,
                 const ThnnLayerParams& options) {
  const Var xh = options.use_concat_one ? ad::concat_one(x) : x;
  if (xh.cols() != theta.rows()) {
    throw DimensionError("features " + shape_string(x.value()) + " do not match theta " +
                         shape_string(theta.value()));
  }
  const Var z = ad::matmul(xh, theta);
  const Var m = hyperedge_messages(index, z, options.use_inner_tanh);
  return apply_activation(ad::matmul_transposed(m, q), options.activation_outer);
}

DenseMatrix forward_fast(const Hypergraph& h, const DenseMatrix& x, const ThnnLayerParams& p,
                         const DegreeVector& d) {
  p.validate();
  const HyperedgeIndex index = make_hyperedge_index(h, p.order, d);
  Tape tape;
  const Var out = forward_fast(index, tape.constant(x), tape.constant(p.theta),
                               tape.constant(p.q), p);
  return out.value();
}

ParameterCount parameter_count(Index input_dim, Index output_dim, Index rank, Index order) {
  ParameterCount c;
  const auto f = static_cast<std::uint64_t>(input_dim + 1);
  c.cp = f * static_cast<std::uint64_t>(rank) +
         static_cast<std::uint64_t>(output_dim) * static_cast<std::uint64_t>(rank);
  c.naive = static_cast<std::uint64_t>(output_dim);
  for (Index i = 0; i < order - 1; ++i) c.naive *= f;
  return c;
}

ParameterCount parameter_count(const ThnnLayerParams& p) {
  ParameterCount c;
  const auto f = static_cast<std::uint64_t>(p.theta.rows());
  const auto r = static_cast<std::uint64_t>(p.rank());
  c.cp = f * r + static_cast<std::uint64_t>(p.output_dim()) * r;
  c.naive = static_cast<std::uint64_t>(p.output_dim());
  for (Index i = 0; i < p.order - 1; ++i) c.naive *= f;
  return c;
}

}  // namespace thnn
