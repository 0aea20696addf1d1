#include "thnn/baseline.hpp"

#include <cmath>
#include <string>

namespace thnn {

HgnnLayerParams init_hgnn_layer(Index input_dim, Index output_dim, Index num_edges,
                                std::mt19937_64& rng) {
  return {glorot_uniform(input_dim, output_dim, rng), DenseMatrix::Ones(num_edges, 1)};
}

HgnnOperator make_hgnn_operator(const Hypergraph& h) {
  std::vector<Eigen::Triplet<double>> trips;
  for (Index j = 0; j < h.num_edges(); ++j) {
    for (VertexId v : h.edge(j)) trips.emplace_back(v, j, 1.0);  // duplicates are summed
  }
  HgnnOperator op;
  op.incidence.resize(h.num_vertices(), h.num_edges());
  op.incidence.setFromTriplets(trips.begin(), trips.end());
  op.edge_degrees = DenseVector::Zero(h.num_edges());
  for (Index j = 0; j < h.num_edges(); ++j) {
    op.edge_degrees[j] = static_cast<double>(h.edge(j).size());
  }
  return op;
}

Var hgnn_propagate(const HgnnOperator& op, Var p, Var edge_weights) {
  const SparseMatrix& h = op.incidence;
  const DenseMatrix& pv = p.value();
  const DenseMatrix& wv = edge_weights.value();
  if (pv.rows() != h.rows()) {
    throw DimensionError("hgnn_propagate: features " + shape_string(pv) + " for " +
                         std::to_string(h.rows()) + " vertices");
  }
  if (wv.rows() != h.cols() || wv.cols() != 1) {
    throw DimensionError("hgnn_propagate: edge weights " + shape_string(wv) + " for " +
                         std::to_string(h.cols()) + " edges");
  }

  const DenseVector w = wv.col(0).cwiseMax(kMinEdgeWeight);
  const DenseVector dv = h * w;
  const DenseVector s = dv.unaryExpr([](double a) { return a > 0.0 ? 1.0 / std::sqrt(a) : 0.0; });
  const DenseVector edge_scale = w.cwiseQuotient(op.edge_degrees);

  const DenseMatrix u = s.asDiagonal() * pv;
  const DenseMatrix v = h.transpose() * u;
  const DenseMatrix vs = edge_scale.asDiagonal() * v;
  const DenseMatrix t = h * vs;
  DenseMatrix out = s.asDiagonal() * t;

  return p.tape().record(
      "hgnn_propagate", {p, edge_weights}, std::move(out),
      [&op, &pv, &wv, w, dv, s, edge_scale, v, t](const DenseMatrix& dy,
                                                  std::span<DenseMatrix* const> dx) {
        const SparseMatrix& h = op.incidence;
        // out = S T
        DenseVector ds = dy.cwiseProduct(t).rowwise().sum();
        const DenseMatrix dt = s.asDiagonal() * dy;
        // T = H Vs, Vs = diag(w / de) V
        const DenseMatrix dvs = h.transpose() * dt;
        DenseVector dw = dvs.cwiseProduct(v).rowwise().sum().cwiseQuotient(op.edge_degrees);
        const DenseMatrix dv_mat = edge_scale.asDiagonal() * dvs;
        // V = H^T U, U = S P
        const DenseMatrix du = h * dv_mat;
        ds += du.cwiseProduct(pv).rowwise().sum();
        if (dx[0]) dx[0]->noalias() += s.asDiagonal() * du;
        if (dx[1]) {
          // s = dv^{-1/2}, dv = H w
          DenseVector ddv(dv.size());
          for (Index i = 0; i < dv.size(); ++i) {
            ddv[i] = dv[i] > 0.0 ? -0.5 * ds[i] * std::pow(dv[i], -1.5) : 0.0;
          }
          dw += h.transpose() * ddv;
          for (Index j = 0; j < dw.size(); ++j) {
            if (wv(j, 0) < kMinEdgeWeight) dw[j] = 0.0;
          }
          dx[1]->col(0) += dw;
        }
      });
}

DenseMatrix hgnn_forward(const Hypergraph& h, const DenseMatrix& x, const HgnnLayerParams& p,
                         Activation activation) {
  const HgnnOperator op = make_hgnn_operator(h);
  Tape tape;
  const Var xt = ad::matmul(tape.constant(x), tape.constant(p.theta));
  return apply_activation(hgnn_propagate(op, xt, tape.constant(p.edge_weights)), activation)
      .value();
}

SparseMatrix gcn_operator(const Hypergraph& h, bool self_loops) {
  const Hypergraph g = clique_expansion(h);
  const Index n = g.num_vertices();
  std::vector<Eigen::Triplet<double>> trips;
  DenseVector deg = DenseVector::Zero(n);
  for (const auto& e : g.edges()) {
    trips.emplace_back(e[0], e[1], 1.0);
    trips.emplace_back(e[1], e[0], 1.0);
    deg[e[0]] += 1.0;
    deg[e[1]] += 1.0;
  }
  if (self_loops) {
    for (Index i = 0; i < n; ++i) {
      trips.emplace_back(i, i, 1.0);
      deg[i] += 1.0;
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  const DenseVector s = deg.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  for (Index r = 0; r < a.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) it.valueRef() *= s[it.row()] * s[it.col()];
  }
  return a;
}

DenseMatrix gcn_on_clique(const Hypergraph& h, const DenseMatrix& x, const DenseMatrix& theta,
                          Activation activation, bool self_loops) {
  const SparseMatrix op = gcn_operator(h, self_loops);
  Tape tape;
  const Var xt = ad::matmul(tape.constant(x), tape.constant(theta));
  return apply_activation(ad::propagate(op, xt), activation).value();
}

HgnnModel::HgnnModel(const Hypergraph& h, Index input_dim, Index hidden_dim, Index output_dim,
                     Index layers, std::mt19937_64& rng)
    : op_(make_hgnn_operator(h)), layers_(layers) {
  if (layers < 1) throw std::invalid_argument("HGNN needs at least one layer");
  for (Index l = 0; l < layers; ++l) {
    const Index in = l == 0 ? input_dim : hidden_dim;
    const Index out = l + 1 == layers ? output_dim : hidden_dim;
    HgnnLayerParams p = init_hgnn_layer(in, out, h.num_edges(), rng);
    add_parameter("theta" + std::to_string(l), std::move(p.theta));
    add_parameter("edge_weights" + std::to_string(l), std::move(p.edge_weights));
  }
}

Var HgnnModel::forward(Tape&, Var x, std::span<const Var> params) const {
  Var h = x;
  for (Index l = 0; l < layers_; ++l) {
    const Var xt = ad::matmul(h, params[2 * l]);
    h = hgnn_propagate(op_, xt, params[2 * l + 1]);
    if (l + 1 < layers_) h = ad::relu(h);
  }
  return h;
}

GcnModel::GcnModel(const Hypergraph& h, Index input_dim, Index hidden_dim, Index output_dim,
                   Index layers, std::mt19937_64& rng)
    : op_(gcn_operator(h)), layers_(layers) {
  if (layers < 1) throw std::invalid_argument("GCN needs at least one layer");
  for (Index l = 0; l < layers; ++l) {
    const Index in = l == 0 ? input_dim : hidden_dim;
    const Index out = l + 1 == layers ? output_dim : hidden_dim;
    add_parameter("theta" + std::to_string(l), glorot_uniform(in, out, rng));
  }
}

Var GcnModel::forward(Tape&, Var x, std::span<const Var> params) const {
  Var h = x;
  for (Index l = 0; l < layers_; ++l) {
    h = ad::propagate(op_, ad::matmul(h, params[l]));
    if (l + 1 < layers_) h = ad::relu(h);
  }
  return h;
}

}  // namespace thnn
