#include "thnn/train.hpp"

#include "thnn/baseline.hpp"
#include "thnn/nonuniform.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace thnn {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kThnn: return "thnn";
    case ModelKind::kHgnn: return "hgnn";
    case ModelKind::kGcn: return "gcn";
  }
  return "?";
}

std::string_view to_string(NonuniformMode m) {
  switch (m) {
    case NonuniformMode::kUniform: return "uniform";
    case NonuniformMode::kGlobalNode: return "global-node";
    case NonuniformMode::kMultiUniform: return "multi-uniform";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "thnn") return ModelKind::kThnn;
  if (s == "hgnn") return ModelKind::kHgnn;
  if (s == "gcn") return ModelKind::kGcn;
  throw std::invalid_argument("unknown model '" + std::string(s) + "' (thnn, hgnn, gcn)");
}

NonuniformMode parse_nonuniform_mode(std::string_view s) {
  if (s == "uniform") return NonuniformMode::kUniform;
  if (s == "global-node") return NonuniformMode::kGlobalNode;
  if (s == "multi-uniform") return NonuniformMode::kMultiUniform;
  throw std::invalid_argument("unknown non-uniform mode '" + std::string(s) +
                              "' (uniform, global-node, multi-uniform)");
}

double default_learning_rate(NonuniformMode mode) {
  return mode == NonuniformMode::kUniform ? 0.001 : 0.005;
}

void TrainConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("rank must be at least 1");
  if (layers < 1) throw std::invalid_argument("layers must be at least 1");
  if (hidden_dim < 1) throw std::invalid_argument("hidden dimension must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and non-negative");
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (patience < 0) throw std::invalid_argument("patience must be non-negative");
}

std::unique_ptr<Model> make_model(const TrainConfig& config, const Hypergraph& h,
                                  Index input_dim, int num_classes) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  switch (config.model) {
    case ModelKind::kHgnn:
      return std::make_unique<HgnnModel>(h, input_dim, config.hidden_dim, num_classes,
                                         config.layers, rng);
    case ModelKind::kGcn:
      return std::make_unique<GcnModel>(h, input_dim, config.hidden_dim, num_classes,
                                        config.layers, rng);
    case ModelKind::kThnn: break;
  }
  StackShape shape;
  shape.input_dim = input_dim;
  shape.hidden_dim = config.hidden_dim;
  shape.output_dim = num_classes;
  shape.rank = config.rank;
  shape.layers = config.layers;
  shape.use_concat_one = config.use_concat_one;
  shape.use_inner_tanh = config.use_inner_tanh;
  switch (config.nonuniform_mode) {
    case NonuniformMode::kGlobalNode:
      return std::make_unique<GlobalNodeModel>(h, shape, rng);
    case NonuniformMode::kMultiUniform:
      return std::make_unique<MultiUniformModel>(h, shape, rng);
    case NonuniformMode::kUniform: break;
  }
  const auto k = is_uniform(h);
  if (!k) {
    throw ModeError(
        "hypergraph is not uniform (or has no hyperedges); THNN in uniform mode needs equal "
        "hyperedge sizes. Use --nonuniform-mode global-node or --nonuniform-mode multi-uniform.");
  }
  shape.order = *k;
  return std::make_unique<ThnnModel>(h, shape, rng);
}

namespace {

void check_rows(std::span<const int> labels, std::span<const Index> rows, Index n_rows,
                Index n_cols) {
  if (rows.empty()) throw std::invalid_argument("empty mask");
  for (Index r : rows) {
    if (r < 0 || r >= n_rows || static_cast<std::size_t>(r) >= labels.size()) {
      throw DimensionError("mask row " + std::to_string(r) + " out of range");
    }
    if (labels[r] < 0 || labels[r] >= n_cols) {
      throw DimensionError("label " + std::to_string(labels[r]) + " outside logits width " +
                           std::to_string(n_cols));
    }
  }
}

/// Row softmax of the selected rows and the mean negative log-likelihood.
double softmax_rows(const DenseMatrix& logits, std::span<const int> labels,
                    std::span<const Index> rows, DenseMatrix* probs) {
  double total = 0.0;
  if (probs) *probs = DenseMatrix::Zero(static_cast<Index>(rows.size()), logits.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = logits.row(rows[i]);
    const double mx = row.maxCoeff();
    const double lse = mx + std::log((row.array() - mx).exp().sum());
    total += lse - row(labels[rows[i]]);
    if (probs) probs->row(static_cast<Index>(i)) = (row.array() - lse).exp().matrix();
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

double softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                             std::span<const Index> rows) {
  check_rows(labels, rows, logits.rows(), logits.cols());
  return softmax_rows(logits, labels, rows, nullptr);
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const Index> rows) {
  const DenseMatrix& lv = logits.value();
  check_rows(labels, rows, lv.rows(), lv.cols());
  DenseMatrix probs;
  DenseMatrix out(1, 1);
  out(0, 0) = softmax_rows(lv, labels, rows, &probs);
  std::vector<Index> row_ids(rows.begin(), rows.end());
  std::vector<int> targets;
  for (Index r : rows) targets.push_back(labels[r]);
  return logits.tape().record(
      "softmax_cross_entropy", {logits}, std::move(out),
      [probs = std::move(probs), row_ids = std::move(row_ids), targets = std::move(targets)](
          const DenseMatrix& dy, std::span<DenseMatrix* const> dx) {
        if (!dx[0]) return;
        const double scale = dy(0, 0) / static_cast<double>(row_ids.size());
        for (std::size_t i = 0; i < row_ids.size(); ++i) {
          auto g = dx[0]->row(row_ids[i]);
          g += scale * probs.row(static_cast<Index>(i));
          g(targets[i]) -= scale;
        }
      });
}

double accuracy(const DenseMatrix& logits, std::span<const int> labels,
                std::span<const Index> rows) {
  check_rows(labels, rows, logits.rows(), logits.cols());
  std::size_t correct = 0;
  for (Index r : rows) {
    Index best = 0;
    for (Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    correct += best == labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

void adam_step(AdamState& state, std::vector<NamedParameter>& params,
               const std::vector<DenseMatrix>& grads, double lr, const AdamOptions& opts) {
  if (grads.size() != params.size()) throw ArityError("adam_step: gradient count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(DenseMatrix::Zero(p.value.rows(), p.value.cols()));
      state.v.push_back(DenseMatrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw ArityError("adam_step: state size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = grads[i];
    if (g.rows() != params[i].value.rows() || g.cols() != params[i].value.cols()) {
      throw DimensionError("adam_step: gradient " + shape_string(g) + " for parameter " +
                           params[i].name + " " + shape_string(params[i].value));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opts.beta1, t);
  const double c2 = 1.0 - std::pow(opts.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    m = opts.beta1 * m + (1.0 - opts.beta1) * g;
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.cwiseProduct(g);
    params[i].value.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opts.epsilon);
  }
}

std::vector<EpochMetrics> train_model(Model& model, const TrainConfig& config,
                                      const FeatureDataset& data, int* best_epoch) {
  config.validate();
  data.validate();
  const auto train_rows = data.indices(Split::kTrain);
  const auto val_rows = data.indices(Split::kVal);
  const auto test_rows = data.indices(Split::kTest);
  const bool early_stop = config.patience > 0 && !val_rows.empty();
  const AdamOptions opts{config.beta1, config.beta2, config.epsilon};

  AdamState adam;
  std::vector<EpochMetrics> history;
  std::vector<NamedParameter> best_params;
  double best_val = -1.0;
  int best = 0;
  double last_finite = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Tape tape;
    const auto params = bind_parameters(tape, model);
    const Var logits = model.forward(tape, tape.constant(data.features), params);
    const Var loss = softmax_cross_entropy(logits, data.labels, train_rows);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value) || !logits.value().allFinite()) {
      std::ostringstream os;
      os << "training diverged at epoch " << epoch << ": loss=" << loss_value
         << ", last finite loss=" << last_finite << ", lr=" << config.learning_rate;
      throw TrainingDiverged(os.str());
    }
    last_finite = loss_value;

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_value;
    m.train_acc = accuracy(logits.value(), data.labels, train_rows);
    m.val_acc = val_rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : accuracy(logits.value(), data.labels, val_rows);
    m.test_acc = accuracy(logits.value(), data.labels, test_rows);
    history.push_back(m);

    if (early_stop) {
      if (m.val_acc > best_val) {
        best_val = m.val_acc;
        best = epoch;
        best_params = model.parameters();
      } else if (epoch - best >= config.patience) {
        break;
      }
    }

    tape.backward(loss);
    std::vector<DenseMatrix> grads;
    grads.reserve(params.size());
    for (const Var& p : params) grads.push_back(tape.grad(p));
    adam_step(adam, model.parameters(), grads, config.learning_rate, opts);
  }

  if (early_stop && !best_params.empty()) {
    model.parameters() = std::move(best_params);
  } else {
    best = static_cast<int>(history.size());
  }
  if (best_epoch) *best_epoch = best;
  return history;
}

TrainResult train(const TrainConfig& config, const FeatureDataset& data, const Hypergraph& h) {
  data.validate();
  if (h.num_vertices() != data.num_vertices()) {
    throw DimensionError("hypergraph has " + std::to_string(h.num_vertices()) +
                         " vertices but the dataset has " + std::to_string(data.num_vertices()));
  }
  TrainResult result;
  result.model = make_model(config, h, data.features.cols(), data.num_classes);
  result.history = train_model(*result.model, config, data, &result.best_epoch);
  return result;
}

double evaluate(const Model& model, const FeatureDataset& data, Split split) {
  const auto rows = data.indices(split);
  return accuracy(model.predict(data.features), data.labels, rows);
}

double gradcheck(const LossFn& loss, std::vector<DenseMatrix>& params, int num_probes,
                 std::uint64_t seed, double h) {
  std::vector<DenseMatrix> grads;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    const Var l = loss(tape, vars);
    tape.backward(l);
    for (const Var& v : vars) grads.push_back(tape.grad(v));
  }
  auto eval = [&] {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.constant(p));
    const Var l = loss(tape, vars);
    if (l.rows() != 1 || l.cols() != 1) throw RankError("gradcheck loss must be 1x1");
    return l.value()(0, 0);
  };

  std::size_t total = 0;
  for (const auto& p : params) total += static_cast<std::size_t>(p.size());
  if (total == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);

  double worst = 0.0;
  for (int probe = 0; probe < num_probes; ++probe) {
    std::size_t flat = pick(rng);
    std::size_t which = 0;
    while (flat >= static_cast<std::size_t>(params[which].size())) {
      flat -= static_cast<std::size_t>(params[which].size());
      ++which;
    }
    double& x = params[which].data()[flat];
    const double saved = x;
    x = saved + h;
    const double up = eval();
    x = saved - h;
    const double down = eval();
    x = saved;
    const double fd = (up - down) / (2.0 * h);
    const double g = grads[which].data()[flat];
    const double rel = std::abs(g - fd) / std::max({1.0, std::abs(g), std::abs(fd)});
    worst = std::max(worst, rel);
  }
  return worst;
}

double gradcheck(Model& model, const FeatureDataset& data, int num_probes, std::uint64_t seed,
                 double h) {
  const auto rows = data.indices(Split::kTrain);
  std::vector<DenseMatrix> values;
  for (const auto& p : model.parameters()) values.push_back(p.value);
  const LossFn loss = [&](Tape& tape, std::span<const Var> params) {
    const Var logits = model.forward(tape, tape.constant(data.features), params);
    return softmax_cross_entropy(logits, data.labels, rows);
  };
  return gradcheck(loss, values, num_probes, seed, h);
}

std::string_view to_string(SweepAxis a) { return a == SweepAxis::kRank ? "rank" : "layers"; }

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "rank") return SweepAxis::kRank;
  if (s == "layers") return SweepAxis::kLayers;
  throw std::invalid_argument("unknown sweep axis '" + std::string(s) + "' (rank, layers)");
}

std::pair<double, double> mean_std(std::span<const double> xs) {
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

SweepResult sweep(const TrainConfig& base, SweepAxis axis, std::span<const Index> values,
                  std::span<const std::uint64_t> seeds, const FeatureDataset& data,
                  const Hypergraph& h) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one axis value");
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  SweepResult result;
  for (Index value : values) {
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      (axis == SweepAxis::kRank ? cfg.rank : cfg.layers) = value;
      const TrainResult r = train(cfg, data, h);
      const double acc = evaluate(*r.model, data, Split::kTest);
      result.rows.push_back({value, seed, acc});
      accs.push_back(acc);
    }
    const auto [mean, sd] = mean_std(accs);
    result.summary.push_back({value, mean, sd});
  }
  return result;
}

}  // namespace thnn
