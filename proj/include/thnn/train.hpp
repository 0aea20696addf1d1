// Full-batch node classification: loss, Adam, metrics, gradient checks and
// hyper-parameter sweeps.
#pragma once

#include "thnn/build.hpp"
#include "thnn/model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace thnn {

enum class ModelKind { kThnn, kHgnn, kGcn };
enum class NonuniformMode { kUniform, kGlobalNode, kMultiUniform };

std::string_view to_string(ModelKind k);
std::string_view to_string(NonuniformMode m);
ModelKind parse_model_kind(std::string_view s);
NonuniformMode parse_nonuniform_mode(std::string_view s);

/// 0.001 for plain uniform training, 0.005 for the two extensions.
double default_learning_rate(NonuniformMode mode);

struct TrainConfig {
  ModelKind model = ModelKind::kThnn;
  NonuniformMode nonuniform_mode = NonuniformMode::kUniform;
  Index rank = 128;
  Index layers = 2;
  Index hidden_dim = 128;
  double learning_rate = 0.001;
  int epochs = 200;
  /// Early stopping on validation accuracy; 0 trains for exactly `epochs`.
  int patience = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool use_concat_one = true;
  bool use_inner_tanh = true;

  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a hypergraph cannot be handled by the requested model mode.
class ModeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::unique_ptr<Model> make_model(const TrainConfig& config, const Hypergraph& h,
                                  Index input_dim, int num_classes);

/// Mean over `rows` of -log softmax(logits)[label], row-max stabilized.
Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const Index> rows);
double softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                             std::span<const Index> rows);

/// Fraction of `rows` whose argmax (lowest index on ties) equals the label.
double accuracy(const DenseMatrix& logits, std::span<const int> labels,
                std::span<const Index> rows);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::vector<NamedParameter>& params,
               const std::vector<DenseMatrix>& grads, double lr, const AdamOptions& opts = {});

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN when there is no validation split
  double test_acc = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainResult {
  std::unique_ptr<Model> model;
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
};

/// Trains a fresh model from `config`. Metrics for epoch e are measured at the
/// parameters used for that epoch's gradient. With early stopping the
/// best-validation parameters are restored.
TrainResult train(const TrainConfig& config, const FeatureDataset& data, const Hypergraph& h);

/// Trains an existing model in place.
std::vector<EpochMetrics> train_model(Model& model, const TrainConfig& config,
                                      const FeatureDataset& data, int* best_epoch = nullptr);

double evaluate(const Model& model, const FeatureDataset& data, Split split);

/// Loss as a function of tape-bound parameters.
using LossFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Max over random coordinates of |g_tape - g_fd| / max(1, |g_tape|, |g_fd|),
/// g_fd a central difference with step h. `params` are perturbed and restored.
double gradcheck(const LossFn& loss, std::vector<DenseMatrix>& params, int num_probes,
                 std::uint64_t seed, double h = 1e-6);

/// Gradient check of the training loss of `model` on the train split.
double gradcheck(Model& model, const FeatureDataset& data, int num_probes, std::uint64_t seed,
                 double h = 1e-6);

enum class SweepAxis { kRank, kLayers };
std::string_view to_string(SweepAxis a);
SweepAxis parse_sweep_axis(std::string_view s);

struct SweepRow {
  Index axis_value = 0;
  std::uint64_t seed = 0;
  double test_acc = 0.0;
};

struct SweepSummary {
  Index axis_value = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummary> summary;
};

/// Trains one model per (value, seed) from `base` with the axis overridden.
SweepResult sweep(const TrainConfig& base, SweepAxis axis, std::span<const Index> values,
                  std::span<const std::uint64_t> seeds, const FeatureDataset& data,
                  const Hypergraph& h);

/// Mean and sample standard deviation.
std::pair<double, double> mean_std(std::span<const double> xs);

}  // namespace thnn
