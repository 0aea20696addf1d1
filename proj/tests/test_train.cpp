#include "oracles.hpp"

#include "thnn/train.hpp"
#include "thnn/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace thnn;

namespace {

std::vector<Index> all_rows(Index n) {
  std::vector<Index> r(static_cast<std::size_t>(n));
  std::iota(r.begin(), r.end(), Index{0});
  return r;
}

struct Task {
  Hypergraph h;
  FeatureDataset data;
};

Task small_task(std::uint64_t seed) {
  auto [h, data] = synthetic_highorder(60, 3, 2, 0.1, seed);
  return {std::move(h), std::move(data)};
}

TrainConfig small_config() {
  TrainConfig c;
  c.rank = 8;
  c.hidden_dim = 8;
  c.epochs = 20;
  c.patience = 0;
  return c;
}

}  // namespace

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  const std::vector<int> labels{0, 2, 1};
  EXPECT_NEAR(softmax_cross_entropy(DenseMatrix::Zero(3, 3), labels, all_rows(3)), std::log(3.0),
              1e-15);
}

TEST(CrossEntropy, LargeMarginApproachesZero) {
  DenseMatrix logits(1, 2);
  logits << 50, 0;
  const std::vector<int> labels{0};
  EXPECT_LT(softmax_cross_entropy(logits, labels, all_rows(1)), 1e-20);
  logits << 1000, -1000;
  EXPECT_TRUE(std::isfinite(softmax_cross_entropy(logits, labels, all_rows(1))));
}

TEST(CrossEntropy, MatchesDirectFormulaOnMaskedRows) {
  std::mt19937_64 rng(1);
  const DenseMatrix logits = oracle::random_matrix(4, 3, rng, -3, 3);
  const std::vector<int> labels{2, 0, 1, 1};
  const std::vector<Index> rows{0, 2, 3};
  double expected = 0.0;
  for (Index r : rows) {
    double z = 0.0;
    for (Index c = 0; c < 3; ++c) z += std::exp(logits(r, c));
    expected -= std::log(std::exp(logits(r, labels[r])) / z);
  }
  expected /= 3.0;
  EXPECT_NEAR(softmax_cross_entropy(logits, labels, rows), expected, 1e-14);

  std::vector<DenseMatrix> params{logits};
  const LossFn loss = [&](Tape&, std::span<const Var> v) {
    return softmax_cross_entropy(v[0], labels, rows);
  };
  EXPECT_LT(gradcheck(loss, params, 12, 2), 1e-7);
}

TEST(CrossEntropy, Errors) {
  const std::vector<int> labels{0, 3};
  EXPECT_THROW(softmax_cross_entropy(DenseMatrix::Zero(2, 3), labels, {}), std::invalid_argument);
  EXPECT_THROW(softmax_cross_entropy(DenseMatrix::Zero(2, 3), labels, all_rows(2)),
               DimensionError);
  const std::vector<Index> bad{5};
  EXPECT_THROW(softmax_cross_entropy(DenseMatrix::Zero(2, 3), labels, bad), DimensionError);
}

TEST(Accuracy, TiesGoToLowestIndex) {
  DenseMatrix logits(3, 3);
  logits << 1, 1, 0,
            0, 2, 2,
            0, 0, 5;
  const std::vector<int> labels{0, 2, 2};
  EXPECT_DOUBLE_EQ(accuracy(logits, labels, all_rows(3)), 2.0 / 3.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Bias correction makes the first update lr * g / (|g| + eps').
  std::vector<NamedParameter> ps{{"w", DenseMatrix::Constant(1, 3, 1.0)}};
  DenseMatrix g(1, 3);
  g << 0.5, -2.0, 0.0;
  AdamState state;
  adam_step(state, ps, {g}, 0.001);
  EXPECT_NEAR(ps[0].value(0, 0), 1.0 - 0.001, 1e-10);
  EXPECT_NEAR(ps[0].value(0, 1), 1.0 + 0.001, 1e-10);
  EXPECT_EQ(ps[0].value(0, 2), 1.0);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, MatchesRecurrenceOverSeveralSteps) {
  std::mt19937_64 rng(3);
  std::vector<NamedParameter> ps{{"w", oracle::random_matrix(2, 2, rng)}};
  DenseMatrix w = ps[0].value, m = DenseMatrix::Zero(2, 2), v = DenseMatrix::Zero(2, 2);
  AdamState state;
  for (int t = 1; t <= 5; ++t) {
    const DenseMatrix g = oracle::random_matrix(2, 2, rng);
    adam_step(state, ps, {g}, 0.01);
    for (Index i = 0; i < 4; ++i) {
      m.data()[i] = 0.9 * m.data()[i] + 0.1 * g.data()[i];
      v.data()[i] = 0.999 * v.data()[i] + 0.001 * g.data()[i] * g.data()[i];
      const double mh = m.data()[i] / (1 - std::pow(0.9, t));
      const double vh = v.data()[i] / (1 - std::pow(0.999, t));
      w.data()[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  EXPECT_LT((ps[0].value - w).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Adam, MismatchedGradients) {
  std::vector<NamedParameter> ps{{"w", DenseMatrix::Zero(2, 2)}};
  AdamState state;
  EXPECT_THROW(adam_step(state, ps, {}, 0.1), ArityError);
  EXPECT_THROW(adam_step(state, ps, {DenseMatrix::Zero(2, 3)}, 0.1), DimensionError);
}

TEST(Training, ZeroLearningRateKeepsLossConstant) {
  const Task t = small_task(1);
  TrainConfig c = small_config();
  c.learning_rate = 0.0;
  c.epochs = 5;
  const TrainResult r = train(c, t.data, t.h);
  ASSERT_EQ(r.history.size(), 5u);
  for (const auto& m : r.history) EXPECT_EQ(m.loss, r.history[0].loss);
}

TEST(Training, SameSeedSameHistory) {
  const Task t = small_task(2);
  for (ModelKind kind : {ModelKind::kThnn, ModelKind::kHgnn, ModelKind::kGcn}) {
    TrainConfig c = small_config();
    c.model = kind;
    EXPECT_EQ(train(c, t.data, t.h).history, train(c, t.data, t.h).history);
  }
}

TEST(Training, InitialLossNearLogC) {
  const Task t = small_task(3);
  TrainConfig c = small_config();
  c.epochs = 1;
  const double l0 = train(c, t.data, t.h).history[0].loss;
  EXPECT_NEAR(l0, std::log(2.0), 0.2 * std::log(2.0));
}

TEST(Training, SmallStepDecreasesLoss) {
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Task t = small_task(seed);
    TrainConfig c = small_config();
    c.seed = seed;
    c.learning_rate = 1e-4;
    c.epochs = 2;
    const auto h = train(c, t.data, t.h).history;
    violations += h[1].loss < h[0].loss ? 0 : 1;
  }
  EXPECT_LE(violations, 1);
}

TEST(Training, HugeLearningRateDiverges) {
  const Task t = small_task(4);
  TrainConfig c = small_config();
  c.model = ModelKind::kGcn;
  c.learning_rate = 1e200;
  try {
    train(c, t.data, t.h);
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("last finite loss"), std::string::npos);
  }
}

TEST(Training, EarlyStoppingRestoresBestParameters) {
  const Task t = small_task(5);
  TrainConfig c = small_config();
  c.epochs = 60;
  c.patience = 5;
  c.learning_rate = 0.01;
  const TrainResult r = train(c, t.data, t.h);
  ASSERT_GE(r.best_epoch, 1);
  const auto& best = r.history[static_cast<std::size_t>(r.best_epoch - 1)];
  for (const auto& m : r.history) EXPECT_LE(m.val_acc, best.val_acc);
  EXPECT_DOUBLE_EQ(evaluate(*r.model, t.data, Split::kVal), best.val_acc);
  EXPECT_DOUBLE_EQ(evaluate(*r.model, t.data, Split::kTest), best.test_acc);
}

TEST(Training, UniformModeOnMixedEdgesNamesExtensions) {
  std::mt19937_64 rng(6);
  const Hypergraph h(6, {{0, 1}, {2, 3, 4}, {1, 5}});
  try {
    make_model(TrainConfig{}, h, 2, 2);
    FAIL() << "expected ModeError";
  } catch (const ModeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("global-node"), std::string::npos);
    EXPECT_NE(msg.find("multi-uniform"), std::string::npos);
  }
  TrainConfig c;
  c.nonuniform_mode = NonuniformMode::kMultiUniform;
  EXPECT_EQ(make_model(c, h, 2, 2)->kind(), "thnn-multi-uniform");
  c.nonuniform_mode = NonuniformMode::kGlobalNode;
  EXPECT_EQ(make_model(c, h, 2, 2)->kind(), "thnn-global-node");
}

TEST(TrainConfig, Validation) {
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](TrainConfig& c) { c.rank = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.layers = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.hidden_dim = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.learning_rate = -1; }).validate(),
               std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.learning_rate = INFINITY; }).validate(),
               std::invalid_argument);
  EXPECT_THROW(bad([](TrainConfig& c) { c.epochs = -1; }).validate(), std::invalid_argument);
  EXPECT_NO_THROW(TrainConfig{}.validate());
}

TEST(TrainConfig, NamesRoundTrip) {
  for (ModelKind k : {ModelKind::kThnn, ModelKind::kHgnn, ModelKind::kGcn}) {
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
  }
  for (NonuniformMode m :
       {NonuniformMode::kUniform, NonuniformMode::kGlobalNode, NonuniformMode::kMultiUniform}) {
    EXPECT_EQ(parse_nonuniform_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_model_kind("mlp"), std::invalid_argument);
  EXPECT_THROW(parse_sweep_axis("width"), std::invalid_argument);
  EXPECT_EQ(default_learning_rate(NonuniformMode::kUniform), 0.001);
  EXPECT_EQ(default_learning_rate(NonuniformMode::kGlobalNode), 0.005);
}

TEST(Sweep, SingleValueAndSummary) {
  const Task t = small_task(7);
  TrainConfig c = small_config();
  c.epochs = 5;
  const std::vector<Index> values{2};
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const SweepResult r = sweep(c, SweepAxis::kRank, values, seeds, t.data, t.h);
  ASSERT_EQ(r.rows.size(), 3u);
  ASSERT_EQ(r.summary.size(), 1u);
  std::vector<double> accs;
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.axis_value, 2);
    accs.push_back(row.test_acc);
  }
  const auto [mean, sd] = mean_std(accs);
  EXPECT_DOUBLE_EQ(r.summary[0].mean, mean);
  EXPECT_DOUBLE_EQ(r.summary[0].stddev, sd);
  EXPECT_THROW(sweep(c, SweepAxis::kRank, {}, seeds, t.data, t.h), std::invalid_argument);
}

TEST(MeanStd, SampleStandardDeviation) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto [m, s] = mean_std(xs);
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
  const std::vector<double> one{7};
  EXPECT_EQ(mean_std(one).second, 0.0);
}
