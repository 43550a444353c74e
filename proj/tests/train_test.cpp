// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "losnet/nn/zoo.hpp"
#include "losnet/train/metrics.hpp"
#include "losnet/train/trainer.hpp"

using namespace losnet;
using namespace losnet::train;

TEST(Loss, Examples) {
  EXPECT_EQ(loss_half_mse(Tensor::vector({3, 5}), Tensor::vector({3, 5})), 0.0);
  EXPECT_EQ(loss_half_mse(Tensor::vector({3, 5}), Tensor::vector({1, 5})), 1.0);
  EXPECT_THROW(loss_half_mse(Tensor::vector({1, 2}), Tensor::vector({1})),
               DimensionError);
}

TEST(Loss, GradientMatchesFiniteDifference) {
  EXPECT_EQ(loss_half_mse_grad(Tensor::vector({3}), Tensor::vector({1})).item(), -2.0);
  Rng rng(1);
  const auto y = rng_normal(rng, {6}, 0, 1);
  auto yhat = rng_normal(rng, {6}, 0, 1);
  const auto g = loss_half_mse_grad(y, yhat);
  const double h = 1e-6;
  for (std::size_t i = 0; i < 6; ++i) {
    const double orig = yhat[i];
    yhat[i] = orig + h;
    const double up = loss_half_mse(y, yhat);
    yhat[i] = orig - h;
    const double down = loss_half_mse(y, yhat);
    yhat[i] = orig;
    EXPECT_NEAR(g[i], (up - down) / (2 * h), 1e-8);
  }
}

TEST(Metrics, HandExample) {
  const auto m = metrics_compute(Tensor::vector({3, 5}), Tensor::vector({1, 5}));
  EXPECT_EQ(m.mse, 2.0);
  EXPECT_NEAR(m.rmse, 1.414214, 1e-6);
  EXPECT_EQ(m.loss, 1.0);
  EXPECT_EQ(m.mae, 1.0);
  ASSERT_TRUE(m.r);
  EXPECT_EQ(*m.r, -1.0);
  EXPECT_EQ(m.n, 2u);
}

TEST(Metrics, PerfectAndMeanPredictions) {
  const auto y = Tensor::vector({1, 4, 2, 7});
  const auto perfect = metrics_compute(y, y);
  EXPECT_EQ(perfect.mse, 0.0);
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_EQ(*perfect.r, 1.0);
  const auto mean = metrics_compute(y, Tensor({4}, 3.5));
  EXPECT_EQ(*mean.r, 0.0);
}

TEST(Metrics, ZeroVarianceTargetLeavesRUndefined) {
  const auto m = metrics_compute(Tensor::vector({2, 2, 2}), Tensor::vector({1, 2, 3}));
  EXPECT_FALSE(m.r.has_value());
  EXPECT_FALSE(metrics_compute(Tensor::vector({2}), Tensor::vector({2})).r);
}

TEST(Metrics, Invariants) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(50);
    const auto y = rng_normal(rng, {n}, rng.uniform(-5, 5), rng.uniform(0.1, 10));
    const auto yhat = rng_normal(rng, {n}, rng.uniform(-5, 5), rng.uniform(0.1, 10));
    const auto m = metrics_compute(y, yhat);
    EXPECT_NEAR(m.rmse * m.rmse, m.mse, 1e-12 * std::max(1.0, m.mse));
    EXPECT_NEAR(m.loss, m.mse / 2, 1e-12 * std::max(1.0, m.mse));
    EXPECT_GE(m.mae, 0.0);
    EXPECT_LE(m.mae, m.rmse * (1 + 1e-12));
    ASSERT_TRUE(m.r);
    EXPECT_LE(*m.r, 1.0);
    const double c = rng.uniform(-100, 100);
    const auto shifted = metrics_compute(y + Tensor({n}, c), yhat + Tensor({n}, c));
    EXPECT_NEAR(*shifted.r, *m.r, 1e-9);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor p = Tensor::vector({1.5, -2});
  std::vector<Tensor*> ps{&p};
  auto st = AdamState::zeros_like(ps);
  const std::vector<Tensor> g{Tensor({2})};
  adam_step(ps, g, st, {});
  EXPECT_EQ(p, Tensor::vector({1.5, -2}));
  EXPECT_EQ(st.m[0], Tensor({2}));
  EXPECT_EQ(st.v[0], Tensor({2}));
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {3.0, -0.25, 1e-3}) {
    Tensor p = Tensor::vector({0.0});
    std::vector<Tensor*> ps{&p};
    auto st = AdamState::zeros_like(ps);
    adam_step(ps, std::vector<Tensor>{Tensor::vector({g})}, st, {});
    EXPECT_NEAR(std::abs(p.item()), 1e-3, 1e-6);
    EXPECT_LT(p.item() * g, 0.0);
  }
}

TEST(Adam, ZeroLearningRateIsIdentity) {
  Rng rng(3);
  Tensor p = rng_normal(rng, {3, 4}, 0, 1);
  const Tensor before = p;
  std::vector<Tensor*> ps{&p};
  auto st = AdamState::zeros_like(ps);
  AdamConfig cfg;
  cfg.learning_rate = 0.0;
  for (int i = 0; i < 5; ++i)
    adam_step(ps, std::vector<Tensor>{rng_normal(rng, {3, 4}, 0, 1)}, st, cfg);
  EXPECT_EQ(p, before);
}

TEST(Adam, MisalignedInputsRejected) {
  Tensor p = Tensor::vector({1, 2});
  std::vector<Tensor*> ps{&p};
  auto st = AdamState::zeros_like(ps);
  EXPECT_THROW(adam_step(ps, std::vector<Tensor>{Tensor({3})}, st, {}),
               DimensionError);
  EXPECT_THROW(adam_step(ps, std::vector<Tensor>{}, st, {}), DimensionError);
  AdamConfig bad;
  bad.beta1 = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(EarlyStopping, PatienceOneHaltsOneEpochAfterWorsening) {
  EarlyStopping es(1);
  const double seq[] = {5, 4, 3, 3.5, 2};
  std::size_t stopped_at = 0;
  for (std::size_t e = 0; e < 5; ++e) {
    if (es.update(e, seq[e])) {
      stopped_at = e;
      break;
    }
  }
  EXPECT_EQ(stopped_at, 3u);
  EXPECT_EQ(es.best_epoch(), 2u);
}

TEST(EarlyStopping, TiesDoNotCountAsImprovement) {
  EarlyStopping es(2);
  EXPECT_FALSE(es.update(0, 1.0));
  EXPECT_FALSE(es.update(1, 1.0));
  EXPECT_TRUE(es.update(2, 1.0));
  EXPECT_EQ(es.best_epoch(), 0u);
}

namespace {

struct LinearData {
  Tensor x, y;
};

LinearData linear_target(std::size_t rows, std::size_t features, std::uint64_t seed) {
  Rng rng(seed);
  LinearData d{rng_uniform(rng, {rows, features}, 0, 1), Tensor({rows})};
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < features; ++j) d.y[i] += d.x(i, j);
  return d;
}

}  // namespace

TEST(TrainModel, ZeroEpochsReturnsInitialModel) {
  const auto d = linear_target(50, 3, 1);
  const auto m = nn::build_model(nn::linear_regression_spec(3), 4);
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto r = train_model(m, d.x, d.y, cfg);
  EXPECT_EQ(r.model.snapshot(), m.snapshot());
  EXPECT_EQ(r.history.epochs(), 0u);
  EXPECT_FALSE(r.history.best_epoch);
}

TEST(TrainModel, LearnsLinearTarget) {
  const auto d = linear_target(1000, 4, 2);
  const auto m = nn::build_model(nn::linear_regression_spec(4), 5);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 32;
  cfg.max_epochs = 100;
  cfg.patience = 10;
  const auto r = train_model(m, d.x, d.y, cfg);

  // Validation rows are the last tenth of the seeded shuffle.
  const double initial = std::sqrt(2 * train_model(m, d.x, d.y, [&] {
                                         auto c = cfg;
                                         c.max_epochs = 1;
                                         c.learning_rate = 1e-12;
                                         return c;
                                       }()).history.val_loss[0]);
  const double final_rmse = std::sqrt(2 * r.history.val_loss[*r.history.best_epoch]);
  EXPECT_LT(final_rmse, 0.1 * initial);
}

TEST(TrainModel, BestEpochIsValidationMinimumAndRestored) {
  const auto d = linear_target(300, 3, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.max_epochs = 30;
  cfg.patience = 2;
  const auto r = train_model(nn::build_model(nn::zoo_spec("cnn", 3), 6), d.x, d.y, cfg);
  const auto& v = r.history.val_loss;
  ASSERT_TRUE(r.history.best_epoch);
  EXPECT_EQ(*std::min_element(v.begin(), v.end()), v[*r.history.best_epoch]);
  EXPECT_EQ(r.history.train_loss.size(), v.size());
}

TEST(TrainModel, BitDeterministic) {
  const auto d = linear_target(200, 3, 4);
  TrainConfig cfg;
  cfg.batch_size = 30;
  cfg.max_epochs = 3;
  const auto m = nn::build_model(nn::zoo_spec("cnn-gru-dnn", 3), 7);
  const auto a = train_model(m, d.x, d.y, cfg);
  const auto b = train_model(m, d.x, d.y, cfg);
  EXPECT_EQ(a.model.snapshot(), b.model.snapshot());
  EXPECT_EQ(a.history.val_loss, b.history.val_loss);
  cfg.seed = 43;
  EXPECT_NE(train_model(m, d.x, d.y, cfg).history.train_loss, a.history.train_loss);
}

TEST(TrainModel, ExplicitValidationSet) {
  const auto d = linear_target(120, 2, 5);
  const auto v = linear_target(30, 2, 6);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  const auto r = train_model(nn::build_model(nn::linear_regression_spec(2), 1), d.x,
                             d.y, v.x, v.y, cfg);
  EXPECT_EQ(r.history.val_loss.size(), 2u);
  EXPECT_EQ(r.history.val_loss[*r.history.best_epoch],
            loss_half_mse(v.y, r.model.predict(v.x)));
}

TEST(TrainModel, Errors) {
  const auto d = linear_target(10, 2, 7);
  const auto m = nn::build_model(nn::linear_regression_spec(2), 1);
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(train_model(m, d.x, d.y, cfg), std::invalid_argument);
  cfg = {};
  EXPECT_THROW(train_model(m, d.x, Tensor({9}), cfg), DimensionError);
  EXPECT_THROW(train_model(nn::build_model(nn::linear_regression_spec(3), 1), d.x,
                           d.y, cfg),
               DimensionError);
}

TEST(TrainModel, DivergenceNamesEpochAndBatch) {
  auto d = linear_target(64, 2, 8);
  for (std::size_t i = 0; i < 64; ++i) d.y[i] *= 1e300;
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 3;
  try {
    train_model(nn::build_model(nn::linear_regression_spec(2), 1), d.x, d.y, cfg);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1 batch 1"), std::string::npos)
        << e.what();
  }
}

TEST(TrainHistory, CsvHasHeaderAndOneRowPerEpoch) {
  TrainHistory h;
  h.train_loss = {2, 1};
  h.val_loss = {3, 1.5};
  std::ostringstream os;
  write_history_csv(os, h);
  EXPECT_EQ(os.str(), "epoch,train_loss,val_loss\n1,2,3\n2,1,1.5\n");
}
