// SPDX-License-Identifier: Apache-2.0
#include "losnet/train/trainer.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "losnet/error.hpp"
#include "losnet/rng.hpp"
#include "losnet/train/metrics.hpp"

namespace losnet::train {

void TrainConfig::validate() const {
  adam().validate();
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("train: learning rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("train: validation fraction must lie in [0,1)");
}

void write_history_csv(std::ostream& os, const TrainHistory& h) {
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.epochs(); ++e)
    os << e + 1 << ',' << h.train_loss[e] << ',' << h.val_loss[e] << '\n';
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (!best_epoch_ || val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
  if (t.rank() == 0) throw DimensionError("gather_rows: scalar tensor");
  if (rows.empty()) throw DimensionError("gather_rows: no rows selected");
  Shape shape = t.shape();
  const std::size_t stride = t.size() / shape[0];
  const std::size_t n = shape[0];
  shape[0] = rows.size();
  Tensor out(shape);
  const double* src = t.raw();
  double* dst = out.raw();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n)
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) +
                           " out of range for " + shape_string(t.shape()));
    std::copy_n(src + rows[i] * stride, stride, dst + i * stride);
  }
  return out;
}

namespace {

Tensor as_column(const Tensor& y, std::size_t rows, const char* what) {
  if (y.size() != rows || !(y.rank() == 1 || (y.rank() == 2 && y.extent(1) == 1)))
    throw DimensionError(std::string("train: ") + what + " target " +
                         shape_string(y.shape()) + " does not match " +
                         std::to_string(rows) + " rows");
  return y.reshaped({rows, 1});
}

double evaluate_loss(const nn::Model& model, const Tensor& x, const Tensor& y) {
  return loss_half_mse(y, model.predict(x));
}

TrainResult run(nn::Model model, const Tensor& x, const Tensor& y,
                const Tensor* x_val, const Tensor* y_val,
                const TrainConfig& config, const Rng& rng) {
  TrainHistory history;
  if (config.max_epochs == 0) return {std::move(model), std::move(history)};

  const std::size_t n = x.extent(0);
  const auto params = model.mutable_parameters();
  AdamState state = AdamState::zeros_like(params);
  const AdamConfig adam = config.adam();
  EarlyStopping stopper(config.patience);
  std::vector<Tensor> best = model.snapshot();

  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng epoch_rng = rng.split(epoch + 1);
    shuffle(std::span<std::size_t>(order), epoch_rng);

    double epoch_sse = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Tensor xb = gather_rows(x, rows);
      const Tensor yb = gather_rows(y, rows);
      const auto where = [&] {
        return "epoch " + std::to_string(epoch + 1) + " batch " +
               std::to_string(batch_index + 1);
      };
      try {
        const auto trace = model.forward(xb);
        const double loss = loss_half_mse(yb, trace.output);
        if (!std::isfinite(loss))
          throw TrainingError("train: non-finite loss at " + where());
        epoch_sse += 2.0 * loss * static_cast<double>(rows.size());
        const auto grads =
            model.backward(trace, loss_half_mse_grad(yb, trace.output));
        adam_step(model.mutable_parameters(), grads, state, adam);
      } catch (const NonFiniteError& e) {
        throw TrainingError("train: non-finite value at " + where() + ": " +
                            e.what());
      }
    }
    const double train_loss = epoch_sse / (2.0 * static_cast<double>(n));
    double val_loss;
    try {
      val_loss = x_val ? evaluate_loss(model, *x_val, *y_val)
                       : evaluate_loss(model, x, y);
    } catch (const NonFiniteError& e) {
      throw TrainingError("train: non-finite validation output at epoch " +
                          std::to_string(epoch + 1) + ": " + e.what());
    }
    history.train_loss.push_back(train_loss);
    history.val_loss.push_back(val_loss);

    const bool stop = stopper.update(epoch, val_loss);
    if (stopper.improved()) best = model.snapshot();
    if (stop) {
      history.stopped_early = epoch + 1 < config.max_epochs;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  model.restore(best);
  return {std::move(model), std::move(history)};
}

void check_features(const nn::Model& model, const Tensor& x, const char* what) {
  if (x.rank() != 2 || x.extent(1) != model.spec().inputs)
    throw DimensionError(std::string("train: ") + what + " features " +
                         shape_string(x.shape()) + " do not match model '" +
                         model.spec().name + "' with " +
                         std::to_string(model.spec().inputs) + " inputs");
}

}  // namespace

TrainResult train_model(nn::Model model, const Tensor& x, const Tensor& y,
                        const TrainConfig& config) {
  config.validate();
  check_features(model, x, "training");
  const std::size_t n = x.extent(0);
  const Tensor yc = as_column(y, n, "training");
  const std::size_t n_val = static_cast<std::size_t>(
      std::floor(config.validation_fraction * static_cast<double>(n)));
  if (n_val >= n)
    throw DimensionError("train: validation split leaves no training rows");

  const Rng rng(config.seed);
  if (n_val == 0) return run(std::move(model), x, yc, nullptr, nullptr, config, rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = rng.split(0);
  shuffle(std::span<std::size_t>(order), split_rng);
  const std::span<const std::size_t> all(order);
  const auto train_rows = all.first(n - n_val);
  const auto val_rows = all.last(n_val);
  const Tensor x_val = gather_rows(x, val_rows);
  const Tensor y_val = gather_rows(yc, val_rows);
  return run(std::move(model), gather_rows(x, train_rows), gather_rows(yc, train_rows),
             &x_val, &y_val, config, rng);
}

TrainResult train_model(nn::Model model, const Tensor& x, const Tensor& y,
                        const Tensor& x_val, const Tensor& y_val,
                        const TrainConfig& config) {
  config.validate();
  check_features(model, x, "training");
  check_features(model, x_val, "validation");
  const Tensor yc = as_column(y, x.extent(0), "training");
  const Tensor yv = as_column(y_val, x_val.extent(0), "validation");
  return run(std::move(model), x, yc, &x_val, &yv, config, Rng(config.seed));
}

}  // namespace losnet::train
