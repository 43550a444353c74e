// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "losnet/nn/model.hpp"
#include "losnet/train/adam.hpp"

namespace losnet::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double validation_fraction = 0.1;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::optional<std::size_t> best_epoch;
  bool stopped_early = false;

  std::size_t epochs() const { return train_loss.size(); }
};

/// Writes "epoch,train_loss,val_loss" rows, epochs numbered from 1.
void write_history_csv(std::ostream& os, const TrainHistory& history);

/// Tracks the best validation loss; an epoch improves only on a strict
/// decrease. Signals a stop once `patience` consecutive epochs fail to improve.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double val_loss);
  bool improved() const { return stale_ == 0; }
  std::optional<std::size_t> best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  std::optional<std::size_t> best_epoch_;
  double best_ = 0.0;
};

struct TrainResult {
  nn::Model model;
  TrainHistory history;
};

/// Holds out the last `validation_fraction` of a seeded shuffle of the rows,
/// then trains on the rest. x is [N x F], y is [N] or [N x 1].
TrainResult train_model(nn::Model model, const Tensor& x, const Tensor& y,
                        const TrainConfig& config);

/// Trains with an explicit validation set; `validation_fraction` is ignored.
TrainResult train_model(nn::Model model, const Tensor& x, const Tensor& y,
                        const Tensor& x_val, const Tensor& y_val,
                        const TrainConfig& config);

/// Copies the selected rows of a [N x ...] tensor.
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);

}  // namespace losnet::train
