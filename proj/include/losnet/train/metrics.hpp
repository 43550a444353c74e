// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>

#include "losnet/tensor.hpp"

namespace losnet::train {

struct MetricsReport {
  double mse = 0.0;
  double rmse = 0.0;
  double loss = 0.0;
  double mae = 0.0;
  /// Empty when the target has zero variance.
  std::optional<double> r;
  std::size_t n = 0;
};

/// (1/2N) sum (y - yhat)^2 over all elements.
double loss_half_mse(const Tensor& y, const Tensor& yhat);

/// d loss_half_mse / d yhat, shaped like yhat.
Tensor loss_half_mse_grad(const Tensor& y, const Tensor& yhat);

MetricsReport metrics_compute(const Tensor& y, const Tensor& yhat);

}  // namespace losnet::train
