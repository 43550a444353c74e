// SPDX-License-Identifier: Apache-2.0
#include "losnet/train/metrics.hpp"

#include <cmath>

#include "losnet/error.hpp"

namespace losnet::train {

namespace {

void check_pair(const Tensor& y, const Tensor& yhat, const char* op) {
  if (y.size() != yhat.size()) {
    throw DimensionError(std::string(op) + ": target " + shape_string(y.shape()) +
                         " and prediction " + shape_string(yhat.shape()) +
                         " differ in length");
  }
  require_finite(y, op);
  require_finite(yhat, op);
}

}  // namespace

double loss_half_mse(const Tensor& y, const Tensor& yhat) {
  check_pair(y, yhat, "loss_half_mse");
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - yhat[i];
    sse += d * d;
  }
  return sse / (2.0 * static_cast<double>(y.size()));
}

Tensor loss_half_mse_grad(const Tensor& y, const Tensor& yhat) {
  check_pair(y, yhat, "loss_half_mse_grad");
  Tensor g(yhat.shape());
  const double n = static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = (yhat[i] - y[i]) / n;
  return g;
}

MetricsReport metrics_compute(const Tensor& y, const Tensor& yhat) {
  check_pair(y, yhat, "metrics_compute");
  const std::size_t n = y.size();
  const double nd = static_cast<double>(n);
  double sse = 0.0, sae = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = y[i] - yhat[i];
    sse += d * d;
    sae += std::abs(d);
    sum += y[i];
  }
  const double mean = sum / nd;
  double sst = 0.0;
  for (std::size_t i = 0; i < n; ++i) sst += (y[i] - mean) * (y[i] - mean);

  MetricsReport r;
  r.n = n;
  r.mse = sse / nd;
  r.rmse = std::sqrt(r.mse);
  r.loss = sse / (2.0 * nd);
  r.mae = sae / nd;
  if (n >= 2 && sst > 0.0) r.r = 1.0 - sse / sst;
  return r;
}

}  // namespace losnet::train
