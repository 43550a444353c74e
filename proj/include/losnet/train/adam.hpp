// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "losnet/tensor.hpp"

namespace losnet::train {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// First and second moments per parameter tensor plus the step count.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(std::span<Tensor* const> params);
};

/// One bias-corrected Adam update applied in place.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state, const AdamConfig& config);

}  // namespace losnet::train
