// SPDX-License-Identifier: Apache-2.0
#include "losnet/train/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "losnet/error.hpp"

namespace losnet::train {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("adam: learning rate must be finite and >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0))
    throw std::invalid_argument("adam: beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("adam: beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam: epsilon must be > 0");
}

AdamState AdamState::zeros_like(std::span<Tensor* const> params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw DimensionError("adam: " + std::to_string(params.size()) +
                         " parameters, " + std::to_string(grads.size()) +
                         " gradients, " + std::to_string(state.m.size()) +
                         " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i]->shape();
    if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s) {
      throw DimensionError("adam: parameter " + std::to_string(i) + " is " +
                           shape_string(s) + ", gradient is " +
                           shape_string(grads[i].shape()));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->as_vector();
    auto m = state.m[i].as_vector();
    auto v = state.v[i].as_vector();
    const auto g = grads[i].as_vector();
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    p.array() -= config.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + config.epsilon);
  }
}

}  // namespace losnet::train
