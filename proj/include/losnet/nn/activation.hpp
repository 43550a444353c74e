// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "losnet/tensor.hpp"

namespace losnet::nn {

enum class Activation { linear, relu, sigmoid, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

template <typename Scalar>
inline Scalar sigmoid(Scalar v) {
  return Scalar(1) / (Scalar(1) + std::exp(-v));
}

template <typename Scalar>
inline Scalar activate(Activation kind, Scalar v) {
  switch (kind) {
    case Activation::relu:
      return v > Scalar(0) ? v : Scalar(0);
    case Activation::sigmoid:
      return sigmoid(v);
    case Activation::tanh:
      return std::tanh(v);
    case Activation::linear:
      break;
  }
  return v;
}

/// Derivative expressed through the pre-activation `v`.
template <typename Scalar>
inline Scalar activate_grad(Activation kind, Scalar v) {
  switch (kind) {
    case Activation::relu:
      return v > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::sigmoid: {
      const Scalar s = sigmoid(v);
      return s * (Scalar(1) - s);
    }
    case Activation::tanh: {
      const Scalar t = std::tanh(v);
      return Scalar(1) - t * t;
    }
    case Activation::linear:
      break;
  }
  return Scalar(1);
}

template <typename Scalar>
using RowArray =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Packet-friendly logistic built on exp; saturates without overflow.
template <typename Derived>
RowArray<typename Derived::Scalar> sigmoid_array(
    const Eigen::ArrayBase<Derived>& a) {
  using S = typename Derived::Scalar;
  return (S(1) + (-a).exp()).inverse();
}

/// Packet-friendly tanh in odd-symmetric form: sign(v)(1-e)/(1+e) with
/// e = exp(-2|v|) in (0,1], so no intermediate overflows.
template <typename Derived>
RowArray<typename Derived::Scalar> tanh_array(const Eigen::ArrayBase<Derived>& a) {
  using S = typename Derived::Scalar;
  const RowArray<S> e = (S(-2) * a.abs()).exp();
  return a.sign() * (S(1) - e) / (S(1) + e);
}

template <typename Scalar>
BasicTensor<Scalar> activation_apply(Activation kind,
                                     const BasicTensor<Scalar>& x) {
  return map(x, [kind](Scalar v) { return activate(kind, v); });
}

}  // namespace losnet::nn
