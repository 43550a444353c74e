// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "losnet/nn/activation.hpp"
#include "losnet/nn/layer.hpp"
#include "losnet/rng.hpp"

namespace losnet::nn {

/// y = x W' + b on [batch x in] inputs.
class DenseLayer final : public Layer {
 public:
  DenseLayer(Tensor weights, Tensor bias);
  static DenseLayer glorot(std::size_t in, std::size_t out, Rng& rng);

  const Tensor& weights() const { return weights_; }
  const Tensor& bias() const { return bias_; }
  std::size_t in_features() const { return weights_.extent(1); }
  std::size_t out_features() const { return weights_.extent(0); }

  std::string_view kind() const override { return "dense"; }
  Shape output_shape(const Shape& input) const override;
  ForwardResult forward(const Tensor& x) const override;
  Tensor infer(const Tensor& x) const override;
  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override;
  std::unique_ptr<Layer> clone() const override;
  std::vector<const Tensor*> parameters() const override {
    return {&weights_, &bias_};
  }

 private:
  Tensor weights_;
  Tensor bias_;
};

enum class Padding { valid, same };

std::string_view to_string(Padding p);
Padding parse_padding(std::string_view name);

/// Cross-correlation over [batch x channels x length]; kernels are
/// [filters x channels x k]. No activation is applied here.
class Conv1dLayer final : public Layer {
 public:
  Conv1dLayer(Tensor kernels, Tensor bias, Padding padding);
  static Conv1dLayer glorot(std::size_t in_channels, std::size_t filters,
                            std::size_t k, Padding padding, Rng& rng);

  const Tensor& kernels() const { return kernels_; }
  const Tensor& bias() const { return bias_; }
  Padding padding() const { return padding_; }
  std::size_t filters() const { return kernels_.extent(0); }
  std::size_t in_channels() const { return kernels_.extent(1); }
  std::size_t kernel_size() const { return kernels_.extent(2); }
  std::size_t output_length(std::size_t length) const;

  std::string_view kind() const override { return "conv1d"; }
  Shape output_shape(const Shape& input) const override;
  ForwardResult forward(const Tensor& x) const override;
  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override;
  std::unique_ptr<Layer> clone() const override;
  std::vector<const Tensor*> parameters() const override {
    return {&kernels_, &bias_};
  }

 private:
  Tensor forward_impl(const Tensor& x) const;

  Tensor kernels_;
  Tensor bias_;
  Padding padding_;
};

class ActivationLayer final : public Layer {
 public:
  explicit ActivationLayer(Activation a) : activation_(a) {}
  Activation activation() const { return activation_; }

  std::string_view kind() const override { return "activation"; }
  Shape output_shape(const Shape& input) const override { return input; }
  ForwardResult forward(const Tensor& x) const override;
  Tensor infer(const Tensor& x) const override;
  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  Activation activation_;
};

/// Reinterprets the per-sample extents; the leading batch axis is kept.
class ReshapeLayer final : public Layer {
 public:
  explicit ReshapeLayer(Shape sample_shape);

  std::string_view kind() const override { return "reshape"; }
  Shape output_shape(const Shape& input) const override;
  ForwardResult forward(const Tensor& x) const override;
  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  Shape sample_shape_;
};

/// [batch x a x b] -> [batch x b x a]; bridges channel-first convolutions
/// and step-major recurrent layers.
class TransposeLayer final : public Layer {
 public:
  std::string_view kind() const override { return "transpose"; }
  Shape output_shape(const Shape& input) const override;
  ForwardResult forward(const Tensor& x) const override;
  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override;
  std::unique_ptr<Layer> clone() const override;
};

Tensor transpose_last2(const Tensor& x);

/// Single-head scaled dot-product self-attention over [batch x steps x d]:
/// softmax(Q K' / sqrt(d)) V with Q = X Wq', K = X Wk', V = X Wv'.
class SelfAttentionLayer final : public Layer {
 public:
  SelfAttentionLayer(Tensor w_q, Tensor w_k, Tensor w_v);
  static SelfAttentionLayer glorot(std::size_t d, Rng& rng);

  std::size_t width() const { return w_q_.extent(0); }

  /// Attention weights [batch x steps x steps]; every row sums to 1.
  Tensor attention_weights(const Tensor& x) const;

  std::string_view kind() const override { return "attention"; }
  Shape output_shape(const Shape& input) const override;
  ForwardResult forward(const Tensor& x) const override;
  LayerGradients backward(const LayerCache& cache,
                          const Tensor& upstream) const override;
  std::unique_ptr<Layer> clone() const override;
  std::vector<const Tensor*> parameters() const override {
    return {&w_q_, &w_k_, &w_v_};
  }

 private:
  void check_input(const Tensor& x) const;

  Tensor w_q_, w_k_, w_v_;
};

}  // namespace losnet::nn
