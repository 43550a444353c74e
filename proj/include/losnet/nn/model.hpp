// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "losnet/nn/layers.hpp"
#include "losnet/nn/recurrent.hpp"

namespace losnet::nn {

enum class BlockKind { conv, gru, lstm };

std::string_view to_string(BlockKind k);
BlockKind parse_block_kind(std::string_view name);

/// One entry of the sequence part of a model. Conv blocks use
/// filters/kernel/padding/activation; recurrent blocks use
/// hidden/stack/direction.
struct BlockSpec {
  BlockKind kind = BlockKind::conv;
  std::size_t filters = 0;
  std::size_t kernel = 3;
  Padding padding = Padding::same;
  Activation activation = Activation::relu;
  std::size_t hidden = 0;
  std::size_t stack = 1;
  Direction direction = Direction::forward;

  static BlockSpec conv(std::size_t filters, std::size_t kernel = 3,
                        Padding padding = Padding::same,
                        Activation activation = Activation::relu);
  static BlockSpec recurrent(BlockKind kind, std::size_t hidden,
                             std::size_t stack = 1,
                             Direction direction = Direction::forward);

  bool is_recurrent() const { return kind != BlockKind::conv; }
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct HeadSpec {
  std::size_t units = 1;
  Activation activation = Activation::linear;
  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

/// Declarative model description. Tabular rows of `inputs` features are
/// presented to conv/recurrent blocks as a length-`inputs` sequence with one
/// channel. When `attention` is set, a self-attention layer is placed in
/// front of the first recurrent block (or at the end of the sequence part).
struct ModelSpec {
  std::string name;
  std::size_t inputs = 0;
  std::vector<BlockSpec> layers;
  bool attention = false;
  std::vector<HeadSpec> head;

  /// Index into `layers` of the first recurrent block, or -1.
  std::ptrdiff_t first_recurrent() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

void to_json(nlohmann::json& j, const BlockSpec& b);
void from_json(const nlohmann::json& j, BlockSpec& b);
void to_json(nlohmann::json& j, const HeadSpec& h);
void from_json(const nlohmann::json& j, HeadSpec& h);
void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

/// Ordered layer pipeline mapping [batch x inputs] to [batch x 1].
class Model {
 public:
  Model(ModelSpec spec, std::vector<std::unique_ptr<Layer>> layers);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  struct Trace {
    Tensor output;
    std::vector<std::unique_ptr<LayerCache>> caches;
  };

  Trace forward(const Tensor& x) const;
  /// Parameter gradients aligned with parameters().
  std::vector<Tensor> backward(const Trace& trace,
                               const Tensor& upstream) const;
  /// Inference in row chunks; returns [rows x 1].
  Tensor predict(const Tensor& x, std::size_t chunk = 256) const;

  std::vector<const Tensor*> parameters() const;
  std::vector<Tensor*> mutable_parameters();
  std::size_t parameter_count() const;

  std::vector<Tensor> snapshot() const;
  void restore(std::span<const Tensor> values);

 private:
  void check_input(const Tensor& x) const;

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Instantiates layers in order, drawing every initial weight from `rng`.
/// Throws DimensionError naming the seam on inconsistent specs.
Model build_model(const ModelSpec& spec, Rng& rng);
Model build_model(const ModelSpec& spec, std::uint64_t seed);

}  // namespace losnet::nn
