// SPDX-License-Identifier: Apache-2.0
#include "losnet/nn/zoo.hpp"

#include <stdexcept>

namespace losnet::nn {

namespace {

constexpr std::size_t kHidden = 64;

std::vector<BlockSpec> conv_stack() {
  return {BlockSpec::conv(32, 3), BlockSpec::conv(64, 3)};
}

ModelSpec make(std::string name, std::size_t inputs,
               std::vector<BlockSpec> layers, std::vector<HeadSpec> head,
               bool attention = false) {
  ModelSpec s;
  s.name = std::move(name);
  s.inputs = inputs;
  s.layers = std::move(layers);
  s.head = std::move(head);
  s.attention = attention;
  return s;
}

ModelSpec recurrent_only(std::string name, std::size_t inputs, BlockKind kind,
                         std::size_t stack, Direction dir) {
  return make(std::move(name), inputs,
              {BlockSpec::recurrent(kind, kHidden, stack, dir)}, {{1}});
}

ModelSpec cnn_recurrent(std::string name, std::size_t inputs, BlockKind kind,
                        Direction dir) {
  auto layers = conv_stack();
  layers.push_back(BlockSpec::recurrent(kind, kHidden, 2, dir));
  return make(std::move(name), inputs, std::move(layers), {{1}});
}

std::vector<HeadSpec> dnn_head() {
  return {{64, Activation::relu}, {32, Activation::relu}, {1, Activation::linear}};
}

}  // namespace

std::vector<ModelSpec> default_zoo(std::size_t inputs) {
  std::vector<ModelSpec> zoo;
  zoo.push_back(recurrent_only("lstm", inputs, BlockKind::lstm, 1, Direction::forward));
  zoo.push_back(recurrent_only("bilstm", inputs, BlockKind::lstm, 1,
                               Direction::bidirectional));
  zoo.push_back(recurrent_only("gru", inputs, BlockKind::gru, 1, Direction::forward));
  zoo.push_back(make("cnn", inputs, conv_stack(), {{1}}));
  zoo.push_back(recurrent_only("s-lstm", inputs, BlockKind::lstm, 2, Direction::forward));
  zoo.push_back(recurrent_only("s-bilstm", inputs, BlockKind::lstm, 2,
                               Direction::bidirectional));
  zoo.push_back(recurrent_only("s-gru", inputs, BlockKind::gru, 2, Direction::forward));
  zoo.push_back(cnn_recurrent("cnn-lstm", inputs, BlockKind::lstm, Direction::forward));
  zoo.push_back(cnn_recurrent("cnn-bilstm", inputs, BlockKind::lstm,
                              Direction::bidirectional));
  {
    std::vector<BlockSpec> layers{
        BlockSpec::recurrent(BlockKind::gru, kHidden, 2, Direction::forward)};
    for (auto& c : conv_stack()) layers.push_back(c);
    zoo.push_back(make("gru-cnn", inputs, std::move(layers), {{1}}));
  }
  {
    auto layers = conv_stack();
    layers.push_back(BlockSpec::recurrent(BlockKind::gru, kHidden, 2));
    zoo.push_back(make(std::string(kProposedModel), inputs, layers, dnn_head()));
    zoo.push_back(make("cnn-gru-dnn-s", inputs, layers, dnn_head(), true));
  }
  return zoo;
}

const std::vector<std::string>& zoo_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& s : default_zoo(1)) n.push_back(s.name);
    return n;
  }();
  return names;
}

ModelSpec zoo_spec(std::string_view name, std::size_t inputs) {
  for (auto& s : default_zoo(inputs))
    if (s.name == name) return s;
  std::string valid;
  for (const auto& n : zoo_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "'; valid names: " + valid);
}

ModelSpec linear_regression_spec(std::size_t inputs) {
  return make("linear", inputs, {}, {{1}});
}

}  // namespace losnet::nn
