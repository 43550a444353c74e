// SPDX-License-Identifier: Apache-2.0
#include "losnet/nn/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace losnet::nn {

std::string_view to_string(BlockKind k) {
  switch (k) {
    case BlockKind::gru:
      return "gru";
    case BlockKind::lstm:
      return "lstm";
    case BlockKind::conv:
      break;
  }
  return "conv";
}

BlockKind parse_block_kind(std::string_view name) {
  if (name == "conv") return BlockKind::conv;
  if (name == "gru") return BlockKind::gru;
  if (name == "lstm") return BlockKind::lstm;
  throw std::invalid_argument("unknown layer kind '" + std::string(name) + "'");
}

std::string_view to_string(Direction d) {
  return d == Direction::bidirectional ? "bidirectional" : "forward";
}

Direction parse_direction(std::string_view name) {
  if (name == "forward" || name == "uni") return Direction::forward;
  if (name == "bidirectional" || name == "bi") return Direction::bidirectional;
  throw std::invalid_argument("unknown direction '" + std::string(name) + "'");
}

BlockSpec BlockSpec::conv(std::size_t filters, std::size_t kernel,
                          Padding padding, Activation activation) {
  BlockSpec b;
  b.kind = BlockKind::conv;
  b.filters = filters;
  b.kernel = kernel;
  b.padding = padding;
  b.activation = activation;
  return b;
}

BlockSpec BlockSpec::recurrent(BlockKind kind, std::size_t hidden,
                               std::size_t stack, Direction direction) {
  BlockSpec b;
  b.kind = kind;
  b.hidden = hidden;
  b.stack = stack;
  b.direction = direction;
  return b;
}

std::ptrdiff_t ModelSpec::first_recurrent() const {
  const auto it = std::find_if(layers.begin(), layers.end(),
                               [](const BlockSpec& b) { return b.is_recurrent(); });
  return it == layers.end() ? -1 : it - layers.begin();
}

// ---------------------------------------------------------------- json

void to_json(nlohmann::json& j, const BlockSpec& b) {
  j = nlohmann::json{{"kind", to_string(b.kind)}};
  if (b.kind == BlockKind::conv) {
    j["filters"] = b.filters;
    j["kernel"] = b.kernel;
    j["padding"] = to_string(b.padding);
    j["activation"] = to_string(b.activation);
  } else {
    j["hidden"] = b.hidden;
    j["stack"] = b.stack;
    j["direction"] = to_string(b.direction);
  }
}

void from_json(const nlohmann::json& j, BlockSpec& b) {
  b = BlockSpec{};
  b.kind = parse_block_kind(j.at("kind").get<std::string>());
  if (b.kind == BlockKind::conv) {
    b.filters = j.at("filters").get<std::size_t>();
    b.kernel = j.value("kernel", std::size_t{3});
    b.padding = parse_padding(j.value("padding", std::string("same")));
    b.activation = parse_activation(j.value("activation", std::string("relu")));
  } else {
    b.hidden = j.at("hidden").get<std::size_t>();
    b.stack = j.value("stack", std::size_t{1});
    b.direction = parse_direction(j.value("direction", std::string("forward")));
  }
}

void to_json(nlohmann::json& j, const HeadSpec& h) {
  j = nlohmann::json{{"units", h.units}, {"activation", to_string(h.activation)}};
}

void from_json(const nlohmann::json& j, HeadSpec& h) {
  if (j.is_number_unsigned()) {
    h.units = j.get<std::size_t>();
    h.activation = Activation::linear;
    return;
  }
  h.units = j.at("units").get<std::size_t>();
  h.activation = parse_activation(j.value("activation", std::string("linear")));
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"name", s.name},          {"inputs", s.inputs},
                     {"layers", s.layers},      {"attention", s.attention},
                     {"head", s.head}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s = ModelSpec{};
  s.name = j.value("name", std::string("custom"));
  s.inputs = j.value("inputs", std::size_t{0});
  s.layers = j.value("layers", std::vector<BlockSpec>{});
  s.attention = j.value("attention", false);
  s.head = j.at("head").get<std::vector<HeadSpec>>();
}

// ---------------------------------------------------------------- model

Model::Model(ModelSpec spec, std::vector<std::unique_ptr<Layer>> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {}

Model::Model(const Model& other) : spec_(other.spec_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void Model::check_input(const Tensor& x) const {
  if (x.rank() != 2 || x.extent(1) != spec_.inputs) {
    throw DimensionError("model '" + spec_.name + "': input " +
                         shape_string(x.shape()) + " is not [batch x " +
                         std::to_string(spec_.inputs) + "]");
  }
}

Model::Trace Model::forward(const Tensor& x) const {
  check_input(x);
  Trace trace;
  trace.caches.reserve(layers_.size());
  Tensor h = x;
  for (const auto& layer : layers_) {
    auto r = layer->forward(h);
    h = std::move(r.output);
    trace.caches.push_back(std::move(r.cache));
  }
  trace.output = std::move(h);
  return trace;
}

std::vector<Tensor> Model::backward(const Trace& trace,
                                    const Tensor& upstream) const {
  if (trace.caches.size() != layers_.size()) {
    throw StaleCacheError("model: trace does not match layer count");
  }
  std::vector<std::vector<Tensor>> per_layer(layers_.size());
  Tensor g = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    auto lg = layers_[i]->backward(*trace.caches[i], g);
    g = std::move(lg.input);
    per_layer[i] = std::move(lg.params);
  }
  std::vector<Tensor> out;
  for (auto& v : per_layer)
    for (auto& t : v) out.push_back(std::move(t));
  return out;
}

Tensor Model::predict(const Tensor& x, std::size_t chunk) const {
  check_input(x);
  const std::size_t rows = x.extent(0), cols = x.extent(1);
  chunk = std::max<std::size_t>(chunk, 1);
  Tensor out({rows, 1});
  for (std::size_t r0 = 0; r0 < rows; r0 += chunk) {
    const std::size_t n = std::min(chunk, rows - r0);
    Tensor part({n, cols},
                std::vector<double>(x.raw() + r0 * cols,
                                    x.raw() + (r0 + n) * cols));
    for (const auto& layer : layers_) part = layer->infer(part);
    std::copy(part.data().begin(), part.data().end(), out.raw() + r0);
  }
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_)
    for (const auto* p : l->parameters()) out.push_back(p);
  return out;
}

std::vector<Tensor*> Model::mutable_parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_)
    for (auto* p : l->mutable_parameters()) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += p->size();
  return n;
}

std::vector<Tensor> Model::snapshot() const {
  std::vector<Tensor> out;
  for (const auto* p : parameters()) out.push_back(*p);
  return out;
}

void Model::restore(std::span<const Tensor> values) {
  auto params = mutable_parameters();
  if (params.size() != values.size()) {
    throw DimensionError("model: restore with " + std::to_string(values.size()) +
                         " tensors, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != values[i].shape()) {
      throw DimensionError("model: restore shape mismatch at parameter " +
                           std::to_string(i));
    }
    *params[i] = values[i];
  }
}

// ---------------------------------------------------------------- build

namespace {

enum class Layout { flat, channels_first, steps_major };

struct Builder {
  const ModelSpec& spec;
  Rng& rng;
  std::vector<std::unique_ptr<Layer>> layers;
  Layout layout = Layout::flat;
  std::size_t width = 0;     // flat: features; channels_first: channels;
                             // steps_major: features per step
  std::size_t length = 0;    // sequence length for non-flat layouts
  bool attention_pending = false;

  [[noreturn]] void fail(const std::string& seam, const std::string& why) const {
    throw DimensionError("model '" + spec.name + "': seam " + seam + ": " + why);
  }

  void to_channels_first() {
    if (layout == Layout::flat) {
      layers.push_back(std::make_unique<ReshapeLayer>(Shape{1, width}));
      length = width;
      width = 1;
    } else if (layout == Layout::steps_major) {
      layers.push_back(std::make_unique<TransposeLayer>());
    }
    layout = Layout::channels_first;
  }

  void to_steps_major() {
    if (layout == Layout::flat) {
      layers.push_back(std::make_unique<ReshapeLayer>(Shape{width, 1}));
      length = width;
      width = 1;
    } else if (layout == Layout::channels_first) {
      layers.push_back(std::make_unique<TransposeLayer>());
    }
    layout = Layout::steps_major;
  }

  void add_attention() {
    to_steps_major();
    layers.push_back(std::make_unique<SelfAttentionLayer>(
        SelfAttentionLayer::glorot(width, rng)));
    attention_pending = false;
  }

  void to_flat() {
    if (layout == Layout::flat) return;
    layers.push_back(std::make_unique<ReshapeLayer>(Shape{width * length}));
    width *= length;
    layout = Layout::flat;
  }

  template <typename Cell>
  void add_recurrent(const BlockSpec& b, bool final_state_out) {
    for (std::size_t s = 0; s < b.stack; ++s) {
      const bool seq = !(final_state_out && s + 1 == b.stack);
      auto layer = RecurrentLayer<Cell>::glorot(width, b.hidden, b.direction,
                                                seq, rng);
      width = layer.hidden_size() * layer.directions();
      layers.push_back(std::make_unique<RecurrentLayer<Cell>>(std::move(layer)));
      if (!seq) layout = Layout::flat;
    }
  }

  void build() {
    if (spec.inputs == 0) fail("input -> layers[0]", "zero input features");
    width = spec.inputs;
    attention_pending = spec.attention;
    std::string prev = "input";
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
      const BlockSpec& b = spec.layers[i];
      const std::string here =
          "layers[" + std::to_string(i) + "] (" + std::string(to_string(b.kind)) + ")";
      const std::string seam = prev + " -> " + here;
      if (layout == Layout::flat && i > 0) {
        fail(seam, "sequence block after a block that emits a final state");
      }
      if (b.kind == BlockKind::conv) {
        if (b.filters == 0) fail(seam, "conv needs filters >= 1");
        if (b.kernel == 0) fail(seam, "conv needs kernel >= 1");
        to_channels_first();
        auto conv = Conv1dLayer::glorot(width, b.filters, b.kernel, b.padding, rng);
        try {
          length = conv.output_length(length);
        } catch (const DimensionError& e) {
          fail(seam, e.what());
        }
        width = b.filters;
        layers.push_back(std::make_unique<Conv1dLayer>(std::move(conv)));
        if (b.activation != Activation::linear)
          layers.push_back(std::make_unique<ActivationLayer>(b.activation));
      } else {
        if (b.hidden == 0) fail(seam, "recurrent block needs hidden >= 1");
        if (b.stack == 0) fail(seam, "recurrent block needs stack >= 1");
        if (attention_pending) add_attention();
        to_steps_major();
        const bool last = i + 1 == spec.layers.size();
        if (b.kind == BlockKind::gru)
          add_recurrent<GruCell>(b, last);
        else
          add_recurrent<LstmCell>(b, last);
      }
      prev = here;
    }
    if (attention_pending) {
      if (layout == Layout::flat)
        fail(prev + " -> attention", "attention needs a sequence input");
      add_attention();
    }
    to_flat();

    if (spec.head.empty()) fail(prev + " -> output", "empty dense head");
    for (std::size_t i = 0; i < spec.head.size(); ++i) {
      const HeadSpec& h = spec.head[i];
      if (h.units == 0)
        fail("head[" + std::to_string(i) + "]", "dense units must be >= 1");
      layers.push_back(
          std::make_unique<DenseLayer>(DenseLayer::glorot(width, h.units, rng)));
      if (h.activation != Activation::linear)
        layers.push_back(std::make_unique<ActivationLayer>(h.activation));
      width = h.units;
    }
    if (width != 1) {
      fail("head[" + std::to_string(spec.head.size() - 1) + "] -> output",
           "final output dimension is " + std::to_string(width) + ", must be 1");
    }
  }
};

}  // namespace

Model build_model(const ModelSpec& spec, Rng& rng) {
  Builder b{spec, rng, {}};
  b.build();
  return Model(spec, std::move(b.layers));
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return build_model(spec, rng);
}

}  // namespace losnet::nn
