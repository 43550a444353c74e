// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "losnet/tensor.hpp"

namespace losnet::nn {

/// State a layer keeps between forward and backward. Tagged with the
/// producing layer and its parameter version so stale caches are rejected.
struct LayerCache {
  virtual ~LayerCache() = default;
  const void* owner = nullptr;
  std::uint64_t version = 0;
  Shape output_shape;
};

struct ForwardResult {
  Tensor output;
  std::unique_ptr<LayerCache> cache;
};

/// Gradients of a scalar objective. `params` aligns one-to-one with
/// Layer::parameters().
struct LayerGradients {
  Tensor input;
  std::vector<Tensor> params;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string_view kind() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual ForwardResult forward(const Tensor& x) const = 0;
  virtual LayerGradients backward(const LayerCache& cache,
                                  const Tensor& upstream) const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual Tensor infer(const Tensor& x) const { return forward(x).output; }

  virtual std::vector<const Tensor*> parameters() const { return {}; }

  /// Mutable parameter access; invalidates outstanding caches.
  std::vector<Tensor*> mutable_parameters() {
    ++version_;
    const auto view = std::as_const(*this).parameters();
    std::vector<Tensor*> out;
    out.reserve(view.size());
    for (const auto* p : view) out.push_back(const_cast<Tensor*>(p));
    return out;
  }

  std::uint64_t version() const noexcept { return version_; }

 protected:
  template <typename Cache>
  std::unique_ptr<Cache> make_cache(Shape output_shape) const {
    auto c = std::make_unique<Cache>();
    c->owner = this;
    c->version = version_;
    c->output_shape = std::move(output_shape);
    return c;
  }

  template <typename Cache>
  const Cache& checked_cache(const LayerCache& cache,
                             const Tensor& upstream) const {
    if (cache.owner != this || cache.version != version_) {
      throw StaleCacheError(std::string(kind()) +
                            ": cache does not belong to this layer state");
    }
    const auto* typed = dynamic_cast<const Cache*>(&cache);
    if (!typed) {
      throw StaleCacheError(std::string(kind()) + ": mismatched cache type");
    }
    if (upstream.shape() != cache.output_shape) {
      throw DimensionError(std::string(kind()) + ": upstream gradient " +
                           shape_string(upstream.shape()) +
                           " does not match output " +
                           shape_string(cache.output_shape));
    }
    return *typed;
  }

  std::vector<Tensor> zero_like_parameters() const {
    std::vector<Tensor> g;
    for (const auto* p : parameters()) g.emplace_back(p->shape());
    return g;
  }

 private:
  std::uint64_t version_ = 0;
};

}  // namespace losnet::nn
