// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

#include "losnet/tensor.hpp"

namespace losnet {

/// Counter-based generator. Each draw is a pure function of (key, counter),
/// so the stream depends only on the seed and the number of prior draws.
/// Children from split() get independent keys and never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), key_(mix(seed ^ kSeedSalt)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    return mix(key_ + mix(counter_++ * kGolden + kStreamSalt));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased integer on [0, n).
  std::uint64_t index(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Child generator for stream `id`; does not advance this generator.
  Rng split(std::uint64_t id) const noexcept {
    return Rng(mix(key_ ^ mix(id + kSplitSalt)));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSeedSalt = 0x6A09E667F3BCC909ULL;
  static constexpr std::uint64_t kStreamSalt = 0xBB67AE8584CAA73BULL;
  static constexpr std::uint64_t kSplitSalt = 0x3C6EF372FE94F82BULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with the counter-based stream (std::shuffle is not portable).
template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.index(i));
    std::swap(values[i - 1], values[j]);
  }
}

inline Tensor rng_normal(Rng& rng, Shape shape, double mean, double stddev) {
  if (!(stddev >= 0.0)) {
    throw std::invalid_argument("rng_normal: negative standard deviation");
  }
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = mean + stddev * rng.normal();
  require_finite(t, "rng_normal");
  return t;
}

inline Tensor rng_uniform(Rng& rng, Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace losnet
