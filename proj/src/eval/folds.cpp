// SPDX-License-Identifier: Apache-2.0
#include "losnet/eval/folds.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "losnet/rng.hpp"

namespace losnet::eval {

std::size_t FoldPlan::rows() const {
  std::size_t n = 0;
  for (const auto& f : folds) n += f.size();
  return n;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  if (fold >= folds.size()) throw std::out_of_range("FoldPlan: fold index out of range");
  std::vector<std::size_t> rows;
  rows.reserve(this->rows() - folds[fold].size());
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (f != fold) rows.insert(rows.end(), folds[f].begin(), folds[f].end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw std::invalid_argument("kfold_split: need 2 <= k <= n, got k=" + std::to_string(k) +
                                " n=" + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);

  FoldPlan plan{k, seed, std::vector<std::vector<std::size_t>>(k)};
  const std::size_t base = n / k, extra = n % k;
  auto it = order.begin();
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    plan.folds[f].assign(it, it + static_cast<std::ptrdiff_t>(size));
    it += static_cast<std::ptrdiff_t>(size);
  }
  return plan;
}

}  // namespace losnet::eval
