// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace losnet::eval {

/// Partition of rows 0..n-1 into k disjoint folds whose sizes differ by at
/// most one.
struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> folds;

  std::size_t rows() const;
  const std::vector<std::size_t>& test_rows(std::size_t fold) const { return folds.at(fold); }
  /// Every row outside `fold`, ascending.
  std::vector<std::size_t> train_rows(std::size_t fold) const;
  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Seeded shuffle of 0..n-1 cut into k contiguous slices; the first n % k
/// folds hold one extra row. Throws std::invalid_argument unless 2 <= k <= n.
FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace losnet::eval
