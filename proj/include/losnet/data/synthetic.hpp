// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "losnet/data/dataset.hpp"

namespace losnet::data {

/// Knobs of the synthetic admissions law. Length of stay is
/// floor(exp(eta) * G) with G ~ Gamma(los_shape, 1/los_shape) and eta built
/// from severity, age, disposition, surgery, a surgery x age x severity
/// interaction and fixed per-category effects. Total Costs is
/// (LoS + 1/2) * daily_rate * lognormal noise + a fixed fee, where the daily
/// rate depends on surgery, payer, service area and newborn status, so the
/// cost is informative about LoS only once the rate is accounted for.
struct SyntheticProfile {
  double los_intercept = 0.96;
  double los_shape = 1.3;
  double cost_daily_rate = 400.0;
  double cost_noise = 0.45;
  /// Fraction of nullable feature cells left empty.
  double missing_rate = 0.001;
  /// Emit an "Admission Date" column (2021 calendar).
  bool admission_date = false;
};

/// n rows over admissions_schema(). Row r depends only on (seed, r), so a
/// shorter dataset is a prefix of a longer one with the same seed.
Dataset generate_synthetic(std::size_t n, std::uint64_t seed,
                           const SyntheticProfile& profile = {});

struct DistributionSummary {
  std::size_t rows = 0;
  double los_mean = 0.0;
  double los_max = 0.0;
  double los_zero_fraction = 0.0;
  double los_over_20_fraction = 0.0;
  double cost_los_correlation = 0.0;
};

/// Headline distribution facts of a dataset holding Length Of Stay and
/// Total Costs. Missing cost cells are skipped in the correlation.
DistributionSummary summarize_distribution(const Dataset& ds);

/// Pearson correlation of each feature with the target, with labelled
/// columns replaced by their lexicographic codes. Missing cells are skipped
/// pairwise; constant columns report 0.
std::vector<std::pair<std::string, double>> target_correlations(const Dataset& ds);

/// Observed label counts of a labelled column, in category order.
std::vector<std::pair<std::string, std::size_t>> category_counts(const Dataset& ds,
                                                                 std::string_view column);

/// Count of target values per integer day 0..max.
std::vector<std::size_t> los_histogram(const Dataset& ds);

}  // namespace losnet::data
