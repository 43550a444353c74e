// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "losnet/data/wrangle.hpp"
#include "losnet/eval/folds.hpp"
#include "losnet/nn/model.hpp"
#include "losnet/train/trainer.hpp"

namespace losnet::studies {

/// Copy of the table without feature column `name`.
data::FeatureTable drop_feature(const data::FeatureTable& table, std::string_view name);

/// Seeded shuffle cut into train / validation / test row lists, each sorted.
/// Every part gets at least one row.
struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};
Holdout holdout_split(std::size_t n, std::uint64_t seed, double train_fraction = 0.8,
                      double validation_fraction = 0.1);

// Leave-one-feature-out elimination.

struct FeatureRecord {
  /// Removed feature; empty for the all-features baseline.
  std::string feature;
  std::size_t folds = 0;
  std::size_t failed = 0;
  /// Means over completed folds; NaN when none completed.
  double mean_r = 0.0;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  /// mean_r minus the baseline's mean_r.
  double delta_r = 0.0;

  bool is_baseline() const { return feature.empty(); }
};

struct FeatureStudyReport {
  /// Baseline first, then removals by descending delta_r (ties by name).
  std::vector<FeatureRecord> records;
  const FeatureRecord& baseline() const { return records.front(); }
  const FeatureRecord& removal(std::string_view feature) const;
};

/// F+1 cross-validated runs of `spec`: all features, then each feature
/// left out once. Every run uses the same fold plan and cell seeds.
FeatureStudyReport feature_elimination_study(
    const data::FeatureTable& table, const nn::ModelSpec& spec, const train::TrainConfig& config,
    const eval::FoldPlan& plan, std::size_t threads = 1,
    const std::function<void(const FeatureRecord&)>& on_record = {});

/// "feature,mean_r,mean_mae,mean_rmse,delta_r_vs_baseline"; the baseline
/// row is named "(all features)".
void write_feature_study(std::ostream& out, const FeatureStudyReport& report,
                         std::optional<std::uint64_t> seed = std::nullopt);

// Learning rate x batch size grid.

struct HpoOptions {
  std::vector<double> learning_rates = {1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<std::size_t> batch_sizes = {128, 256, 512, 1024, 2048, 4096, 8192};
  /// Shared by every cell: the holdout split, weight init and batch order.
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  /// When set, each cell is scored by the mean held-out RMSE of a
  /// cross-validation over this plan instead of the holdout split.
  std::optional<eval::FoldPlan> cv_plan;
  std::size_t threads = 1;
  std::function<void(double lr, std::size_t batch, double rmse)> on_cell;
};

struct HpoCell {
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  /// Test RMSE in target units; +inf when the cell diverged or failed.
  double rmse = 0.0;
  std::string error;
};

struct HpoGrid {
  std::vector<double> learning_rates;
  std::vector<std::size_t> batch_sizes;
  /// Row-major: cells[i * batch_sizes.size() + j] is (learning_rates[i], batch_sizes[j]).
  std::vector<HpoCell> cells;
  /// Index of the best cell; empty when no cell is finite.
  std::optional<std::size_t> best;

  const HpoCell& at(std::size_t lr, std::size_t batch) const;
};

/// Lowest finite RMSE; exact ties go to the smaller learning rate, then the
/// smaller batch.
std::optional<std::size_t> select_best(const std::vector<HpoCell>& cells);

HpoGrid grid_search_hpo(const data::FeatureTable& table, const nn::ModelSpec& spec,
                        const train::TrainConfig& base, const HpoOptions& options = {});

/// Matrix with learning rates as rows (descending) and batch sizes as
/// columns (ascending).
void write_hpo_grid(std::ostream& out, const HpoGrid& grid,
                    std::optional<std::uint64_t> seed = std::nullopt);
nlohmann::json hpo_best_json(const HpoGrid& grid, std::optional<std::uint64_t> seed = std::nullopt);

// Recurrent stack depth.

struct DepthSearch {
  std::size_t depth = 1;
  /// trace[d - 1] is the selection RMSE at depth d.
  std::vector<double> trace;
};

/// Tries depths 1, 2, ... and stops at the first depth whose score does not
/// beat the previous one by at least `tolerance`, returning the previous
/// depth; returns max_depth when every step improves.
DepthSearch greedy_depth(std::size_t max_depth, double tolerance,
                         const std::function<double(std::size_t)>& evaluate);

struct DepthOptions {
  std::size_t max_depth = 4;
  /// In scaled target units.
  double tolerance = 1e-3;
  std::uint64_t seed = 42;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
};

/// Varies the stack count of the first recurrent block of `base`. Each
/// depth trains on the holdout train rows, early-stops on the validation
/// rows and is scored by scaled RMSE on the test rows; divergence scores
/// +inf.
DepthSearch greedy_layer_search(const data::FeatureTable& table, const nn::ModelSpec& base,
                                const train::TrainConfig& config, const DepthOptions& options);

void write_depth_trace(std::ostream& out, const DepthSearch& search,
                       std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace losnet::studies
