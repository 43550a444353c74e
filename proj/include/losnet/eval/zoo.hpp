// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "losnet/data/wrangle.hpp"
#include "losnet/eval/folds.hpp"
#include "losnet/eval/stats.hpp"
#include "losnet/nn/model.hpp"
#include "losnet/nn/zoo.hpp"
#include "losnet/train/metrics.hpp"
#include "losnet/train/trainer.hpp"

namespace losnet::eval {

/// Held-out metrics of one (model, fold) cell, in original target units.
/// A failed cell carries the error text and default metrics.
struct FoldReport {
  std::string model;
  std::size_t fold = 0;
  train::MetricsReport metrics;
  std::string error;

  bool ok() const { return error.empty(); }
};

bool operator==(const FoldReport& a, const FoldReport& b);

struct ModelSummary {
  std::string model;
  std::size_t folds = 0;
  std::size_t failed = 0;
  /// Over completed folds. `r` skips folds whose R is undefined.
  Spread mse, rmse, loss, mae, r;
  /// R compared against the proposed model; empty for the proposed model
  /// itself and when either side has fewer than two R values.
  std::optional<TTestResult> test;

  bool complete() const { return failed == 0; }
  friend bool operator==(const ModelSummary&, const ModelSummary&) = default;
};

/// Requires at least one report, all naming the same model.
ModelSummary summarize_folds(std::span<const FoldReport> reports);

struct ZooReport {
  std::string proposed;
  bool paired = false;
  /// In order of first appearance among the fold reports.
  std::vector<ModelSummary> models;

  bool complete() const;
  const ModelSummary& model(std::string_view name) const;
  friend bool operator==(const ZooReport&, const ZooReport&) = default;
};

/// Pure function of the fold reports: per-model summaries plus the R test
/// of every other model against `proposed` (Welch, or paired by fold index).
ZooReport build_zoo_report(std::span<const FoldReport> reports, std::string proposed,
                           bool paired = false);

struct ZooOptions {
  train::TrainConfig train;
  std::string proposed = std::string(nn::kProposedModel);
  bool paired = false;
  /// Worker threads over (model, fold) cells. Results do not depend on it.
  std::size_t threads = 1;
  /// Derive every model's seeds as if it were model 0, so identical specs
  /// train identically.
  bool shared_model_seeds = false;
  /// Called after each cell, serialized, in completion order.
  std::function<void(const FoldReport&)> on_cell;
};

struct ZooRun {
  /// Model-major, fold-minor.
  std::vector<FoldReport> reports;
  std::vector<train::TrainHistory> histories;
  ZooReport report;
};

/// Seed of cell (model, fold): drawn from Rng(master).split(model).split(fold).
std::uint64_t cell_seed(std::uint64_t master, std::size_t model, std::size_t fold);

/// For each model and fold: fit min-max ranges of features and target on
/// the training rows, train on them, predict the held-out rows and map the
/// predictions back to target units. `table` holds encoded but unscaled
/// features. A cell that throws is recorded as failed and the run goes on.
ZooRun run_model_zoo(const data::FeatureTable& table, const std::vector<nn::ModelSpec>& zoo,
                     const FoldPlan& plan, const ZooOptions& options);

/// "model,fold,mse,rmse,loss,mae,r,error" with numbers in shortest
/// round-trip form, so a report rebuilt from the file is bit-identical.
void write_fold_reports(std::ostream& out, std::span<const FoldReport> reports,
                        std::optional<std::uint64_t> seed = std::nullopt);
/// Skips '#' comment lines. Throws DataError naming the line on bad input.
std::vector<FoldReport> read_fold_reports(std::istream& in);

/// One panel per model with rows mean, max, min, std; 6 decimals, p in
/// scientific notation.
void write_zoo_summary(std::ostream& out, const ZooReport& report,
                       std::optional<std::uint64_t> seed = std::nullopt);
nlohmann::json zoo_report_json(const ZooReport& report,
                               std::optional<std::uint64_t> seed = std::nullopt);

/// Fixed-point text with 6 decimals.
std::string fixed6(double v);
/// Scientific text with 6 decimals; "inf"/"-inf" for infinities.
std::string sci6(double v);

}  // namespace losnet::eval
