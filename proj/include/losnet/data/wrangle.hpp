// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "losnet/data/dataset.hpp"
#include "losnet/tensor.hpp"

namespace losnet::data {

/// Fills every missing cell from the k nearest donor rows. Distance is
/// Euclidean over the key columns, each encoded (category code, or value)
/// and min-max scaled over observed cells; a row's own missing keys are left
/// out of its distances. Donors for a column are rows with every key and
/// that column observed. Neighbours rank by (distance, row index). Numeric
/// cells take the neighbour mean summed in rank order; labelled cells take
/// the mode, ties going to the lexicographically smallest label. All fills
/// read the original observed cells only.
Dataset knn_impute(const Dataset& ds, std::size_t k,
                   const std::vector<std::string>& keys = default_impute_keys());

/// Replaces a date column by "<name> Weekday" (0 = Monday), "<name> Month"
/// and "<name> Year". Without a date column the dataset is returned as is
/// and a notice is sent.
Dataset engineer_date_features(const Dataset& ds, const NoticeSink& notices = clog_notices());

/// Label table for one categorical or logical column.
struct Encoding {
  std::string column;
  std::vector<std::string> labels;
  friend bool operator==(const Encoding&, const Encoding&) = default;
};

/// Per-column affine map onto [0,1]. A constant column maps to 0.
struct ScaleRange {
  std::string column;
  double min = 0.0;
  double max = 0.0;

  double scale(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }
  double unscale(double s) const { return max > min ? min + s * (max - min) : min; }
  friend bool operator==(const ScaleRange&, const ScaleRange&) = default;
};

/// Everything needed to replay the wrangle pipeline on new rows.
struct WranglePlan {
  std::size_t knn_k = 5;
  std::vector<std::string> knn_keys = default_impute_keys();
  bool one_hot = false;
  bool date_features = true;
  std::vector<Encoding> encodings;
  std::vector<ScaleRange> scaling;

  bool encoded() const { return !encodings.empty(); }
  bool scaled() const { return !scaling.empty(); }
  const ScaleRange& range(std::string_view column) const;

  nlohmann::json to_json() const;
  static WranglePlan from_json(const nlohmann::json& j);
  friend bool operator==(const WranglePlan&, const WranglePlan&) = default;
};

/// Label encoding (codes 0..G-1 in category order, categories sorted) or,
/// with plan.one_hot, one 0/1 column per label named "<column>=<label>".
/// Fits plan.encodings when empty, otherwise applies them; a label outside
/// a fitted table raises DataError naming column and value. Requires no
/// missing labelled cells.
Dataset encode_categoricals(const Dataset& ds, WranglePlan& plan);
Dataset encode_categoricals(const Dataset& ds, const WranglePlan& plan);

/// Min-max scaling of every numerical column, the target included. Fits
/// plan.scaling from `ds` when empty, otherwise applies it. Scaled columns
/// get bounds covering [0,1] and every transformed value.
Dataset scale_minmax(const Dataset& ds, WranglePlan& plan,
                     const NoticeSink& notices = clog_notices());
Dataset scale_minmax(const Dataset& ds, const WranglePlan& plan);
/// Maps scaled columns back to their original units.
Dataset inverse_scale(const Dataset& ds, const WranglePlan& plan);

/// Impute, engineer dates, encode and scale, fitting every empty part of
/// the plan on `ds`.
Dataset wrangle(const Dataset& ds, WranglePlan& plan,
                const NoticeSink& notices = clog_notices());
/// Replays a fully fitted plan.
Dataset apply_plan(const Dataset& ds, const WranglePlan& plan);

/// Dense model inputs: x is [N x F] in column order, y is [N].
struct FeatureTable {
  std::vector<std::string> names;
  std::string target;
  Tensor x;
  Tensor y;
};

/// Requires an all-numerical dataset with no missing cells.
FeatureTable to_features(const Dataset& ds);

/// Ranges fitted on the selected rows of each column of a [N x F] matrix.
std::vector<ScaleRange> fit_ranges(const Tensor& x, const std::vector<std::size_t>& rows,
                                   const std::vector<std::string>& names);
Tensor apply_ranges(const Tensor& x, const std::vector<ScaleRange>& ranges);
Tensor invert_range(const Tensor& y, const ScaleRange& range);

}  // namespace losnet::data
