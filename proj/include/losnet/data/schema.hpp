// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace losnet::data {

enum class ColumnKind { numerical, categorical, logical, date };

std::string_view to_string(ColumnKind k);

/// Type and domain of one column. Numerical columns carry finite bounds.
/// Categorical and logical columns carry an ordered category list; a
/// template schema may leave it empty, in which case ingestion fills it with
/// the sorted distinct labels it observes. `groups` is the documented number
/// of distinct values (0 when unknown) and is informational only.
struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numerical;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> categories;
  std::size_t groups = 0;
  bool nullable = true;
  bool required = true;

  static ColumnSchema numerical(std::string name, double lower, double upper);
  static ColumnSchema categorical(std::string name, std::size_t groups);
  static ColumnSchema logical(std::string name);
  static ColumnSchema date(std::string name);

  bool is_labelled() const { return kind != ColumnKind::numerical; }
  /// Throws DataError when bounds are not finite and ordered.
  void validate() const;
  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

inline constexpr std::string_view kLengthOfStay = "Length Of Stay";
inline constexpr std::string_view kTotalCosts = "Total Costs";
inline constexpr std::string_view kSeverityCode = "APR Severity Of Illness Code";
inline constexpr std::string_view kZipCode = "ZipCode 3Digits";
inline constexpr std::string_view kAdmissionDate = "Admission Date";
inline constexpr double kMaxLengthOfStay = 140.0;

/// Header matching key: lower-case ASCII letters and digits only, so
/// "Length of Stay", "Length Of Stay" and "length_of_stay" coincide.
std::string normalize_column_name(std::string_view name);

/// The admissions schema: 22 features and the Length Of Stay target, in
/// table order, followed by an optional admission-date column.
const std::vector<ColumnSchema>& admissions_schema();

/// Columns whose neighbours drive KNN imputation.
const std::vector<std::string>& default_impute_keys();

}  // namespace losnet::data
