// SPDX-License-Identifier: Apache-2.0
#include "losnet/data/schema.hpp"

#include <cctype>
#include <cmath>

#include "losnet/error.hpp"

namespace losnet::data {

std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::numerical: return "numerical";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::logical: return "logical";
    case ColumnKind::date: return "date";
  }
  return "?";
}

ColumnSchema ColumnSchema::numerical(std::string name, double lower, double upper) {
  ColumnSchema s;
  s.name = std::move(name);
  s.kind = ColumnKind::numerical;
  s.lower = lower;
  s.upper = upper;
  return s;
}

ColumnSchema ColumnSchema::categorical(std::string name, std::size_t groups) {
  ColumnSchema s;
  s.name = std::move(name);
  s.kind = ColumnKind::categorical;
  s.groups = groups;
  return s;
}

ColumnSchema ColumnSchema::logical(std::string name) {
  ColumnSchema s;
  s.name = std::move(name);
  s.kind = ColumnKind::logical;
  s.categories = {"N", "Y"};
  s.groups = 2;
  return s;
}

ColumnSchema ColumnSchema::date(std::string name) {
  ColumnSchema s;
  s.name = std::move(name);
  s.kind = ColumnKind::date;
  return s;
}

void ColumnSchema::validate() const {
  if (name.empty()) throw DataError("column with empty name");
  if (kind == ColumnKind::numerical &&
      !(std::isfinite(lower) && std::isfinite(upper) && lower <= upper))
    throw DataError("column '" + name + "': numerical bounds must be finite and ordered");
  if (kind == ColumnKind::logical && categories.size() != 2)
    throw DataError("column '" + name + "': logical columns take exactly two labels");
}

std::string normalize_column_name(std::string_view name) {
  std::string out;
  for (unsigned char c : name)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

const std::vector<ColumnSchema>& admissions_schema() {
  static const std::vector<ColumnSchema> schema = [] {
    using S = ColumnSchema;
    std::vector<S> s{
        S::categorical("Hospital Service Area", 8),
        S::categorical("Hospital County", 57),
        S::categorical("AgeGroup", 5),
        S::numerical(std::string(kZipCode), 100, 149),
        S::categorical("Gender", 3),
        S::categorical("Race", 4),
        S::categorical("Ethnicity", 4),
        S::categorical("Type Of Admission", 6),
        S::categorical(std::string(kSeverityCode), 4),
        S::categorical("APR Severity Of Illness Description", 4),
        S::categorical("Payment Typology 1", 9),
        S::numerical(std::string(kTotalCosts), 100, 2e5),
        S::numerical(std::string(kLengthOfStay), 0, kMaxLengthOfStay),
        S::categorical("Patient Disposition", 19),
        S::categorical("CCSR Diagnosis Code", 471),
        S::categorical("CCSR Diagnosis Description", 472),
        S::categorical("APR DRG Code", 326),
        S::categorical("APR DRG Description", 326),
        S::categorical("APR MDC Code", 24),
        S::categorical("APR MDC Description", 24),
        S::categorical("APR Risk Of Mortality", 4),
        S::categorical("APR Medical Surgical Description", 2),
        S::logical("Emergency Department Indicator"),
    };
    s[12].nullable = false;
    auto d = S::date(std::string(kAdmissionDate));
    d.required = false;
    s.push_back(d);
    return s;
  }();
  return schema;
}

const std::vector<std::string>& default_impute_keys() {
  static const std::vector<std::string> keys{"AgeGroup", "Gender", "Race", "Ethnicity"};
  return keys;
}

}  // namespace losnet::data
