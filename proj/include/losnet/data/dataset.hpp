// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "losnet/data/schema.hpp"

namespace losnet::data {

/// Receives human-readable notices about skipped or degenerate steps.
using NoticeSink = std::function<void(std::string_view)>;

/// Writes "notice: <text>" to std::clog.
NoticeSink clog_notices();

/// One column of cells. Numerical columns use `numbers`; every other kind
/// uses `labels` (dates as ISO yyyy-mm-dd). Missing cells hold 0 or "".
struct Column {
  ColumnSchema schema;
  std::vector<double> numbers;
  std::vector<std::string> labels;
  std::vector<std::uint8_t> missing;

  std::size_t size() const { return missing.size(); }
  bool is_missing(std::size_t row) const { return missing[row] != 0; }
  std::size_t missing_count() const;
  /// Position of `label` in the category list; throws DataError if absent.
  std::size_t code_of(std::string_view label) const;

  static Column numeric(ColumnSchema schema, std::vector<double> values,
                        std::vector<std::uint8_t> missing = {});
  static Column labelled(ColumnSchema schema, std::vector<std::string> labels,
                         std::vector<std::uint8_t> missing = {});
  friend bool operator==(const Column&, const Column&) = default;
};

/// Immutable column-major table with a designated target column.
/// Construction checks equal column lengths, numeric bounds for observed
/// cells, membership of observed labels in the category list, and a fully
/// observed target. Labelled columns with an empty category list receive the
/// sorted distinct observed labels.
class Dataset {
 public:
  Dataset(std::vector<Column> columns, std::string target);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  const std::string& target() const { return target_; }
  std::size_t target_index() const { return target_index_; }
  std::vector<std::string> feature_names() const;
  std::size_t missing_count() const;

  Dataset select_rows(const std::vector<std::size_t>& rows) const;
  Dataset drop_column(std::string_view name) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Column> columns_;
  std::string target_;
  std::size_t rows_ = 0;
  std::size_t target_index_ = 0;
};

/// A row dropped or a cell blanked during ingestion. `row` counts data
/// records from 1 (the header is not counted).
struct ParseIssue {
  std::size_t row = 0;
  std::string column;
  std::string reason;
  friend bool operator==(const ParseIssue&, const ParseIssue&) = default;
};

struct ParseReport {
  std::size_t records = 0;
  std::vector<ParseIssue> rejected_rows;
  std::vector<ParseIssue> blanked_cells;
  std::vector<std::string> ignored_columns;
};

struct ParseResult {
  Dataset dataset;
  ParseReport report;
};

/// Reads a comma-separated file with a header row. Headers are matched to
/// the schema by normalize_column_name, in any order; unknown columns are
/// ignored. Empty and placeholder cells (NA, N/A, NULL, ?) are missing.
/// Unparseable or out-of-bounds cells become missing and are reported,
/// except in the target column, where they reject the whole row.
ParseResult parse_records(std::istream& in, const std::vector<ColumnSchema>& schema,
                          std::string_view target = kLengthOfStay);

/// Writes the dataset with schema names as the header. Numbers use the
/// shortest representation that reads back exactly.
void write_records(std::ostream& out, const Dataset& ds);

/// "row,column,reason" for every rejected row followed by every blanked cell.
void write_parse_report(std::ostream& out, const ParseReport& report);

/// Reads one RFC 4180 record (quotes, doubled quotes, LF or CRLF).
/// Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields);

/// Writes one field, quoted only when it holds a separator, quote, line
/// break or edge space.
void write_csv_field(std::ostream& out, std::string_view s);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace losnet::data
