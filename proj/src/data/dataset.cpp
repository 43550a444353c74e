// SPDX-License-Identifier: Apache-2.0
#include "losnet/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <set>
#include <unordered_map>

#include "losnet/error.hpp"

namespace losnet::data {

NoticeSink clog_notices() {
  return [](std::string_view text) { std::clog << "notice: " << text << '\n'; };
}

std::size_t Column::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), 1));
}

std::size_t Column::code_of(std::string_view label) const {
  const auto& c = schema.categories;
  const auto it = std::find(c.begin(), c.end(), label);
  if (it == c.end())
    throw DataError("column '" + schema.name + "': unseen category '" +
                    std::string(label) + "'");
  return static_cast<std::size_t>(it - c.begin());
}

Column Column::numeric(ColumnSchema schema, std::vector<double> values,
                       std::vector<std::uint8_t> missing) {
  if (missing.empty()) missing.assign(values.size(), 0);
  Column c;
  c.schema = std::move(schema);
  c.numbers = std::move(values);
  c.missing = std::move(missing);
  return c;
}

Column Column::labelled(ColumnSchema schema, std::vector<std::string> labels,
                        std::vector<std::uint8_t> missing) {
  if (missing.empty()) missing.assign(labels.size(), 0);
  Column c;
  c.schema = std::move(schema);
  c.labels = std::move(labels);
  c.missing = std::move(missing);
  return c;
}

namespace {

void check_column(Column& c, std::size_t rows) {
  c.schema.validate();
  const auto& name = c.schema.name;
  if (c.missing.size() != rows)
    throw DataError("column '" + name + "': expected " + std::to_string(rows) +
                    " cells, got " + std::to_string(c.missing.size()));
  if (c.schema.kind == ColumnKind::numerical) {
    if (c.numbers.size() != rows || !c.labels.empty())
      throw DataError("column '" + name + "': numerical column needs numbers only");
    for (std::size_t r = 0; r < rows; ++r) {
      if (c.is_missing(r)) continue;
      const double v = c.numbers[r];
      if (!(v >= c.schema.lower && v <= c.schema.upper))
        throw DataError("column '" + name + "': value " + format_number(v) +
                        " outside [" + format_number(c.schema.lower) + ", " +
                        format_number(c.schema.upper) + "]");
    }
    return;
  }
  if (c.labels.size() != rows || !c.numbers.empty())
    throw DataError("column '" + name + "': labelled column needs labels only");
  if (c.schema.kind == ColumnKind::date) return;
  if (c.schema.categories.empty()) {
    std::set<std::string> seen;
    for (std::size_t r = 0; r < rows; ++r)
      if (!c.is_missing(r)) seen.insert(c.labels[r]);
    c.schema.categories.assign(seen.begin(), seen.end());
    return;
  }
  std::set<std::string_view> allowed(c.schema.categories.begin(),
                                     c.schema.categories.end());
  for (std::size_t r = 0; r < rows; ++r)
    if (!c.is_missing(r) && !allowed.count(c.labels[r]))
      throw DataError("column '" + name + "': label '" + c.labels[r] +
                      "' not in its category list");
}

}  // namespace

Dataset::Dataset(std::vector<Column> columns, std::string target)
    : columns_(std::move(columns)), target_(std::move(target)) {
  if (columns_.empty()) throw DataError("dataset has no columns");
  rows_ = columns_.front().missing.size();
  if (rows_ == 0) throw DataError("dataset has no rows");
  std::set<std::string> names;
  for (auto& c : columns_) {
    check_column(c, rows_);
    if (!names.insert(normalize_column_name(c.schema.name)).second)
      throw DataError("duplicate column '" + c.schema.name + "'");
  }
  const auto t = find(target_);
  if (!t) throw DataError("target column '" + target_ + "' not present");
  target_index_ = *t;
  const auto& tc = columns_[target_index_];
  if (tc.schema.kind != ColumnKind::numerical)
    throw DataError("target column '" + target_ + "' must be numerical");
  if (tc.missing_count() != 0)
    throw DataError("target column '" + target_ + "' has missing cells");
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  const auto key = normalize_column_name(name);
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (normalize_column_name(columns_[i].schema.name) == key) return i;
  return std::nullopt;
}

const Column& Dataset::column(std::string_view name) const {
  const auto i = find(name);
  if (!i) throw DataError("no column named '" + std::string(name) + "'");
  return columns_[*i];
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (i != target_index_) out.push_back(columns_[i].schema.name);
  return out;
}

std::size_t Dataset::missing_count() const {
  std::size_t n = 0;
  for (const auto& c : columns_) n += c.missing_count();
  return n;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column out;
    out.schema = c.schema;
    out.missing.reserve(rows.size());
    for (const auto r : rows) {
      if (r >= rows_) throw DataError("row index out of range");
      out.missing.push_back(c.missing[r]);
      if (c.schema.kind == ColumnKind::numerical)
        out.numbers.push_back(c.numbers[r]);
      else
        out.labels.push_back(c.labels[r]);
    }
    cols.push_back(std::move(out));
  }
  return Dataset(std::move(cols), target_);
}

Dataset Dataset::drop_column(std::string_view name) const {
  const auto i = find(name);
  if (!i) throw DataError("no column named '" + std::string(name) + "'");
  if (*i == target_index_) throw DataError("cannot drop the target column");
  auto cols = columns_;
  cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(*i));
  return Dataset(std::move(cols), target_);
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  char ch;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get(ch);
      break;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  fields.push_back(std::move(field));
  return true;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_placeholder(std::string_view s) {
  if (s.empty()) return true;
  std::string up;
  for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return up == "NA" || up == "N/A" || up == "NULL" || up == "?";
}

/// Accepts plain decimals plus the "$1,234.50" and "120 +" spellings.
std::optional<double> parse_number(std::string_view s) {
  std::string clean;
  for (char c : s)
    if (c != '$' && c != ',' && c != ' ') clean.push_back(c);
  if (!clean.empty() && clean.back() == '+') clean.pop_back();
  if (clean.empty()) return std::nullopt;
  double v = 0;
  const char* first = clean.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, clean.data() + clean.size(), v);
  if (res.ec != std::errc() || res.ptr != clean.data() + clean.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

/// Accepts yyyy-mm-dd and mm/dd/yyyy; returns the ISO spelling.
std::optional<std::string> parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  const auto num = [](std::string_view t, auto& out) {
    const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
    return r.ec == std::errc() && r.ptr == t.data() + t.size() && !t.empty();
  };
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d))
      return std::nullopt;
  } else {
    const auto a = s.find('/');
    const auto b = a == std::string_view::npos ? a : s.find('/', a + 1);
    if (b == std::string_view::npos) return std::nullopt;
    if (!num(s.substr(0, a), m) || !num(s.substr(a + 1, b - a - 1), d) ||
        !num(s.substr(b + 1), y))
      return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok() || y < 1 || y > 9999) return std::nullopt;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return std::string(buf);
}

std::string bounds_text(const ColumnSchema& s) {
  return "[" + format_number(s.lower) + ", " + format_number(s.upper) + "]";
}

}  // namespace

ParseResult parse_records(std::istream& in, const std::vector<ColumnSchema>& schema,
                          std::string_view target) {
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields)) throw DataError("input has no header row");
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);

  std::unordered_map<std::string, std::size_t> by_key;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    schema[i].validate();
    by_key.emplace(normalize_column_name(schema[i].name), i);
  }
  ParseReport report;
  // source[i] = header position of schema column i, if present.
  std::vector<std::optional<std::size_t>> source(schema.size());
  for (std::size_t h = 0; h < fields.size(); ++h) {
    const auto it = by_key.find(normalize_column_name(fields[h]));
    if (it == by_key.end() || source[it->second]) {
      report.ignored_columns.push_back(fields[h]);
      continue;
    }
    source[it->second] = h;
  }
  std::vector<std::size_t> present;
  std::optional<std::size_t> target_col;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!source[i]) {
      if (schema[i].required)
        throw DataError("missing required column '" + schema[i].name + "'");
      continue;
    }
    if (normalize_column_name(schema[i].name) == normalize_column_name(target))
      target_col = present.size();
    present.push_back(i);
  }
  if (!target_col) throw DataError("missing target column '" + std::string(target) + "'");

  std::vector<Column> cols(present.size());
  for (std::size_t j = 0; j < present.size(); ++j) cols[j].schema = schema[present[j]];
  const std::size_t width = fields.size();

  std::vector<double> nums(present.size());
  std::vector<std::string> labs(present.size());
  std::vector<std::uint8_t> miss(present.size());
  std::vector<ParseIssue> blanked;
  while (read_csv_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    const std::size_t row = ++report.records;
    if (fields.size() != width) {
      report.rejected_rows.push_back({row, "", "expected " + std::to_string(width) +
                                                   " fields, got " +
                                                   std::to_string(fields.size())});
      continue;
    }
    blanked.clear();
    std::optional<ParseIssue> reject;
    for (std::size_t j = 0; j < present.size() && !reject; ++j) {
      const auto& s = cols[j].schema;
      const auto text = trim(fields[*source[present[j]]]);
      nums[j] = 0;
      labs[j].clear();
      miss[j] = 0;
      std::optional<std::string> problem;
      if (is_placeholder(text)) {
        miss[j] = 1;
        if (!s.nullable) problem = "missing value";
      } else if (s.kind == ColumnKind::numerical) {
        const auto v = parse_number(text);
        if (!v) {
          problem = "unparseable number '" + std::string(text) + "'";
        } else if (*v < s.lower || *v > s.upper) {
          problem = "value " + format_number(*v) + " outside " + bounds_text(s);
        } else {
          nums[j] = *v;
        }
      } else if (s.kind == ColumnKind::date) {
        if (auto d = parse_date(text))
          labs[j] = std::move(*d);
        else
          problem = "unparseable date '" + std::string(text) + "'";
      } else {
        labs[j] = std::string(text);
        const auto& cats = s.categories;
        if (!cats.empty() && std::find(cats.begin(), cats.end(), labs[j]) == cats.end())
          problem = "label '" + labs[j] + "' not in category list";
      }
      if (!problem) continue;
      if (j == *target_col || !s.nullable) {
        reject = ParseIssue{row, s.name, *problem};
      } else {
        miss[j] = 1;
        nums[j] = 0;
        labs[j].clear();
        blanked.push_back({row, s.name, *problem});
      }
    }
    if (reject) {
      report.rejected_rows.push_back(std::move(*reject));
      continue;
    }
    for (auto& b : blanked) report.blanked_cells.push_back(std::move(b));
    for (std::size_t j = 0; j < present.size(); ++j) {
      cols[j].missing.push_back(miss[j]);
      if (cols[j].schema.kind == ColumnKind::numerical)
        cols[j].numbers.push_back(nums[j]);
      else
        cols[j].labels.push_back(labs[j]);
    }
  }
  if (cols.front().missing.empty())
    throw DataError("no usable rows (" + std::to_string(report.rejected_rows.size()) +
                    " rejected)");
  return {Dataset(std::move(cols), std::string(schema[present[*target_col]].name)),
          std::move(report)};
}

void write_csv_field(std::ostream& out, std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos &&
      (s.empty() || (s.front() != ' ' && s.back() != ' '))) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_records(std::ostream& out, const Dataset& ds) {
  const auto& cols = ds.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (j) out << ',';
    write_csv_field(out, cols[j].schema.name);
  }
  out << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (j) out << ',';
      const auto& c = cols[j];
      if (c.is_missing(r)) continue;
      if (c.schema.kind == ColumnKind::numerical)
        out << format_number(c.numbers[r]);
      else
        write_csv_field(out, c.labels[r]);
    }
    out << '\n';
  }
}

void write_parse_report(std::ostream& out, const ParseReport& report) {
  out << "row,column,reason\n";
  for (const auto* list : {&report.rejected_rows, &report.blanked_cells})
    for (const auto& i : *list) {
      out << i.row << ',';
      write_csv_field(out, i.column);
      out << ',';
      write_csv_field(out, i.reason);
      out << '\n';
    }
}

}  // namespace losnet::data
