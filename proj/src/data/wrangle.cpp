// SPDX-License-Identifier: Apache-2.0
#include "losnet/data/wrangle.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>
#include <set>

#include "losnet/error.hpp"

namespace losnet::data {

namespace {

/// Scaled key coordinates plus an observed flag per row.
struct KeyMatrix {
  std::size_t width = 0;
  std::vector<double> value;        // rows x width
  std::vector<std::uint8_t> known;  // rows x width
};

KeyMatrix encode_keys(const Dataset& ds, const std::vector<std::string>& keys) {
  KeyMatrix m;
  m.width = keys.size();
  m.value.assign(ds.rows() * m.width, 0.0);
  m.known.assign(ds.rows() * m.width, 0);
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const auto& c = ds.column(keys[k]);
    if (c.schema.kind == ColumnKind::date)
      throw DataError("knn_impute: key column '" + keys[k] + "' cannot be a date");
    std::vector<double> raw(ds.rows(), 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (c.is_missing(r)) continue;
      raw[r] = c.schema.kind == ColumnKind::numerical
                   ? c.numbers[r]
                   : static_cast<double>(c.code_of(c.labels[r]));
      lo = std::min(lo, raw[r]);
      hi = std::max(hi, raw[r]);
    }
    if (c.schema.kind != ColumnKind::numerical) {
      lo = 0;
      hi = c.schema.categories.empty() ? 0.0 : double(c.schema.categories.size() - 1);
    }
    const ScaleRange range{keys[k], lo, hi};
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (c.is_missing(r)) continue;
      m.value[r * m.width + k] = range.scale(raw[r]);
      m.known[r * m.width + k] = 1;
    }
  }
  return m;
}

struct DonorGroup {
  std::vector<double> key;
  std::vector<std::size_t> rows;  // ascending
};

/// Donor rows for one column grouped by identical key coordinates.
std::vector<DonorGroup> donor_groups(const KeyMatrix& keys, const Column& col) {
  std::map<std::vector<double>, std::size_t> index;
  std::vector<DonorGroup> groups;
  const auto w = keys.width;
  for (std::size_t r = 0; r < col.size(); ++r) {
    if (col.is_missing(r)) continue;
    bool complete = true;
    for (std::size_t k = 0; k < w; ++k) complete = complete && keys.known[r * w + k];
    if (!complete) continue;
    std::vector<double> key(keys.value.begin() + std::ptrdiff_t(r * w),
                            keys.value.begin() + std::ptrdiff_t((r + 1) * w));
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) groups.push_back({std::move(key), {}});
    groups[it->second].rows.push_back(r);
  }
  return groups;
}

/// The k donors ranked first by (distance, row index).
std::vector<std::size_t> nearest(const std::vector<DonorGroup>& groups,
                                 const KeyMatrix& keys, std::size_t row, std::size_t k) {
  const auto w = keys.width;
  std::vector<std::pair<double, std::size_t>> dist(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double d = 0;
    for (std::size_t i = 0; i < w; ++i) {
      if (!keys.known[row * w + i]) continue;
      const double diff = groups[g].key[i] - keys.value[row * w + i];
      d += diff * diff;
    }
    dist[g] = {d, g};
  }
  std::sort(dist.begin(), dist.end());
  std::vector<std::size_t> out;
  std::vector<std::size_t> level;
  for (std::size_t i = 0; i < dist.size() && out.size() < k;) {
    std::size_t j = i;
    level.clear();
    for (; j < dist.size() && dist[j].first == dist[i].first; ++j)
      level.insert(level.end(), groups[dist[j].second].rows.begin(),
                   groups[dist[j].second].rows.end());
    std::sort(level.begin(), level.end());
    const auto take = std::min(k - out.size(), level.size());
    out.insert(out.end(), level.begin(), level.begin() + std::ptrdiff_t(take));
    i = j;
  }
  return out;
}

}  // namespace

Dataset knn_impute(const Dataset& ds, std::size_t k, const std::vector<std::string>& keys) {
  if (k == 0) throw DataError("knn_impute: k must be at least 1");
  if (keys.empty()) throw DataError("knn_impute: no key columns");
  for (const auto& key : keys) (void)ds.column(key);
  if (ds.missing_count() == 0) return ds;

  const auto key_matrix = encode_keys(ds, keys);
  auto cols = ds.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& src = ds.column(c);
    const auto missing = src.missing_count();
    if (missing == 0) continue;
    if (missing == src.size())
      throw DataError("knn_impute: column '" + src.schema.name + "' is missing in every row");
    const auto groups = donor_groups(key_matrix, src);
    std::size_t donors = 0;
    for (const auto& g : groups) donors += g.rows.size();
    if (donors < k)
      throw DataError("knn_impute: column '" + src.schema.name + "' has " +
                      std::to_string(donors) + " complete donor rows, need " +
                      std::to_string(k));

    // Rows sharing a key pattern share neighbours.
    std::map<std::vector<double>, std::vector<std::size_t>> memo;
    auto& dst = cols[c];
    const auto w = key_matrix.width;
    for (std::size_t r = 0; r < src.size(); ++r) {
      if (!src.is_missing(r)) continue;
      std::vector<double> pattern(2 * w);
      for (std::size_t i = 0; i < w; ++i) {
        pattern[i] = key_matrix.known[r * w + i];
        pattern[w + i] = pattern[i] ? key_matrix.value[r * w + i] : 0.0;
      }
      auto it = memo.find(pattern);
      if (it == memo.end())
        it = memo.emplace(std::move(pattern), nearest(groups, key_matrix, r, k)).first;
      const auto& nb = it->second;
      if (src.schema.kind == ColumnKind::numerical) {
        double sum = 0;
        for (const auto n : nb) sum += src.numbers[n];
        dst.numbers[r] = sum / static_cast<double>(nb.size());
      } else {
        std::map<std::string_view, std::size_t> counts;
        for (const auto n : nb) ++counts[src.labels[n]];
        auto best = counts.begin();
        for (auto i = counts.begin(); i != counts.end(); ++i)
          if (i->second > best->second) best = i;
        dst.labels[r] = std::string(best->first);
      }
      dst.missing[r] = 0;
    }
  }
  return Dataset(std::move(cols), ds.target());
}

Dataset engineer_date_features(const Dataset& ds, const NoticeSink& notices) {
  std::optional<std::size_t> date_col;
  for (std::size_t i = 0; i < ds.cols(); ++i)
    if (ds.column(i).schema.kind == ColumnKind::date) {
      date_col = i;
      break;
    }
  if (!date_col) {
    if (notices) notices("no admission-date column; weekday/month/year features skipped");
    return ds;
  }
  const auto& dc = ds.column(*date_col);
  if (dc.missing_count())
    throw DataError("date column '" + dc.schema.name + "' has missing cells");
  const auto n = ds.rows();
  std::vector<double> weekday(n), month(n), year(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& s = dc.labels[r];
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw DataError("invalid date '" + s + "'");
    const std::chrono::weekday wd{std::chrono::sys_days{ymd}};
    weekday[r] = (wd.c_encoding() + 6) % 7;
    month[r] = m;
    year[r] = y;
  }
  auto cols = ds.columns();
  const auto base = dc.schema.name;
  cols.erase(cols.begin() + std::ptrdiff_t(*date_col));
  cols.push_back(Column::numeric(ColumnSchema::numerical(base + " Weekday", 0, 6), weekday));
  cols.push_back(Column::numeric(ColumnSchema::numerical(base + " Month", 1, 12), month));
  cols.push_back(Column::numeric(ColumnSchema::numerical(base + " Year", 0, 9999), year));
  return Dataset(std::move(cols), ds.target());
}

const ScaleRange& WranglePlan::range(std::string_view column) const {
  for (const auto& s : scaling)
    if (s.column == column) return s;
  throw DataError("plan has no scaling for column '" + std::string(column) + "'");
}

nlohmann::json WranglePlan::to_json() const {
  nlohmann::json j;
  j["knn"] = {{"k", knn_k}, {"keys", knn_keys}};
  j["one_hot"] = one_hot;
  j["date_features"] = date_features;
  j["encodings"] = nlohmann::json::array();
  for (const auto& e : encodings)
    j["encodings"].push_back({{"column", e.column}, {"labels", e.labels}});
  j["scaling"] = nlohmann::json::array();
  for (const auto& s : scaling)
    j["scaling"].push_back({{"column", s.column}, {"min", s.min}, {"max", s.max}});
  return j;
}

WranglePlan WranglePlan::from_json(const nlohmann::json& j) {
  try {
    WranglePlan p;
    p.knn_k = j.at("knn").at("k").get<std::size_t>();
    p.knn_keys = j.at("knn").at("keys").get<std::vector<std::string>>();
    p.one_hot = j.at("one_hot").get<bool>();
    p.date_features = j.value("date_features", true);
    for (const auto& e : j.at("encodings"))
      p.encodings.push_back({e.at("column").get<std::string>(),
                             e.at("labels").get<std::vector<std::string>>()});
    for (const auto& s : j.at("scaling"))
      p.scaling.push_back({s.at("column").get<std::string>(), s.at("min").get<double>(),
                           s.at("max").get<double>()});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed wrangle plan: ") + e.what());
  }
}

namespace {

Dataset apply_encodings(const Dataset& ds, const WranglePlan& plan) {
  std::vector<Column> out;
  for (const auto& c : ds.columns()) {
    if (c.schema.kind == ColumnKind::numerical) {
      out.push_back(c);
      continue;
    }
    const auto& name = c.schema.name;
    const auto it = std::find_if(plan.encodings.begin(), plan.encodings.end(),
                                 [&](const Encoding& e) { return e.column == name; });
    if (it == plan.encodings.end())
      throw DataError("plan has no encoding for column '" + name + "'");
    if (c.missing_count())
      throw DataError("column '" + name + "' has missing cells; impute before encoding");
    std::map<std::string_view, std::size_t> code;
    for (std::size_t i = 0; i < it->labels.size(); ++i) code.emplace(it->labels[i], i);
    std::vector<std::size_t> codes(c.size());
    for (std::size_t r = 0; r < c.size(); ++r) {
      const auto f = code.find(c.labels[r]);
      if (f == code.end())
        throw DataError("column '" + name + "': unseen category '" + c.labels[r] + "'");
      codes[r] = f->second;
    }
    if (!plan.one_hot) {
      std::vector<double> v(codes.begin(), codes.end());
      const double top = it->labels.empty() ? 0.0 : double(it->labels.size() - 1);
      out.push_back(Column::numeric(ColumnSchema::numerical(name, 0, top), std::move(v)));
      continue;
    }
    for (std::size_t l = 0; l < it->labels.size(); ++l) {
      std::vector<double> v(c.size());
      for (std::size_t r = 0; r < c.size(); ++r) v[r] = codes[r] == l ? 1.0 : 0.0;
      out.push_back(Column::numeric(
          ColumnSchema::numerical(name + "=" + it->labels[l], 0, 1), std::move(v)));
    }
  }
  return Dataset(std::move(out), ds.target());
}

}  // namespace

Dataset encode_categoricals(const Dataset& ds, WranglePlan& plan) {
  if (!plan.encoded()) {
    for (const auto& c : ds.columns()) {
      if (c.schema.kind == ColumnKind::numerical) continue;
      Encoding e{c.schema.name, {}};
      if (c.schema.kind == ColumnKind::logical) {
        e.labels = c.schema.categories;
      } else {
        std::set<std::string> seen;
        for (std::size_t r = 0; r < c.size(); ++r)
          if (!c.is_missing(r)) seen.insert(c.labels[r]);
        e.labels.assign(seen.begin(), seen.end());
      }
      std::sort(e.labels.begin(), e.labels.end());
      plan.encodings.push_back(std::move(e));
    }
  }
  return apply_encodings(ds, plan);
}

Dataset encode_categoricals(const Dataset& ds, const WranglePlan& plan) {
  if (!plan.encoded()) {
    bool labelled = false;
    for (const auto& c : ds.columns()) labelled = labelled || c.schema.is_labelled();
    if (labelled) throw DataError("encode_categoricals: plan has no fitted encodings");
  }
  return apply_encodings(ds, plan);
}

namespace {

Dataset apply_scaling(const Dataset& ds, const WranglePlan& plan, bool inverse) {
  auto cols = ds.columns();
  for (auto& c : cols) {
    if (c.schema.kind != ColumnKind::numerical)
      throw DataError("scale_minmax: column '" + c.schema.name + "' is not numerical");
    if (c.missing_count())
      throw DataError("scale_minmax: column '" + c.schema.name + "' has missing cells");
    const auto& range = plan.range(c.schema.name);
    double lo = inverse ? range.unscale(0) : 0.0;
    double hi = inverse ? range.unscale(1) : 1.0;
    for (auto& v : c.numbers) {
      v = inverse ? range.unscale(v) : range.scale(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    c.schema.lower = lo;
    c.schema.upper = hi;
  }
  return Dataset(std::move(cols), ds.target());
}

}  // namespace

Dataset scale_minmax(const Dataset& ds, WranglePlan& plan, const NoticeSink& notices) {
  if (!plan.scaled()) {
    for (const auto& c : ds.columns()) {
      if (c.schema.kind != ColumnKind::numerical) continue;
      ScaleRange s{c.schema.name, std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
      for (std::size_t r = 0; r < c.size(); ++r) {
        if (c.is_missing(r)) continue;
        s.min = std::min(s.min, c.numbers[r]);
        s.max = std::max(s.max, c.numbers[r]);
      }
      if (!(s.min <= s.max)) throw DataError("column '" + s.column + "' has no values");
      if (s.min == s.max && notices)
        notices("column '" + s.column + "' is constant; scaled to 0");
      plan.scaling.push_back(std::move(s));
    }
  }
  return apply_scaling(ds, plan, false);
}

Dataset scale_minmax(const Dataset& ds, const WranglePlan& plan) {
  if (!plan.scaled()) throw DataError("scale_minmax: plan has no fitted scaling");
  return apply_scaling(ds, plan, false);
}

Dataset inverse_scale(const Dataset& ds, const WranglePlan& plan) {
  if (!plan.scaled()) throw DataError("inverse_scale: plan has no fitted scaling");
  return apply_scaling(ds, plan, true);
}

namespace {

Dataset prepare(const Dataset& ds, const WranglePlan& plan, const NoticeSink& notices) {
  auto out = knn_impute(ds, plan.knn_k, plan.knn_keys);
  if (plan.date_features) out = engineer_date_features(out, notices);
  return out;
}

}  // namespace

Dataset wrangle(const Dataset& ds, WranglePlan& plan, const NoticeSink& notices) {
  const auto encoded = encode_categoricals(prepare(ds, plan, notices), plan);
  return scale_minmax(encoded, plan, notices);
}

Dataset apply_plan(const Dataset& ds, const WranglePlan& plan) {
  const auto encoded = encode_categoricals(prepare(ds, plan, NoticeSink{}), plan);
  return scale_minmax(encoded, plan);
}

FeatureTable to_features(const Dataset& ds) {
  FeatureTable t;
  t.target = ds.target();
  t.names = ds.feature_names();
  const auto n = ds.rows();
  const auto f = t.names.size();
  t.x = Tensor(Shape{n, f});
  t.y = Tensor(Shape{n});
  std::size_t j = 0;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    const auto& col = ds.column(c);
    if (col.schema.kind != ColumnKind::numerical || col.missing_count())
      throw DataError("to_features: column '" + col.schema.name +
                      "' must be numerical and fully observed");
    if (c == ds.target_index()) {
      for (std::size_t r = 0; r < n; ++r) t.y[r] = col.numbers[r];
      continue;
    }
    for (std::size_t r = 0; r < n; ++r) t.x[r * f + j] = col.numbers[r];
    ++j;
  }
  return t;
}

std::vector<ScaleRange> fit_ranges(const Tensor& x, const std::vector<std::size_t>& rows,
                                   const std::vector<std::string>& names) {
  const auto f = x.rank() == 1 ? 1 : x.shape()[1];
  if (x.rank() > 2 || names.size() != f)
    throw DimensionError("fit_ranges: expected [N x F] with F names");
  if (rows.empty()) throw DataError("fit_ranges: no rows");
  std::vector<ScaleRange> out(f);
  for (std::size_t j = 0; j < f; ++j) {
    out[j] = {names[j], std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity()};
    for (const auto r : rows) {
      const double v = x[r * f + j];
      out[j].min = std::min(out[j].min, v);
      out[j].max = std::max(out[j].max, v);
    }
  }
  return out;
}

Tensor apply_ranges(const Tensor& x, const std::vector<ScaleRange>& ranges) {
  const auto f = ranges.size();
  if (f == 0 || x.size() % f != 0) throw DimensionError("apply_ranges: width mismatch");
  auto out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ranges[i % f].scale(out[i]);
  return out;
}

Tensor invert_range(const Tensor& y, const ScaleRange& range) {
  return map(y, [&](double v) { return range.unscale(v); });
}

}  // namespace losnet::data
