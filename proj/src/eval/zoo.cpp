// SPDX-License-Identifier: Apache-2.0
#include "losnet/eval/zoo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "losnet/data/dataset.hpp"
#include "losnet/error.hpp"
#include "losnet/rng.hpp"

namespace losnet::eval {

bool operator==(const FoldReport& a, const FoldReport& b) {
  const auto& x = a.metrics;
  const auto& y = b.metrics;
  return a.model == b.model && a.fold == b.fold && a.error == b.error && x.mse == y.mse &&
         x.rmse == y.rmse && x.loss == y.loss && x.mae == y.mae && x.r == y.r && x.n == y.n;
}

ModelSummary summarize_folds(std::span<const FoldReport> reports) {
  if (reports.empty()) throw std::invalid_argument("summarize_folds: no reports");
  ModelSummary s;
  s.model = reports.front().model;
  std::vector<double> mse, rmse, loss, mae, r;
  for (const auto& f : reports) {
    if (f.model != s.model) {
      throw std::invalid_argument("summarize_folds: reports mix models '" + s.model + "' and '" +
                                  f.model + "'");
    }
    if (!f.ok()) {
      ++s.failed;
      continue;
    }
    ++s.folds;
    mse.push_back(f.metrics.mse);
    rmse.push_back(f.metrics.rmse);
    loss.push_back(f.metrics.loss);
    mae.push_back(f.metrics.mae);
    if (f.metrics.r) r.push_back(*f.metrics.r);
  }
  if (s.folds > 0) {
    s.mse = describe(mse);
    s.rmse = describe(rmse);
    s.loss = describe(loss);
    s.mae = describe(mae);
  }
  if (!r.empty()) s.r = describe(r);
  return s;
}

bool ZooReport::complete() const {
  return std::all_of(models.begin(), models.end(), [](const auto& m) { return m.complete(); });
}

const ModelSummary& ZooReport::model(std::string_view name) const {
  for (const auto& m : models)
    if (m.model == name) return m;
  throw std::out_of_range("ZooReport: no model '" + std::string(name) + "'");
}

namespace {

/// Fold index -> R over completed folds.
std::map<std::size_t, double> r_by_fold(std::span<const FoldReport> reports,
                                        const std::string& model) {
  std::map<std::size_t, double> out;
  for (const auto& f : reports)
    if (f.model == model && f.ok() && f.metrics.r) out[f.fold] = *f.metrics.r;
  return out;
}

std::optional<TTestResult> compare_r(const std::map<std::size_t, double>& other,
                                     const std::map<std::size_t, double>& proposed,
                                     bool paired) {
  std::vector<double> a, b;
  if (paired) {
    for (const auto& [fold, r] : other) {
      const auto it = proposed.find(fold);
      if (it == proposed.end()) continue;
      a.push_back(r);
      b.push_back(it->second);
    }
    if (a.size() < 2) return std::nullopt;
    return paired_t_test(a, b);
  }
  for (const auto& [fold, r] : other) a.push_back(r);
  for (const auto& [fold, r] : proposed) b.push_back(r);
  if (a.size() < 2 || b.size() < 2) return std::nullopt;
  return welch_t_test(a, b);
}

}  // namespace

ZooReport build_zoo_report(std::span<const FoldReport> reports, std::string proposed,
                           bool paired) {
  ZooReport z;
  z.proposed = std::move(proposed);
  z.paired = paired;
  std::vector<std::string> order;
  std::map<std::string, std::vector<FoldReport>> by_model;
  for (const auto& f : reports) {
    auto& bucket = by_model[f.model];
    if (bucket.empty()) order.push_back(f.model);
    bucket.push_back(f);
  }
  const auto proposed_r = r_by_fold(reports, z.proposed);
  const bool has_proposed = by_model.count(z.proposed) > 0;
  for (const auto& name : order) {
    auto& bucket = by_model[name];
    std::stable_sort(bucket.begin(), bucket.end(),
                     [](const auto& a, const auto& b) { return a.fold < b.fold; });
    auto s = summarize_folds(bucket);
    if (has_proposed && name != z.proposed)
      s.test = compare_r(r_by_fold(reports, name), proposed_r, paired);
    z.models.push_back(std::move(s));
  }
  return z;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t model, std::size_t fold) {
  return Rng(master).split(model).split(fold).next_u64();
}

namespace {

struct CellOutcome {
  FoldReport report;
  train::TrainHistory history;
};

CellOutcome run_cell(const data::FeatureTable& table, const nn::ModelSpec& spec,
                     const FoldPlan& plan, std::size_t fold, std::uint64_t seed,
                     const train::TrainConfig& base) {
  CellOutcome out;
  out.report.model = spec.name;
  out.report.fold = fold;
  try {
    const auto n = table.x.shape()[0];
    const auto y = table.y.reshaped({n, 1});
    const auto train_rows = plan.train_rows(fold);
    const auto& test_rows = plan.test_rows(fold);
    const auto x_ranges = data::fit_ranges(table.x, train_rows, table.names);
    const auto y_range = data::fit_ranges(y, train_rows, {table.target}).front();

    const auto x_train = data::apply_ranges(train::gather_rows(table.x, train_rows), x_ranges);
    const auto y_train = data::apply_ranges(train::gather_rows(y, train_rows), {y_range});
    const auto x_test = data::apply_ranges(train::gather_rows(table.x, test_rows), x_ranges);
    const auto y_test = train::gather_rows(y, test_rows);

    auto config = base;
    config.seed = seed;
    auto result = train::train_model(nn::build_model(spec, seed), x_train, y_train, config);
    const auto prediction = data::invert_range(result.model.predict(x_test), y_range);
    out.report.metrics = train::metrics_compute(y_test, prediction);
    out.history = std::move(result.history);
  } catch (const std::exception& e) {
    out.report.metrics = {};
    out.report.error = e.what();
    if (out.report.error.empty()) out.report.error = "unknown error";
  }
  return out;
}

}  // namespace

ZooRun run_model_zoo(const data::FeatureTable& table, const std::vector<nn::ModelSpec>& zoo,
                     const FoldPlan& plan, const ZooOptions& options) {
  if (zoo.empty()) throw std::invalid_argument("run_model_zoo: empty zoo");
  const auto n = table.x.rank() == 2 ? table.x.shape()[0] : 0;
  if (n == 0 || table.y.size() != n || table.names.size() != table.x.shape()[1]) {
    throw DimensionError("run_model_zoo: malformed feature table");
  }
  if (plan.rows() != n || plan.folds.size() != plan.k) {
    throw std::invalid_argument("run_model_zoo: fold plan covers " + std::to_string(plan.rows()) +
                                " rows, table has " + std::to_string(n));
  }
  std::set<std::string> names;
  for (const auto& spec : zoo) {
    if (!names.insert(spec.name).second) {
      throw std::invalid_argument("run_model_zoo: duplicate model name '" + spec.name + "'");
    }
    if (spec.inputs != table.names.size()) {
      throw DimensionError("run_model_zoo: model '" + spec.name + "' expects " +
                           std::to_string(spec.inputs) + " inputs, table has " +
                           std::to_string(table.names.size()));
    }
  }
  options.train.validate();

  const std::size_t k = plan.k;
  const std::size_t cells = zoo.size() * k;
  std::vector<CellOutcome> outcomes(cells);
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  const auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      const std::size_t m = c / k, f = c % k;
      const auto seed = cell_seed(options.train.seed, options.shared_model_seeds ? 0 : m, f);
      outcomes[c] = run_cell(table, zoo[m], plan, f, seed, options.train);
      if (options.on_cell) {
        std::lock_guard lock(callback_mutex);
        options.on_cell(outcomes[c].report);
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, cells);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ZooRun run;
  run.reports.reserve(cells);
  run.histories.reserve(cells);
  for (auto& o : outcomes) {
    run.reports.push_back(std::move(o.report));
    run.histories.push_back(std::move(o.history));
  }
  run.report = build_zoo_report(run.reports, options.proposed, options.paired);
  return run;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string sci6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

namespace {

void write_seed(std::ostream& out, std::optional<std::uint64_t> seed) {
  if (seed) out << "# seed=" << *seed << '\n';
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("fold reports line " + std::to_string(line) + ": bad " + what + " '" + s +
                    "'");
  }
  return v;
}

}  // namespace

void write_fold_reports(std::ostream& out, std::span<const FoldReport> reports,
                        std::optional<std::uint64_t> seed) {
  write_seed(out, seed);
  out << "model,fold,mse,rmse,loss,mae,r,error\n";
  for (const auto& f : reports) {
    data::write_csv_field(out, f.model);
    out << ',' << f.fold << ',';
    if (f.ok()) {
      const auto& m = f.metrics;
      out << data::format_number(m.mse) << ',' << data::format_number(m.rmse) << ','
          << data::format_number(m.loss) << ',' << data::format_number(m.mae) << ','
          << (m.r ? data::format_number(*m.r) : "") << ',';
    } else {
      out << ",,,,,";
    }
    data::write_csv_field(out, f.error);
    out << '\n';
  }
}

std::vector<FoldReport> read_fold_reports(std::istream& in) {
  static const std::vector<std::string> header = {"model", "fold", "mse", "rmse",
                                                  "loss",  "mae",  "r",   "error"};
  std::vector<FoldReport> out;
  std::vector<std::string> fields;
  std::size_t line = 0;
  bool seen_header = false;
  while (data::read_csv_record(in, fields)) {
    ++line;
    if (!fields.empty() && !fields[0].empty() && fields[0][0] == '#') continue;
    if (!seen_header) {
      if (fields != header) throw DataError("fold reports: unexpected header");
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError("fold reports line " + std::to_string(line) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    FoldReport f;
    f.model = fields[0];
    const auto fold = parse_double(fields[1], line, "fold");
    if (fold < 0 || fold != std::floor(fold)) {
      throw DataError("fold reports line " + std::to_string(line) + ": bad fold");
    }
    f.fold = static_cast<std::size_t>(fold);
    f.error = fields[7];
    if (f.ok()) {
      f.metrics.mse = parse_double(fields[2], line, "mse");
      f.metrics.rmse = parse_double(fields[3], line, "rmse");
      f.metrics.loss = parse_double(fields[4], line, "loss");
      f.metrics.mae = parse_double(fields[5], line, "mae");
      if (!fields[6].empty()) f.metrics.r = parse_double(fields[6], line, "r");
    }
    out.push_back(std::move(f));
  }
  if (!seen_header) throw DataError("fold reports: missing header");
  return out;
}

void write_zoo_summary(std::ostream& out, const ZooReport& report,
                       std::optional<std::uint64_t> seed) {
  write_seed(out, seed);
  out << "model,stat,mse,rmse,loss,mae,r,p_value,folds,failed\n";
  for (const auto& m : report.models) {
    const std::string p = m.test ? sci6(m.test->p) : "";
    const auto cell = [&](const Spread& s, double Spread::*field) {
      return s.n > 0 ? fixed6(s.*field) : std::string();
    };
    const std::pair<const char*, double Spread::*> rows[] = {
        {"mean", &Spread::mean}, {"max", &Spread::max}, {"min", &Spread::min}, {"std", &Spread::std}};
    for (const auto& [stat, field] : rows) {
      data::write_csv_field(out, m.model);
      out << ',' << stat << ',' << cell(m.mse, field) << ',' << cell(m.rmse, field) << ','
          << cell(m.loss, field) << ',' << cell(m.mae, field) << ',' << cell(m.r, field) << ','
          << p << ',' << m.folds << ',' << m.failed << '\n';
    }
  }
}

namespace {

/// Rounded to the 6-decimal display precision of the summaries.
double round6(double v) { return std::round(v * 1e6) / 1e6; }

/// Rounded to 7 significant digits, matching sci6.
nlohmann::json significant7(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::strtod(sci6(v).c_str(), nullptr);
}

nlohmann::json spread_json(const Spread& s) {
  if (s.n == 0) return nullptr;
  return {{"n", s.n},
          {"mean", round6(s.mean)},
          {"max", round6(s.max)},
          {"min", round6(s.min)},
          {"std", round6(s.std)}};
}

}  // namespace

nlohmann::json zoo_report_json(const ZooReport& report, std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  if (seed) j["seed"] = *seed;
  j["proposed"] = report.proposed;
  j["test"] = report.paired ? "paired" : "welch";
  j["complete"] = report.complete();
  j["models"] = nlohmann::json::array();
  for (const auto& m : report.models) {
    nlohmann::json e = {{"model", m.model},
                        {"folds", m.folds},
                        {"failed", m.failed},
                        {"mse", spread_json(m.mse)},
                        {"rmse", spread_json(m.rmse)},
                        {"loss", spread_json(m.loss)},
                        {"mae", spread_json(m.mae)},
                        {"r", spread_json(m.r)}};
    if (m.test) {
      e["p_value"] = significant7(m.test->p);
      e["t"] = std::isfinite(m.test->t) ? nlohmann::json(round6(m.test->t)) : nullptr;
      e["df"] = round6(m.test->df);
      e["degenerate"] = m.test->degenerate;
    } else {
      e["p_value"] = nullptr;
    }
    j["models"].push_back(std::move(e));
  }
  return j;
}

}  // namespace losnet::eval
