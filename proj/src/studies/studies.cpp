// SPDX-License-Identifier: Apache-2.0
#include "losnet/studies/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "losnet/data/dataset.hpp"
#include "losnet/error.hpp"
#include "losnet/eval/zoo.hpp"
#include "losnet/rng.hpp"
#include "losnet/train/metrics.hpp"

namespace losnet::studies {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void write_seed(std::ostream& out, std::optional<std::uint64_t> seed) {
  if (seed) out << "# seed=" << *seed << '\n';
}

std::string number_or_empty(double v) { return std::isnan(v) ? "" : eval::fixed6(v); }

std::string number_or_inf(double v) { return std::isinf(v) ? "inf" : eval::fixed6(v); }

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) body(i);
  };
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

/// Holdout tensors with ranges fitted on the training rows.
struct ScaledHoldout {
  Tensor x_train, y_train, x_val, y_val, x_test, y_test_scaled, y_test;
  data::ScaleRange y_range;
};

ScaledHoldout scale_holdout(const data::FeatureTable& table, const Holdout& h) {
  const auto n = table.x.shape()[0];
  const auto y = table.y.reshaped({n, 1});
  const auto xr = data::fit_ranges(table.x, h.train, table.names);
  const auto yr = data::fit_ranges(y, h.train, {table.target}).front();
  ScaledHoldout s;
  s.y_range = yr;
  s.x_train = data::apply_ranges(train::gather_rows(table.x, h.train), xr);
  s.y_train = data::apply_ranges(train::gather_rows(y, h.train), {yr});
  s.x_val = data::apply_ranges(train::gather_rows(table.x, h.validation), xr);
  s.y_val = data::apply_ranges(train::gather_rows(y, h.validation), {yr});
  s.x_test = data::apply_ranges(train::gather_rows(table.x, h.test), xr);
  s.y_test = train::gather_rows(y, h.test);
  s.y_test_scaled = data::apply_ranges(s.y_test, {yr});
  return s;
}

nn::ModelSpec with_inputs(nn::ModelSpec spec, std::size_t inputs) {
  spec.inputs = inputs;
  return spec;
}

}  // namespace

data::FeatureTable drop_feature(const data::FeatureTable& table, std::string_view name) {
  const auto it = std::find(table.names.begin(), table.names.end(), name);
  if (it == table.names.end()) {
    throw std::invalid_argument("drop_feature: no feature '" + std::string(name) + "'");
  }
  const auto drop = static_cast<std::size_t>(it - table.names.begin());
  const auto n = table.x.shape()[0], f = table.x.shape()[1];
  data::FeatureTable out;
  out.target = table.target;
  out.y = table.y;
  out.names = table.names;
  out.names.erase(out.names.begin() + static_cast<std::ptrdiff_t>(drop));
  out.x = Tensor(Shape{n, f - 1});
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0, o = 0; c < f; ++c)
      if (c != drop) out.x(r, o++) = table.x(r, c);
  return out;
}

Holdout holdout_split(std::size_t n, std::uint64_t seed, double train_fraction,
                      double validation_fraction) {
  if (n < 3) throw std::invalid_argument("holdout_split: need at least 3 rows");
  if (!(train_fraction > 0) || !(validation_fraction > 0) ||
      !(train_fraction + validation_fraction < 1)) {
    throw std::invalid_argument("holdout_split: fractions must be positive and sum below 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  const auto count = [&](double frac) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * double(n))));
  };
  const std::size_t n_val = std::min(count(validation_fraction), n - 2);
  const std::size_t n_train = std::min(count(train_fraction), n - n_val - 1);
  Holdout h;
  h.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  h.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  h.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* part : {&h.train, &h.validation, &h.test}) std::sort(part->begin(), part->end());
  return h;
}

const FeatureRecord& FeatureStudyReport::removal(std::string_view feature) const {
  for (const auto& r : records)
    if (!r.is_baseline() && r.feature == feature) return r;
  throw std::out_of_range("FeatureStudyReport: no removal of '" + std::string(feature) + "'");
}

FeatureStudyReport feature_elimination_study(
    const data::FeatureTable& table, const nn::ModelSpec& spec, const train::TrainConfig& config,
    const eval::FoldPlan& plan, std::size_t threads,
    const std::function<void(const FeatureRecord&)>& on_record) {
  const auto features = table.names.size();
  if (features < 2) throw std::invalid_argument("feature_elimination_study: need at least 2 features");
  eval::ZooOptions options;
  options.train = config;
  options.proposed = spec.name;
  options.threads = threads;

  const auto evaluate = [&](const data::FeatureTable& t, std::string feature) {
    const auto run = eval::run_model_zoo(t, {with_inputs(spec, t.names.size())}, plan, options);
    const auto& s = run.report.models.front();
    FeatureRecord rec;
    rec.feature = std::move(feature);
    rec.folds = s.folds + s.failed;
    rec.failed = s.failed;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.mean_r = s.r.n > 0 ? s.r.mean : nan;
    rec.mean_mae = s.mae.n > 0 ? s.mae.mean : nan;
    rec.mean_rmse = s.rmse.n > 0 ? s.rmse.mean : nan;
    if (on_record) on_record(rec);
    return rec;
  };

  FeatureStudyReport report;
  report.records.push_back(evaluate(table, ""));
  const double base_r = report.records.front().mean_r;
  for (const auto& name : table.names) {
    auto rec = evaluate(drop_feature(table, name), name);
    rec.delta_r = rec.mean_r - base_r;
    report.records.push_back(std::move(rec));
  }
  std::stable_sort(report.records.begin() + 1, report.records.end(),
                   [](const FeatureRecord& a, const FeatureRecord& b) {
                     const bool an = std::isnan(a.delta_r), bn = std::isnan(b.delta_r);
                     if (an != bn) return bn;
                     if (!an && a.delta_r != b.delta_r) return a.delta_r > b.delta_r;
                     return a.feature < b.feature;
                   });
  return report;
}

void write_feature_study(std::ostream& out, const FeatureStudyReport& report,
                         std::optional<std::uint64_t> seed) {
  write_seed(out, seed);
  out << "feature,mean_r,mean_mae,mean_rmse,delta_r_vs_baseline\n";
  for (const auto& r : report.records) {
    data::write_csv_field(out, r.is_baseline() ? "(all features)" : r.feature);
    out << ',' << number_or_empty(r.mean_r) << ',' << number_or_empty(r.mean_mae) << ','
        << number_or_empty(r.mean_rmse) << ',' << number_or_empty(r.delta_r) << '\n';
  }
}

const HpoCell& HpoGrid::at(std::size_t lr, std::size_t batch) const {
  if (lr >= learning_rates.size() || batch >= batch_sizes.size()) {
    throw std::out_of_range("HpoGrid: cell index out of range");
  }
  return cells[lr * batch_sizes.size() + batch];
}

std::optional<std::size_t> select_best(const std::vector<HpoCell>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!std::isfinite(c.rmse)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = cells[*best];
    if (c.rmse < b.rmse ||
        (c.rmse == b.rmse && (c.learning_rate < b.learning_rate ||
                              (c.learning_rate == b.learning_rate && c.batch_size < b.batch_size))))
      best = i;
  }
  return best;
}

HpoGrid grid_search_hpo(const data::FeatureTable& table, const nn::ModelSpec& spec,
                        const train::TrainConfig& base, const HpoOptions& options) {
  if (options.learning_rates.empty() || options.batch_sizes.empty()) {
    throw std::invalid_argument("grid_search_hpo: empty learning-rate or batch-size list");
  }
  HpoGrid grid;
  grid.learning_rates = options.learning_rates;
  grid.batch_sizes = options.batch_sizes;
  const auto cols = grid.batch_sizes.size();
  grid.cells.resize(grid.learning_rates.size() * cols);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    grid.cells[i].learning_rate = grid.learning_rates[i / cols];
    grid.cells[i].batch_size = grid.batch_sizes[i % cols];
  }
  const auto model_spec = with_inputs(spec, table.names.size());
  std::optional<ScaledHoldout> holdout;
  if (!options.cv_plan) {
    holdout = scale_holdout(table, holdout_split(table.y.size(), options.seed,
                                                 options.train_fraction,
                                                 options.validation_fraction));
  }
  std::mutex callback_mutex;
  parallel_for(grid.cells.size(), options.threads, [&](std::size_t i) {
    auto& cell = grid.cells[i];
    auto config = base;
    config.learning_rate = cell.learning_rate;
    config.batch_size = cell.batch_size;
    config.seed = options.seed;
    try {
      if (options.cv_plan) {
        eval::ZooOptions zoo;
        zoo.train = config;
        zoo.proposed = model_spec.name;
        const auto run = eval::run_model_zoo(table, {model_spec}, *options.cv_plan, zoo);
        const auto& s = run.report.models.front();
        if (s.failed > 0) {
          for (const auto& f : run.reports)
            if (!f.ok()) throw TrainingError(f.error);
        }
        cell.rmse = s.rmse.mean;
      } else {
        const auto& h = *holdout;
        auto result = train::train_model(nn::build_model(model_spec, options.seed), h.x_train,
                                         h.y_train, h.x_val, h.y_val, config);
        const auto prediction = data::invert_range(result.model.predict(h.x_test), h.y_range);
        cell.rmse = train::metrics_compute(h.y_test, prediction).rmse;
      }
    } catch (const std::exception& e) {
      cell.rmse = kInf;
      cell.error = e.what();
    }
    if (options.on_cell) {
      std::lock_guard lock(callback_mutex);
      options.on_cell(cell.learning_rate, cell.batch_size, cell.rmse);
    }
  });
  grid.best = select_best(grid.cells);
  return grid;
}

void write_hpo_grid(std::ostream& out, const HpoGrid& grid, std::optional<std::uint64_t> seed) {
  std::vector<std::size_t> rows(grid.learning_rates.size()), cols(grid.batch_sizes.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  std::stable_sort(rows.begin(), rows.end(), [&](auto a, auto b) {
    return grid.learning_rates[a] > grid.learning_rates[b];
  });
  std::stable_sort(cols.begin(), cols.end(), [&](auto a, auto b) {
    return grid.batch_sizes[a] < grid.batch_sizes[b];
  });
  write_seed(out, seed);
  out << "learning_rate";
  for (auto c : cols) out << ',' << grid.batch_sizes[c];
  out << '\n';
  for (auto r : rows) {
    out << eval::sci6(grid.learning_rates[r]);
    for (auto c : cols) out << ',' << number_or_inf(grid.at(r, c).rmse);
    out << '\n';
  }
}

nlohmann::json hpo_best_json(const HpoGrid& grid, std::optional<std::uint64_t> seed) {
  nlohmann::json j;
  if (seed) j["seed"] = *seed;
  j["cells"] = grid.cells.size();
  j["failed"] = std::count_if(grid.cells.begin(), grid.cells.end(),
                              [](const HpoCell& c) { return !std::isfinite(c.rmse); });
  if (grid.best) {
    const auto& b = grid.cells[*grid.best];
    j["best"] = {{"learning_rate", b.learning_rate},
                 {"batch_size", b.batch_size},
                 {"test_rmse", std::round(b.rmse * 1e6) / 1e6}};
  } else {
    j["best"] = nullptr;
  }
  return j;
}

DepthSearch greedy_depth(std::size_t max_depth, double tolerance,
                         const std::function<double(std::size_t)>& evaluate) {
  if (max_depth < 1) throw std::invalid_argument("greedy_depth: max depth must be at least 1");
  if (!(tolerance >= 0)) throw std::invalid_argument("greedy_depth: negative tolerance");
  DepthSearch s;
  s.trace.push_back(evaluate(1));
  for (std::size_t d = 2; d <= max_depth; ++d) {
    s.trace.push_back(evaluate(d));
    // NaN and +inf never count as an improvement.
    if (!(s.trace[d - 1] <= s.trace[d - 2] - tolerance)) {
      s.depth = d - 1;
      return s;
    }
  }
  s.depth = max_depth;
  return s;
}

DepthSearch greedy_layer_search(const data::FeatureTable& table, const nn::ModelSpec& base,
                                const train::TrainConfig& config, const DepthOptions& options) {
  const auto first = base.first_recurrent();
  if (first < 0) {
    throw std::invalid_argument("greedy_layer_search: model '" + base.name +
                                "' has no recurrent block");
  }
  const auto h = scale_holdout(table, holdout_split(table.y.size(), options.seed,
                                                    options.train_fraction,
                                                    options.validation_fraction));
  return greedy_depth(options.max_depth, options.tolerance, [&](std::size_t depth) {
    auto spec = with_inputs(base, table.names.size());
    spec.layers[static_cast<std::size_t>(first)].stack = depth;
    auto c = config;
    c.seed = options.seed;
    try {
      auto result = train::train_model(nn::build_model(spec, options.seed), h.x_train, h.y_train,
                                       h.x_val, h.y_val, c);
      return train::metrics_compute(h.y_test_scaled, result.model.predict(h.x_test)).rmse;
    } catch (const TrainingError&) {
      return kInf;
    } catch (const NonFiniteError&) {
      return kInf;
    }
  });
}

void write_depth_trace(std::ostream& out, const DepthSearch& search,
                       std::optional<std::uint64_t> seed) {
  write_seed(out, seed);
  out << "depth,selection_rmse,chosen\n";
  for (std::size_t d = 1; d <= search.trace.size(); ++d)
    out << d << ',' << number_or_inf(search.trace[d - 1]) << ',' << (d == search.depth ? 1 : 0)
        << '\n';
}

}  // namespace losnet::studies
