// SPDX-License-Identifier: Apache-2.0
#include "losnet/cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "losnet/data/dataset.hpp"
#include "losnet/data/schema.hpp"
#include "losnet/data/synthetic.hpp"
#include "losnet/data/wrangle.hpp"
#include "losnet/error.hpp"
#include "losnet/eval/folds.hpp"
#include "losnet/eval/zoo.hpp"
#include "losnet/nn/zoo.hpp"
#include "losnet/studies/studies.hpp"

namespace losnet::cli {

namespace fs = std::filesystem;

namespace {

/// An output path could not be created or written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  std::string config;

  std::size_t rows = 1000;
  std::string out;
  bool dates = false;
  double missing_rate = 0.001;
  std::string plots;

  std::string data;
  std::string out_dir = "out";
  std::string in_dir = "out";
  /// report only; empty means the input directory.
  std::string report_out_dir;
  std::string parse_report;
  std::string plan;
  std::size_t knn_k = 5;
  bool one_hot = false;

  std::string model = std::string(nn::kProposedModel);
  std::string proposed = std::string(nn::kProposedModel);
  std::size_t folds = 10;
  bool paired = false;

  std::size_t epochs = 50;
  double lr = 1e-3;
  std::size_t batch = 512;
  std::size_t patience = 5;
  double validation_fraction = 0.1;

  std::string lrs = "1e-2,1e-3,1e-4,1e-5";
  std::string batches = "128,256,512,1024,2048,4096,8192";
  bool full_cv = false;

  std::size_t max_depth = 4;
  double tolerance = 1e-3;

  train::TrainConfig train() const {
    train::TrainConfig c;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.max_epochs = epochs;
    c.patience = patience;
    c.validation_fraction = validation_fraction;
    c.seed = seed;
    return c;
  }
};

// Output plumbing.

/// Creates the parent directory and proves the path writable by creating
/// and removing "<path>.partial".
void check_writable(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) {
    throw OutputError("cannot create directory '" + path.parent_path().string() +
                      "': " + ec.message());
  }
  const fs::path probe = path.string() + ".partial";
  {
    std::ofstream f(probe, std::ios::binary);
    if (!f) throw OutputError("cannot write '" + path.string() + "'");
  }
  fs::remove(probe, ec);
}

/// Writes through "<path>.partial" and renames on success.
void write_artifact(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path partial = path.string() + ".partial";
  {
    std::ofstream f(partial, std::ios::binary);
    if (!f) throw OutputError("cannot write '" + path.string() + "'");
    body(f);
    f.flush();
    if (!f) throw OutputError("write to '" + partial.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(partial, path, ec);
  if (ec) throw OutputError("cannot rename '" + partial.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_artifact(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

void write_history(std::ostream& o, const train::TrainHistory& h, std::uint64_t seed) {
  o << "# seed=" << seed << '\n' << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.epochs(); ++e)
    o << e + 1 << ',' << eval::fixed6(h.train_loss[e]) << ',' << eval::fixed6(h.val_loss[e])
      << '\n';
}

// Input plumbing.

std::ifstream open_input(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("missing --data");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read '" + path + "'");
  return in;
}

data::NoticeSink notices_to(std::ostream& err) {
  return [&err](std::string_view msg) { err << "notice: " << msg << '\n'; };
}

data::Dataset load_dataset(const RunConfig& c, std::ostream& err) {
  auto in = open_input(c.data);
  auto parsed = data::parse_records(in, data::admissions_schema());
  const auto& r = parsed.report;
  if (!r.rejected_rows.empty() || !r.blanked_cells.empty()) {
    err << "notice: " << c.data << ": " << r.rejected_rows.size() << " rows rejected, "
        << r.blanked_cells.size() << " cells blanked\n";
  }
  return std::move(parsed.dataset);
}

/// Imputed, date-expanded and encoded features, still in original units.
data::FeatureTable load_features(const RunConfig& c, std::ostream& err) {
  const auto ds = load_dataset(c, err);
  data::WranglePlan plan;
  plan.knn_k = c.knn_k;
  plan.one_hot = c.one_hot;
  const auto notes = notices_to(err);
  const auto ready =
      data::engineer_date_features(data::knn_impute(ds, plan.knn_k, plan.knn_keys), notes);
  return data::to_features(data::encode_categoricals(ready, plan));
}

nn::ModelSpec resolve_model(const std::string& name, std::size_t inputs) {
  if (name.size() > 5 && name.ends_with(".json")) {
    std::ifstream in(name);
    if (!in) throw std::invalid_argument("cannot read model spec '" + name + "'");
    nn::ModelSpec spec;
    try {
      spec = nlohmann::json::parse(in).get<nn::ModelSpec>();
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("model spec '" + name + "': " + e.what());
    }
    spec.inputs = inputs;
    if (spec.name.empty()) spec.name = fs::path(name).stem().string();
    return spec;
  }
  return nn::zoo_spec(name, inputs);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    T v{};
    const auto* end = item.data() + item.size();
    const auto res = std::from_chars(item.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !(v > T{})) {
      throw std::invalid_argument(std::string(flag) + ": bad entry '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(std::string(flag) + ": empty list");
  return out;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

/// Seed recorded in a "# seed=N" first line, if any.
std::optional<std::uint64_t> header_seed(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("# seed=")) return std::nullopt;
  std::uint64_t seed = 0;
  const auto* begin = line.data() + 7;
  const auto res = std::from_chars(begin, line.data() + line.size(), seed);
  if (res.ec != std::errc()) return std::nullopt;
  return seed;
}

// Commands.

void write_plot_data(const fs::path& dir, const data::Dataset& ds, std::uint64_t seed) {
  write_artifact(dir / "los_histogram.csv", [&](std::ostream& o) {
    o << "# seed=" << seed << '\n' << "los_days,count\n";
    const auto h = data::los_histogram(ds);
    for (std::size_t d = 0; d < h.size(); ++d) o << d << ',' << h[d] << '\n';
  });
  write_artifact(dir / "target_correlations.csv", [&](std::ostream& o) {
    o << "# seed=" << seed << '\n' << "feature,correlation\n";
    for (const auto& [name, r] : data::target_correlations(ds)) {
      data::write_csv_field(o, name);
      o << ',' << eval::fixed6(r) << '\n';
    }
  });
  write_artifact(dir / "category_counts.csv", [&](std::ostream& o) {
    o << "# seed=" << seed << '\n' << "column,label,count\n";
    for (std::string_view col : {std::string_view("AgeGroup"), std::string_view("Gender"),
                                 std::string_view("Race"), std::string_view("Ethnicity"),
                                 std::string_view("Type Of Admission"), data::kSeverityCode,
                                 std::string_view("APR Medical Surgical Description"),
                                 std::string_view("Payment Typology 1")}) {
      for (const auto& [label, count] : data::category_counts(ds, col)) {
        data::write_csv_field(o, col);
        o << ',';
        data::write_csv_field(o, label);
        o << ',' << count << '\n';
      }
    }
  });
}

void cmd_generate(const RunConfig& c, std::ostream& out, std::ostream&) {
  const fs::path path = c.out;
  check_writable(path);
  if (!c.plots.empty()) check_writable(fs::path(c.plots) / "los_histogram.csv");
  data::SyntheticProfile profile;
  profile.admission_date = c.dates;
  profile.missing_rate = c.missing_rate;
  const auto ds = data::generate_synthetic(c.rows, c.seed, profile);
  write_artifact(path, [&](std::ostream& o) { data::write_records(o, ds); });
  if (!c.plots.empty()) write_plot_data(c.plots, ds, c.seed);
  const auto s = data::summarize_distribution(ds);
  out << "rows " << s.rows << '\n'
      << "los_mean " << eval::fixed6(s.los_mean) << '\n'
      << "los_max " << eval::fixed6(s.los_max) << '\n'
      << "los_zero_fraction " << eval::fixed6(s.los_zero_fraction) << '\n'
      << "los_over_20_fraction " << eval::fixed6(s.los_over_20_fraction) << '\n'
      << "cost_los_correlation " << eval::fixed6(s.cost_los_correlation) << '\n';
}

void cmd_wrangle(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path path = c.out, plan_path = c.plan;
  check_writable(path);
  if (!c.plan.empty()) check_writable(plan_path);
  if (!c.parse_report.empty()) check_writable(c.parse_report);
  auto in = open_input(c.data);
  const auto parsed = data::parse_records(in, data::admissions_schema());
  data::WranglePlan plan;
  plan.knn_k = c.knn_k;
  plan.one_hot = c.one_hot;
  const auto ds = data::wrangle(parsed.dataset, plan, notices_to(err));
  write_artifact(path, [&](std::ostream& o) { data::write_records(o, ds); });
  if (!c.plan.empty()) write_json(plan_path, plan.to_json());
  if (!c.parse_report.empty()) {
    write_artifact(c.parse_report,
                   [&](std::ostream& o) { data::write_parse_report(o, parsed.report); });
  }
  out << "rows " << ds.rows() << '\n'
      << "columns " << ds.cols() << '\n'
      << "rejected_rows " << parsed.report.rejected_rows.size() << '\n'
      << "blanked_cells " << parsed.report.blanked_cells.size() << '\n';
}

void write_zoo_outputs(const fs::path& dir, const eval::ZooReport& report, std::uint64_t seed) {
  write_artifact(dir / "zoo_summary.csv",
                 [&](std::ostream& o) { eval::write_zoo_summary(o, report, seed); });
  write_json(dir / "zoo_report.json", eval::zoo_report_json(report, seed));
}

void print_zoo(std::ostream& out, const eval::ZooReport& report) {
  out << "model,folds,failed,mean_r,mean_rmse,mean_mae,p_value\n";
  for (const auto& m : report.models) {
    out << m.model << ',' << m.folds << ',' << m.failed << ','
        << (m.r.n ? fixed3(m.r.mean) : "") << ',' << (m.rmse.n ? fixed3(m.rmse.mean) : "") << ','
        << (m.mae.n ? fixed3(m.mae.mean) : "") << ',' << (m.test ? eval::sci6(m.test->p) : "")
        << '\n';
  }
}

void cmd_cv(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path dir = c.out_dir;
  check_writable(dir / "fold_reports.csv");
  check_writable(dir / "history" / "probe.csv");
  const auto table = load_features(c, err);
  std::vector<nn::ModelSpec> zoo;
  if (c.model == "all") {
    zoo = nn::default_zoo(table.names.size());
  } else {
    zoo.push_back(resolve_model(c.model, table.names.size()));
  }
  const auto plan = eval::kfold_split(table.y.size(), c.folds, c.seed);
  eval::ZooOptions options;
  options.train = c.train();
  options.proposed = c.model == "all" ? c.proposed : zoo.front().name;
  options.paired = c.paired;
  options.threads = c.threads;
  options.on_cell = [&err](const eval::FoldReport& f) {
    err << "cell " << f.model << " fold " << f.fold << ": "
        << (f.ok() ? "r=" + (f.metrics.r ? fixed3(*f.metrics.r) : std::string("undefined"))
                   : "failed: " + f.error)
        << '\n';
  };
  const auto run = eval::run_model_zoo(table, zoo, plan, options);

  write_artifact(dir / "fold_reports.csv",
                 [&](std::ostream& o) { eval::write_fold_reports(o, run.reports, c.seed); });
  for (std::size_t i = 0; i < run.reports.size(); ++i) {
    const auto& f = run.reports[i];
    if (!f.ok()) continue;
    write_artifact(dir / "history" / (f.model + "_" + std::to_string(f.fold) + ".csv"),
                   [&](std::ostream& o) { write_history(o, run.histories[i], c.seed); });
  }
  write_zoo_outputs(dir, run.report, c.seed);
  print_zoo(out, run.report);
  if (!run.report.complete()) err << "warning: some cells failed; see fold_reports.csv\n";
}

void cmd_report(const RunConfig& c, std::ostream& out, std::ostream&) {
  const fs::path in_path = fs::path(c.in_dir) / "fold_reports.csv";
  const fs::path dir = c.report_out_dir.empty() ? fs::path(c.in_dir) : fs::path(c.report_out_dir);
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read '" + in_path.string() + "'");
  check_writable(dir / "zoo_summary.csv");
  const auto reports = eval::read_fold_reports(in);
  if (reports.empty()) throw std::invalid_argument("'" + in_path.string() + "' has no reports");
  bool has_proposed = false;
  for (const auto& f : reports) has_proposed = has_proposed || f.model == c.proposed;
  const auto proposed = has_proposed ? c.proposed : reports.front().model;
  const auto report = eval::build_zoo_report(reports, proposed, c.paired);
  const auto seed = header_seed(in_path).value_or(c.seed);
  write_zoo_outputs(dir, report, seed);
  print_zoo(out, report);
}

void cmd_featsel(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path path = fs::path(c.out_dir) / "featsel.csv";
  check_writable(path);
  const auto table = load_features(c, err);
  const auto spec = resolve_model(c.model, table.names.size());
  const auto plan = eval::kfold_split(table.y.size(), c.folds, c.seed);
  const auto report = studies::feature_elimination_study(
      table, spec, c.train(), plan, c.threads, [&err](const studies::FeatureRecord& r) {
        err << "run " << (r.is_baseline() ? std::string("(all features)") : "-" + r.feature)
            << ": mean r=" << fixed3(r.mean_r) << '\n';
      });
  write_artifact(path, [&](std::ostream& o) { studies::write_feature_study(o, report, c.seed); });
  out << "baseline_mean_r " << eval::fixed6(report.baseline().mean_r) << '\n';
  out << "best removal candidates (feature,delta_r):\n";
  for (std::size_t i = 1; i < std::min<std::size_t>(4, report.records.size()); ++i)
    out << report.records[i].feature << ',' << eval::fixed6(report.records[i].delta_r) << '\n';
}

void cmd_hpo(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path dir = c.out_dir;
  check_writable(dir / "hpo_grid.csv");
  studies::HpoOptions options;
  options.learning_rates = parse_list<double>(c.lrs, "--lrs");
  options.batch_sizes = parse_list<std::size_t>(c.batches, "--batches");
  const auto table = load_features(c, err);
  const auto spec = resolve_model(c.model, table.names.size());
  options.seed = c.seed;
  options.threads = c.threads;
  if (c.full_cv) options.cv_plan = eval::kfold_split(table.y.size(), c.folds, c.seed);
  options.on_cell = [&err](double lr, std::size_t batch, double rmse) {
    err << "cell lr=" << eval::sci6(lr) << " batch=" << batch << ": rmse="
        << (std::isfinite(rmse) ? fixed3(rmse) : std::string("inf")) << '\n';
  };
  const auto grid = studies::grid_search_hpo(table, spec, c.train(), options);
  write_artifact(dir / "hpo_grid.csv",
                 [&](std::ostream& o) { studies::write_hpo_grid(o, grid, c.seed); });
  write_json(dir / "hpo_best.json", studies::hpo_best_json(grid, c.seed));
  if (!grid.best) throw TrainingError("every grid cell diverged");
  const auto& b = grid.cells[*grid.best];
  out << "best learning_rate " << eval::sci6(b.learning_rate) << " batch_size " << b.batch_size
      << " test_rmse " << eval::fixed6(b.rmse) << '\n';
}

void cmd_depth(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path path = fs::path(c.out_dir) / "depth_trace.csv";
  check_writable(path);
  const auto table = load_features(c, err);
  const auto spec = resolve_model(c.model, table.names.size());
  studies::DepthOptions options;
  options.max_depth = c.max_depth;
  options.tolerance = c.tolerance;
  options.seed = c.seed;
  const auto search = studies::greedy_layer_search(table, spec, c.train(), options);
  write_artifact(path, [&](std::ostream& o) { studies::write_depth_trace(o, search, c.seed); });
  out << "chosen depth " << search.depth << '\n';
}

// Argument handling.

/// Accepts numbers strictly above zero.
const CLI::Validator kPositive(
    [](std::string& v) -> std::string {
      double d = 0.0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !(d > 0.0))
        return "must be a number above 0, got '" + v + "'";
      return {};
    },
    "POSITIVE");

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--threads", c.threads, "Worker threads; 1 is the bit-reproducible path")
      ->check(kPositive);
  sub->add_option("--config", c.config, "JSON file of flag values; command-line flags win");
}

void add_data(CLI::App* sub, RunConfig& c) {
  sub->add_option("--data", c.data, "Admissions CSV")->required();
  sub->add_option("--knn-k", c.knn_k, "Neighbours for imputation")->check(kPositive);
  sub->add_flag("--one-hot", c.one_hot, "One-hot instead of label encoding");
}

void add_training(CLI::App* sub, RunConfig& c) {
  sub->add_option("--epochs", c.epochs, "Maximum epochs")->check(kPositive);
  sub->add_option("--lr", c.lr, "Adam learning rate")->check(kPositive);
  sub->add_option("--batch", c.batch, "Mini-batch size")->check(kPositive);
  sub->add_option("--patience", c.patience, "Early-stopping patience in epochs");
  sub->add_option("--validation-fraction", c.validation_fraction,
                  "Share of training rows held out for early stopping")
      ->check(CLI::Range(0.0, 0.99));
}

void add_model(CLI::App* sub, RunConfig& c, std::string help) {
  std::string names;
  for (const auto& n : nn::zoo_names()) names += (names.empty() ? "" : ", ") + n;
  sub->add_option("--model", c.model, help + " (" + names + ", or a .json spec)");
}

/// Turns a JSON config object into flag tokens for `sub`.
std::vector<std::string> config_tokens(const std::string& path, CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config '" + path + "': expected an object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || sub->get_option_no_throw(flag) == nullptr) {
      throw std::invalid_argument("config '" + path + "': unknown key '" + key + "' for " +
                                  sub->get_name());
    }
    const auto scalar = [&](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
      if (v.is_number_float()) return data::format_number(v.get<double>());
      throw std::invalid_argument("config '" + path + "': bad value for '" + key + "'");
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
      tokens.push_back(flag);
      tokens.push_back(joined);
    } else {
      tokens.push_back(flag);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

/// Value of --config among the arguments, if present.
std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Length-of-stay modelling experiments", "losnet"};
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic admissions CSV");
  gen->add_option("--rows", c.rows, "Rows to generate")->check(kPositive);
  gen->add_option("--out", c.out, "Output CSV")->required();
  gen->add_flag("--dates", c.dates, "Include an Admission Date column");
  gen->add_option("--missing-rate", c.missing_rate, "Share of nullable cells left empty")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--plots", c.plots, "Directory for plot data (histogram, counts, correlations)");
  add_common(gen, c);

  auto* wr = app.add_subcommand("wrangle", "Impute, encode and scale a CSV");
  add_data(wr, c);
  wr->add_option("--out", c.out, "Wrangled CSV")->required();
  wr->add_option("--plan", c.plan, "Write the fitted plan as JSON");
  wr->add_option("--parse-report", c.parse_report, "Write rejected rows and blanked cells");
  add_common(wr, c);

  auto* cv = app.add_subcommand("cv", "Cross-validate one model or the whole zoo");
  add_data(cv, c);
  add_model(cv, c, "Model name, 'all' for the 12-model zoo");
  cv->add_option("--folds", c.folds, "Fold count")->check(CLI::Range(2, 1000000));
  cv->add_option("--proposed", c.proposed, "Reference model for the t-tests with --model all");
  cv->add_flag("--paired", c.paired, "Paired t-test by fold instead of Welch");
  cv->add_option("--out-dir", c.out_dir, "Output directory");
  add_training(cv, c);
  add_common(cv, c);

  auto* fsel = app.add_subcommand("featsel", "Leave-one-feature-out study");
  add_data(fsel, c);
  add_model(fsel, c, "Model");
  fsel->add_option("--folds", c.folds, "Fold count")->check(CLI::Range(2, 1000000));
  fsel->add_option("--out-dir", c.out_dir, "Output directory");
  add_training(fsel, c);
  add_common(fsel, c);

  auto* hpo = app.add_subcommand("hpo", "Learning rate x batch size grid search");
  add_data(hpo, c);
  add_model(hpo, c, "Model");
  hpo->add_option("--lrs", c.lrs, "Comma-separated learning rates");
  hpo->add_option("--batches", c.batches, "Comma-separated batch sizes");
  hpo->add_flag("--full-cv", c.full_cv, "Score cells by cross-validation instead of a holdout");
  hpo->add_option("--folds", c.folds, "Fold count for --full-cv")->check(CLI::Range(2, 1000000));
  hpo->add_option("--out-dir", c.out_dir, "Output directory");
  add_training(hpo, c);
  add_common(hpo, c);

  auto* depth = app.add_subcommand("depth", "Greedy recurrent stack depth search");
  add_data(depth, c);
  add_model(depth, c, "Base model");
  depth->add_option("--max", c.max_depth, "Largest stack depth")->check(kPositive);
  depth->add_option("--tolerance", c.tolerance, "Required improvement in scaled RMSE")
      ->check(CLI::NonNegativeNumber);
  depth->add_option("--out-dir", c.out_dir, "Output directory");
  add_training(depth, c);
  add_common(depth, c);

  auto* rep = app.add_subcommand("report", "Rebuild zoo summaries from fold_reports.csv");
  rep->add_option("--in-dir", c.in_dir, "Directory holding fold_reports.csv");
  rep->add_option("--out-dir", c.report_out_dir, "Output directory; empty means --in-dir");
  rep->add_option("--proposed", c.proposed, "Reference model for the t-tests");
  rep->add_flag("--paired", c.paired, "Paired t-test by fold instead of Welch");
  add_common(rep, c);

  std::vector<std::string> argv = {"losnet"};
  try {
    // Config values go first so later command-line flags override them.
    std::vector<std::string> tail = args;
    if (const auto config = find_config(args)) {
      const auto name = std::find_if(args.begin(), args.end(),
                                     [](const auto& a) { return !a.starts_with("-"); });
      CLI::App* sub = name == args.end() ? nullptr : app.get_subcommand_no_throw(*name);
      if (sub == nullptr) throw std::invalid_argument("--config needs a command");
      argv.push_back(*name);
      for (auto& t : config_tokens(*config, sub)) argv.push_back(std::move(t));
      tail.erase(tail.begin() + (name - args.begin()));
    }
    argv.insert(argv.end(), tail.begin(), tail.end());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<const char*> raw;
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      cmd_generate(c, out, err);
    } else if (wr->parsed()) {
      cmd_wrangle(c, out, err);
    } else if (cv->parsed()) {
      cmd_cv(c, out, err);
    } else if (fsel->parsed()) {
      cmd_featsel(c, out, err);
    } else if (hpo->parsed()) {
      cmd_hpo(c, out, err);
    } else if (depth->parsed()) {
      cmd_depth(c, out, err);
    } else if (rep->parsed()) {
      cmd_report(c, out, err);
    }
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnwritable;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace losnet::cli
