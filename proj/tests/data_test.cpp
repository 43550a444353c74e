// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "knn_oracle.hpp"
#include "losnet/data/synthetic.hpp"
#include "losnet/data/wrangle.hpp"
#include "losnet/error.hpp"

using namespace losnet;
using namespace losnet::data;

namespace {

/// Gender, Length Of Stay and Total Costs; enough to exercise parsing.
std::vector<ColumnSchema> small_schema() {
  auto los = ColumnSchema::numerical(std::string(kLengthOfStay), 0, 140);
  los.nullable = false;
  return {ColumnSchema::categorical("Gender", 3), los,
          ColumnSchema::numerical(std::string(kTotalCosts), 100, 2e5)};
}

ParseResult parse_text(const std::string& text,
                       const std::vector<ColumnSchema>& schema = small_schema()) {
  std::istringstream in(text);
  return parse_records(in, schema);
}

void collect(std::vector<std::string>& sink, NoticeSink& out) {
  out = [&sink](std::string_view s) { sink.emplace_back(s); };
}

Dataset numeric_dataset(std::vector<double> xs, std::vector<double> ys) {
  std::vector<Column> cols;
  cols.push_back(Column::numeric(ColumnSchema::numerical("x", -1e9, 1e9), std::move(xs)));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", -1e9, 1e9), std::move(ys)));
  return Dataset(std::move(cols), "y");
}

}  // namespace

TEST(Schema, NamesNormalizeAcrossSpellings) {
  EXPECT_EQ(normalize_column_name("Length of Stay"), normalize_column_name("Length Of Stay"));
  EXPECT_EQ(normalize_column_name("Zip Code - 3 digits"), normalize_column_name("ZipCode 3Digits"));
  EXPECT_EQ(normalize_column_name("Age Group"), normalize_column_name("AgeGroup"));
}

TEST(Schema, AdmissionsSchemaShape) {
  const auto& s = admissions_schema();
  std::size_t required = 0;
  for (const auto& c : s) {
    c.validate();
    required += c.required ? 1 : 0;
  }
  EXPECT_EQ(required, 23u);  // 22 features and the target
  EXPECT_EQ(s.back().kind, ColumnKind::date);
  EXPECT_FALSE(s.back().required);
}

TEST(Schema, NumericalBoundsMustBeFinite) {
  auto bad = ColumnSchema::numerical("x", 0, std::nan(""));
  EXPECT_THROW(bad.validate(), DataError);
}

TEST(Parse, WellFormedFile) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\nF,3,1000\nM,0,250.5\nU,12,9000\n");
  EXPECT_EQ(r.dataset.rows(), 3u);
  EXPECT_TRUE(r.report.rejected_rows.empty());
  EXPECT_TRUE(r.report.blanked_cells.empty());
  EXPECT_EQ(r.dataset.column("Gender").schema.categories,
            (std::vector<std::string>{"F", "M", "U"}));
}

TEST(Parse, LosAboveBoundRejectsRowAndCitesColumnAndBound) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\nF,3,1000\nM,150,900\n");
  EXPECT_EQ(r.dataset.rows(), 1u);
  ASSERT_EQ(r.report.rejected_rows.size(), 1u);
  const auto& issue = r.report.rejected_rows[0];
  EXPECT_EQ(issue.row, 2u);
  EXPECT_EQ(issue.column, "Length Of Stay");
  EXPECT_NE(issue.reason.find("140"), std::string::npos) << issue.reason;
}

TEST(Parse, EmptyCategoricalCellIsMissing) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\n,3,1000\nM,1,900\n");
  EXPECT_EQ(r.dataset.rows(), 2u);
  EXPECT_TRUE(r.dataset.column("Gender").is_missing(0));
  EXPECT_FALSE(r.dataset.column("Gender").is_missing(1));
  EXPECT_TRUE(r.report.rejected_rows.empty());
}

TEST(Parse, PlaceholdersAreMissing) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\nNA,3,N/A\nnull,1,?\n");
  EXPECT_EQ(r.dataset.missing_count(), 4u);
  EXPECT_TRUE(r.report.blanked_cells.empty());
}

TEST(Parse, UnparseableNumberBlanksCellAndCounts) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\nF,3,abc\nF,2,50\nM,1,700\n");
  EXPECT_EQ(r.dataset.rows(), 3u);
  EXPECT_EQ(r.report.blanked_cells.size(), 2u);  // unparseable, and below 100
  EXPECT_TRUE(r.dataset.column("Total Costs").is_missing(0));
  EXPECT_TRUE(r.dataset.column("Total Costs").is_missing(1));
}

TEST(Parse, BadTargetRejectsRow) {
  const auto r =
      parse_text("Gender,Length Of Stay,Total Costs\nF,x,1000\nF,,1000\nF,-1,1000\nM,2,300\n");
  EXPECT_EQ(r.dataset.rows(), 1u);
  EXPECT_EQ(r.report.rejected_rows.size(), 3u);
}

TEST(Parse, HeaderOrderAndSpellingInsensitive) {
  const auto r = parse_text("total costs,GENDER,Length of Stay\n1000,F,3\n");
  EXPECT_EQ(r.dataset.column("Gender").labels[0], "F");
  EXPECT_EQ(r.dataset.column(kTotalCosts).numbers[0], 1000.0);
  EXPECT_EQ(r.dataset.column(kLengthOfStay).numbers[0], 3.0);
  // Output keeps schema order and names.
  EXPECT_EQ(r.dataset.column(0).schema.name, "Gender");
}

TEST(Parse, MissingRequiredColumnThrows) {
  EXPECT_THROW(parse_text("Gender,Total Costs\nF,1000\n"), DataError);
  EXPECT_THROW(parse_text("Length Of Stay,Total Costs\n1,1000\n"), DataError);
}

TEST(Parse, UnknownColumnsIgnoredAndReported) {
  const auto r = parse_text("Facility Name,Gender,Length Of Stay,Total Costs\n\"A, B\",F,3,1000\n");
  EXPECT_EQ(r.dataset.cols(), 3u);
  EXPECT_EQ(r.report.ignored_columns, std::vector<std::string>{"Facility Name"});
}

TEST(Parse, QuotingCurrencyAndOpenEndedStays) {
  const auto r = parse_text(
      "Gender,Length Of Stay,Total Costs\r\n\"F\",\"120 +\",\"$1,234.50\"\r\n\"M\"\"x\",2,300\r\n");
  ASSERT_EQ(r.dataset.rows(), 2u);
  EXPECT_EQ(r.dataset.column(kLengthOfStay).numbers[0], 120.0);
  EXPECT_EQ(r.dataset.column(kTotalCosts).numbers[0], 1234.5);
  EXPECT_EQ(r.dataset.column("Gender").labels[1], "M\"x");
}

TEST(Parse, WrongFieldCountRejectsRow) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\nF,3\nM,1,300\n");
  EXPECT_EQ(r.dataset.rows(), 1u);
  EXPECT_EQ(r.report.rejected_rows.size(), 1u);
}

TEST(Parse, NoUsableRowsThrows) {
  EXPECT_THROW(parse_text("Gender,Length Of Stay,Total Costs\nF,200,300\n"), DataError);
  EXPECT_THROW(parse_text(""), DataError);
}

TEST(Parse, DatesAcceptIsoAndUsSpellings) {
  auto schema = small_schema();
  schema.push_back(ColumnSchema::date(std::string(kAdmissionDate)));
  schema.back().required = false;
  const auto r = parse_text(
      "Gender,Length Of Stay,Total Costs,Admission Date\nF,1,300,03/15/2021\nF,1,300,2021-02-30\n",
      schema);
  EXPECT_EQ(r.dataset.column(kAdmissionDate).labels[0], "2021-03-15");
  EXPECT_TRUE(r.dataset.column(kAdmissionDate).is_missing(1));
  EXPECT_EQ(r.report.blanked_cells.size(), 1u);
}

TEST(Parse, ReportCsv) {
  const auto r = parse_text("Gender,Length Of Stay,Total Costs\nF,150,300\nM,1,x\n");
  std::ostringstream out;
  write_parse_report(out, r.report);
  EXPECT_EQ(out.str(),
            "row,column,reason\n1,Length Of Stay,\"value 150 outside [0, 140]\"\n"
            "2,Total Costs,unparseable number 'x'\n");
}

TEST(Dataset, ConstructorChecksInvariants) {
  std::vector<Column> cols;
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 1), {0.5, 2.0}));
  EXPECT_THROW(Dataset(cols, "y"), DataError);  // out of bounds
  cols[0].numbers[1] = 1.0;
  cols[0].missing[1] = 1;
  EXPECT_THROW(Dataset(cols, "y"), DataError);  // missing target
  cols[0].missing[1] = 0;
  EXPECT_NO_THROW(Dataset(cols, "y"));
  EXPECT_THROW(Dataset(cols, "z"), DataError);
}

TEST(RoundTrip, WriteThenParseReproducesSyntheticData) {
  for (const bool dates : {false, true}) {
    SyntheticProfile p;
    p.admission_date = dates;
    p.missing_rate = 0.02;
    const auto ds = generate_synthetic(500, 11, p);
    std::stringstream buf;
    write_records(buf, ds);
    const auto back = parse_records(buf, admissions_schema());
    EXPECT_TRUE(back.report.rejected_rows.empty());
    EXPECT_TRUE(back.report.blanked_cells.empty());
    EXPECT_TRUE(back.dataset == ds) << "dates=" << dates;
  }
}

TEST(Knn, DuplicateRowWithKOne) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("a", 2), {"p", "q", "p"}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("v", 0, 100), {7, 30, 0}, {0, 0, 1}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 1), {0, 0, 0}));
  const Dataset ds(cols, "y");
  const auto out = knn_impute(ds, 1, {"a"});
  EXPECT_EQ(out.column("v").numbers[2], 7.0);
  EXPECT_EQ(out.missing_count(), 0u);
}

TEST(Knn, MeanOfThreeNeighbours) {
  // Keys place rows 0-2 at distance 0 from row 4 and row 3 far away.
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("a", 2), {"p", "p", "p", "q", "p"}));
  cols.push_back(
      Column::numeric(ColumnSchema::numerical("v", 0, 100), {2, 4, 6, 90, 0}, {0, 0, 0, 0, 1}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 1), {0, 0, 0, 0, 0}));
  const auto out = knn_impute(Dataset(cols, "y"), 3, {"a"});
  EXPECT_EQ(out.column("v").numbers[4], 4.0);
}

TEST(Knn, NoMissingCellsReturnsIdenticalDataset) {
  const auto ds = generate_synthetic(200, 3, SyntheticProfile{.missing_rate = 0.0});
  ASSERT_EQ(ds.missing_count(), 0u);
  const auto out = knn_impute(ds, 5);
  EXPECT_TRUE(out == ds);
  std::ostringstream a, b;
  write_records(a, ds);
  write_records(b, out);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Knn, ModeTieGoesToSmallestLabel) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("a", 1), {"p", "p", "p", "p", "p"}));
  cols.push_back(Column::labelled(ColumnSchema::categorical("t", 3), {"zeta", "beta", "zeta", "beta", ""},
                                  {0, 0, 0, 0, 1}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 1), {0, 0, 0, 0, 0}));
  const auto out = knn_impute(Dataset(cols, "y"), 4, {"a"});
  EXPECT_EQ(out.column("t").labels[4], "beta");
}

TEST(Knn, DistanceTiesGoToLowerRowIndex) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("a", 3), {"b", "a", "c", "c", "b"}));
  cols.push_back(
      Column::numeric(ColumnSchema::numerical("v", 0, 100), {0, 10, 20, 30, 0}, {1, 0, 0, 0, 0}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 1), {0, 0, 0, 0, 0}));
  // Row 0 has key "b": row 4 at distance 0, then rows 1, 2, 3 all at 0.25.
  const auto out = knn_impute(Dataset(cols, "y"), 2, {"a"});
  EXPECT_EQ(out.column("v").numbers[0], (0.0 + 10.0) / 2);
}

TEST(Knn, Errors) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("a", 2), {"p", "q", "p"}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("v", 0, 100), {1, 2, 0}, {0, 0, 1}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("w", 0, 100), {0, 0, 0}, {1, 1, 1}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 1), {0, 0, 0}));
  const Dataset ds(cols, "y");
  EXPECT_THROW(knn_impute(ds, 0, {"a"}), DataError);
  EXPECT_THROW(knn_impute(ds, 1, {"nope"}), DataError);
  try {
    knn_impute(ds.drop_column("w"), 3, {"a"});
    ADD_FAILURE() << "expected too few donors";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'v'"), std::string::npos) << e.what();
  }
  try {
    knn_impute(ds, 1, {"a"});
    ADD_FAILURE() << "expected all-missing column";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("every row"), std::string::npos) << e.what();
  }
}

TEST(Knn, MatchesExhaustiveOracleOnRandomTables) {
  Rng rng(2024);
  const std::vector<std::string> keys{"k1", "k2", "k3", "k4", "k5"};
  for (int trial = 0; trial < 20; ++trial) {
    const auto rows = 20 + rng.index(200);
    const double missing = rng.uniform(0.05, 0.2);
    const auto ds = losnet::testing::random_impute_case(rng, rows, missing);
    const std::size_t k = 1 + rng.index(6);
    const auto got = knn_impute(ds, k, keys);
    const auto want = losnet::testing::knn_oracle(ds, k, keys);
    EXPECT_TRUE(got == want) << "trial " << trial << " rows " << rows << " k " << k;
  }
}

TEST(Encode, LexicographicCodes) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("Gender", 3), {"U", "F", "M", "F"}));
  cols.push_back(Column::labelled(ColumnSchema::categorical("One", 1), {"x", "x", "x", "x"}));
  cols.push_back(Column::labelled(ColumnSchema::logical("ED"), {"Y", "N", "N", "Y"}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 9), {1, 2, 3, 4}));
  WranglePlan plan;
  const auto out = encode_categoricals(Dataset(cols, "y"), plan);
  EXPECT_EQ(out.column("Gender").numbers, (std::vector<double>{2, 0, 1, 0}));
  EXPECT_EQ(out.column("One").numbers, (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(out.column("ED").numbers, (std::vector<double>{1, 0, 0, 1}));
  EXPECT_EQ(out.column("y").numbers, (std::vector<double>{1, 2, 3, 4}));
  ASSERT_EQ(plan.encodings.size(), 3u);
  EXPECT_EQ(plan.encodings[0].labels, (std::vector<std::string>{"F", "M", "U"}));
}

TEST(Encode, UnseenCategoryNamesColumnAndValue) {
  const auto full = generate_synthetic(400, 5, SyntheticProfile{.missing_rate = 0.0});
  const Dataset ds({full.column("CCSR Diagnosis Code"), full.column(kLengthOfStay)},
                   std::string(kLengthOfStay));
  std::vector<std::size_t> train, test;
  for (std::size_t r = 0; r < ds.rows(); ++r) (r < 100 ? train : test).push_back(r);
  WranglePlan plan;
  (void)encode_categoricals(ds.select_rows(train), plan);
  ASSERT_EQ(plan.encodings.size(), 1u);
  const auto& codes = plan.encodings[0].labels;
  std::string novel;
  for (const auto r : test) {
    const auto& label = ds.column(0).labels[r];
    if (std::find(codes.begin(), codes.end(), label) == codes.end()) {
      novel = label;
      break;
    }
  }
  ASSERT_FALSE(novel.empty());
  try {
    (void)encode_categoricals(ds.select_rows(test), std::as_const(plan));
    ADD_FAILURE() << "expected unseen category";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("CCSR Diagnosis Code"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'" + novel + "'"), std::string::npos) << msg;
  }
}

TEST(Encode, OneHotColumns) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("g", 3), {"b", "a", "c"}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 9), {1, 2, 3}));
  WranglePlan plan;
  plan.one_hot = true;
  const auto out = encode_categoricals(Dataset(cols, "y"), plan);
  EXPECT_EQ(out.feature_names(), (std::vector<std::string>{"g=a", "g=b", "g=c"}));
  EXPECT_EQ(out.column("g=b").numbers, (std::vector<double>{1, 0, 0}));
}

TEST(Encode, MissingLabelsMustBeImputedFirst) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::categorical("g", 2), {"a", ""}, {0, 1}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 9), {1, 2}));
  WranglePlan plan;
  EXPECT_THROW(encode_categoricals(Dataset(cols, "y"), plan), DataError);
}

TEST(Dates, MondayIsZero) {
  std::vector<Column> cols;
  cols.push_back(Column::labelled(ColumnSchema::date("Admission Date"),
                                  {"2021-03-15", "2021-03-21", "2021-03-15"}));
  cols.push_back(Column::numeric(ColumnSchema::numerical("y", 0, 9), {1, 2, 3}));
  const auto out = engineer_date_features(Dataset(cols, "y"), {});
  EXPECT_FALSE(out.find("Admission Date"));
  EXPECT_EQ(out.column("Admission Date Weekday").numbers, (std::vector<double>{0, 6, 0}));
  EXPECT_EQ(out.column("Admission Date Month").numbers, (std::vector<double>{3, 3, 3}));
  EXPECT_EQ(out.column("Admission Date Year").numbers, (std::vector<double>{2021, 2021, 2021}));
  EXPECT_EQ(out.feature_names().size(), 3u);
}

TEST(Dates, SkippedWithNoticeWhenAbsent) {
  const auto ds = numeric_dataset({1, 2}, {3, 4});
  std::vector<std::string> notes;
  NoticeSink sink;
  collect(notes, sink);
  const auto out = engineer_date_features(ds, sink);
  EXPECT_TRUE(out == ds);
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_NE(notes[0].find("skipped"), std::string::npos);
}

TEST(Scale, MapsOntoUnitInterval) {
  WranglePlan plan;
  const auto out = scale_minmax(numeric_dataset({10, 20, 30}, {1, 2, 3}), plan, {});
  EXPECT_EQ(out.column("x").numbers, (std::vector<double>{0, 0.5, 1}));
}

TEST(Scale, ConstantColumnIsZeroWithNotice) {
  WranglePlan plan;
  std::vector<std::string> notes;
  NoticeSink sink;
  collect(notes, sink);
  const auto out = scale_minmax(numeric_dataset({7, 7, 7}, {1, 2, 3}), plan, sink);
  EXPECT_EQ(out.column("x").numbers, (std::vector<double>{0, 0, 0}));
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_NE(notes[0].find("'x'"), std::string::npos);
}

TEST(Scale, InverseRoundTripWithinTolerance) {
  Rng rng(77);
  std::vector<double> xs(1000), ys(1000);
  for (auto& v : xs) v = rng.uniform(-500, 500);
  for (auto& v : ys) v = rng.uniform(0, 140);
  const auto ds = numeric_dataset(xs, ys);
  WranglePlan plan;
  const auto back = inverse_scale(scale_minmax(ds, plan, {}), plan);
  double worst = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    worst = std::max(worst, std::abs(back.column("x").numbers[i] - xs[i]));
    worst = std::max(worst, std::abs(back.column("y").numbers[i] - ys[i]));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Scale, ReapplyingThroughInverseIsStable) {
  Rng rng(78);
  std::vector<double> xs(300), ys(300);
  for (auto& v : xs) v = rng.uniform(-3, 3);
  for (auto& v : ys) v = rng.uniform(0, 10);
  const auto ds = numeric_dataset(xs, ys);
  WranglePlan plan;
  const auto once = scale_minmax(ds, plan, {});
  const auto again = scale_minmax(inverse_scale(once, plan), std::as_const(plan));
  for (const auto& name : {"x", "y"})
    for (std::size_t i = 0; i < xs.size(); ++i)
      EXPECT_NEAR(again.column(name).numbers[i], once.column(name).numbers[i], 1e-12);
}

TEST(Scale, UnfittedPlanThrows) {
  const WranglePlan plan;
  EXPECT_THROW(scale_minmax(numeric_dataset({1}, {2}), plan), DataError);
  EXPECT_THROW(inverse_scale(numeric_dataset({1}, {2}), plan), DataError);
}

TEST(Scale, TensorRangesMatchDatasetScaling) {
  const auto x = Tensor::matrix({{1, 10}, {3, 10}, {2, 10}});
  const auto ranges = fit_ranges(x, {0, 1}, {"a", "b"});
  const auto s = apply_ranges(x, ranges);
  EXPECT_EQ(s(0, 0), 0.0);
  EXPECT_EQ(s(1, 0), 1.0);
  EXPECT_EQ(s(2, 0), 0.5);
  EXPECT_EQ(s(2, 1), 0.0);
  const auto y = invert_range(Tensor::vector({0, 0.5, 1}), ranges[0]);
  EXPECT_EQ(y[1], 2.0);
}

TEST(Pipeline, EveryFeatureNumericFiniteInUnitInterval) {
  SyntheticProfile p;
  p.missing_rate = 0.05;
  p.admission_date = true;
  const auto ds = generate_synthetic(600, 9, p);
  ASSERT_GT(ds.missing_count(), 0u);
  WranglePlan plan;
  const auto out = wrangle(ds, plan, {});
  EXPECT_EQ(out.missing_count(), 0u);
  for (const auto& c : out.columns()) {
    ASSERT_EQ(c.schema.kind, ColumnKind::numerical) << c.schema.name;
    for (const auto v : c.numbers) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_TRUE(out.find("Admission Date Weekday"));
}

TEST(Pipeline, PlanReplayIsDeterministicAndSerializable) {
  const auto ds = generate_synthetic(300, 4, SyntheticProfile{.missing_rate = 0.03});
  WranglePlan plan;
  const auto fitted = wrangle(ds, plan, {});
  const auto a = apply_plan(ds, plan);
  const auto b = apply_plan(ds, plan);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == fitted);
  const auto restored = WranglePlan::from_json(nlohmann::json::parse(plan.to_json().dump()));
  EXPECT_TRUE(restored == plan);
  EXPECT_THROW(WranglePlan::from_json(nlohmann::json::object()), DataError);
}

TEST(Features, DenseTableFromEncodedDataset) {
  const auto ds = numeric_dataset({1, 2, 3}, {4, 5, 6});
  const auto t = to_features(ds);
  EXPECT_EQ(t.names, std::vector<std::string>{"x"});
  EXPECT_EQ(t.x.shape(), (Shape{3, 1}));
  EXPECT_EQ(t.y[2], 6.0);
  const auto raw = generate_synthetic(10, 1);
  EXPECT_THROW(to_features(raw), DataError);
}

TEST(Synthetic, RejectsEmptyRequest) { EXPECT_THROW(generate_synthetic(0, 1), DataError); }

TEST(Synthetic, DeterministicAndPrefixStable) {
  const auto a = generate_synthetic(300, 17);
  const auto b = generate_synthetic(300, 17);
  EXPECT_TRUE(a == b);
  std::vector<std::size_t> head(120);
  std::iota(head.begin(), head.end(), 0);
  const auto c = generate_synthetic(120, 17);
  std::ostringstream x, y;
  write_records(x, a.select_rows(head));
  write_records(y, c);
  EXPECT_EQ(x.str(), y.str());
  EXPECT_FALSE(generate_synthetic(300, 18) == a);
}

TEST(Synthetic, LosIntegersWithMassAtZeroAndTail) {
  const auto ds = generate_synthetic(20000, 3);
  std::size_t zero = 0, tail = 0;
  for (const auto v : ds.column(kLengthOfStay).numbers) {
    ASSERT_EQ(v, std::floor(v));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 140.0);
    zero += v == 0;
    tail += v > 20;
  }
  EXPECT_GT(zero, 0u);
  EXPECT_GT(tail, 0u);
}

TEST(Synthetic, PublishedDistributionFacts) {
  const auto ds = generate_synthetic(100000, 42);
  const auto s = summarize_distribution(ds);
  EXPECT_GE(s.los_over_20_fraction, 0.03);
  EXPECT_LE(s.los_over_20_fraction, 0.05);
  EXPECT_GE(s.cost_los_correlation, 0.55);
  EXPECT_LE(s.cost_los_correlation, 0.70);

  const auto gender = category_counts(ds, "Gender");
  const double f = double(gender[0].second) / double(ds.rows());
  const double m = double(gender[1].second) / double(ds.rows());
  EXPECT_NEAR(f - m, 0.09, 0.02);

  const auto ms = category_counts(ds, "APR Medical Surgical Description");
  EXPECT_NEAR(double(ms[0].second) / double(ms[1].second), 3.0, 0.3);

  const auto age = category_counts(ds, "AgeGroup");
  EXPECT_NEAR(double(age[4].second) / double(age[1].second), 3.0, 0.3);
  EXPECT_NEAR(double(age[4].second) / double(age[0].second), 2.0, 0.2);

  const auto adm = category_counts(ds, "Type Of Admission");
  for (const auto& [label, count] : adm)
    if (label != "Emergency") {
      EXPECT_LT(count, adm[1].second) << label;
    }

  // Severity code is the strongest correlate after Total Costs.
  auto corr = target_correlations(ds);
  std::sort(corr.begin(), corr.end(),
            [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
  EXPECT_EQ(corr[0].first, kTotalCosts);
  EXPECT_EQ(corr[1].first, kSeverityCode);
}

TEST(Synthetic, ZipCodeCarriesNoSignal) {
  const auto ds = generate_synthetic(50000, 8);
  for (const auto& [name, r] : target_correlations(ds))
    if (name == kZipCode) {
      EXPECT_LT(std::abs(r), 0.02);
    }
}

TEST(Synthetic, HistogramCountsEveryRow) {
  const auto ds = generate_synthetic(2000, 2);
  const auto h = los_histogram(ds);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::size_t{0}), ds.rows());
}
