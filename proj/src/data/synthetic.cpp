// SPDX-License-Identifier: Apache-2.0
#include "losnet/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "losnet/error.hpp"
#include "losnet/rng.hpp"

namespace losnet::data {

namespace {

constexpr std::array<const char*, 8> kAreas{
    "Capital/Adirond", "Central NY",    "Finger Lakes",  "Hudson Valley",
    "Long Island",     "New York City", "Southern Tier", "Western NY"};
constexpr std::array<double, 8> kAreaWeight{.07, .07, .06, .12, .15, .42, .03, .08};
constexpr std::array<double, 8> kAreaRate{0.0, -.15, -.1, .2, .3, .5, -.25, -.1};

const std::array<std::vector<const char*>, 8>& area_counties() {
  static const std::array<std::vector<const char*>, 8> c{{
      {"Albany", "Clinton", "Columbia", "Essex", "Franklin", "Fulton", "Montgomery",
       "Rensselaer", "Saratoga", "Schenectady", "Warren"},
      {"Cayuga", "Cortland", "Herkimer", "Jefferson", "Lewis", "Madison", "Oneida",
       "Onondaga", "Oswego", "St Lawrence"},
      {"Livingston", "Monroe", "Ontario", "Seneca", "Wayne", "Yates"},
      {"Dutchess", "Orange", "Putnam", "Rockland", "Sullivan", "Ulster", "Westchester"},
      {"Nassau", "Suffolk"},
      {"Bronx", "Kings", "Manhattan", "Queens", "Richmond"},
      {"Allegany", "Broome", "Chemung", "Chenango", "Delaware", "Otsego", "Schoharie",
       "Steuben", "Tompkins"},
      {"Cattaraugus", "Chautauqua", "Erie", "Genesee", "Niagara", "Orleans", "Wyoming"},
  }};
  return c;
}

constexpr std::array<const char*, 5> kAges{"0 to 17", "18 to 29", "30 to 49", "50 to 69",
                                           "70 or Older"};
constexpr std::array<double, 5> kAgeWeight{.15, .10, .17, .28, .30};
constexpr std::array<const char*, 3> kGenders{"F", "M", "U"};
constexpr std::array<double, 3> kGenderWeight{.54, .45, .01};
constexpr std::array<const char*, 4> kRaces{"Black/African American", "Multi-racial",
                                            "Other Race", "White"};
constexpr std::array<double, 4> kRaceWeight{.17, .03, .25, .55};
constexpr std::array<const char*, 4> kEthnicities{"Multi-ethnic", "Not Span/Hispanic",
                                                  "Spanish/Hispanic", "Unknown"};
constexpr std::array<double, 4> kEthnicityWeight{.02, .75, .13, .10};

enum Admission { elective, emergency, newborn, not_available, trauma, urgent };
constexpr std::array<const char*, 6> kAdmissions{"Elective", "Emergency",     "Newborn",
                                                 "Not Available", "Trauma", "Urgent"};
constexpr std::array<double, 6> kChildAdmission{.08, .25, .60, .0, .0, .07};
constexpr std::array<double, 6> kAdultAdmission{.17, .66, .0, .01, .02, .14};

constexpr std::array<const char*, 4> kLevels{"Minor", "Moderate", "Major", "Extreme"};
// Latent cut points for severity given 0.35 * age + 0.9 * logistic noise.
constexpr std::array<double, 3> kSeverityCuts{0.06, 1.6, 3.05};

constexpr std::array<const char*, 9> kPayers{
    "Blue Cross/Blue Shield", "Department of Corrections", "Federal/State/Local/VA",
    "Managed Care, Unspecified", "Medicaid", "Medicare", "Miscellaneous/Other",
    "Private Health Insurance", "Self-Pay"};
constexpr std::array<double, 9> kPayerRate{.55, -.5, .0, .25, -.35, .15, .1, .7, -.55};
constexpr std::array<double, 9> kChildPayer{.12, .0, .01, .03, .52, .0, .01, .29, .02};
constexpr std::array<double, 9> kAdultPayer{.12, .005, .02, .04, .33, .12, .02, .29, .055};
constexpr std::array<double, 9> kSeniorPayer{.05, .002, .01, .02, .07, .75, .01, .08, .008};

struct Disposition {
  const char* label;
  double weight;
  bool long_stay;
};
constexpr std::array<Disposition, 19> kDispositions{{
    {"Another Type Not Listed", .006, false},
    {"Cancer Center or Children's Hospital", .003, false},
    {"Court/Law Enforcement", .004, false},
    {"Critical Access Hospital", .001, false},
    {"Expired", .02, false},
    {"Facility w/ Custodial/Supportive Care", .004, true},
    {"Federal Health Care Facility", .002, false},
    {"Home or Self Care", .62, false},
    {"Home w/ Home Health Services", .14, false},
    {"Hosp Basd Medicare Approved Swing Bed", .001, true},
    {"Hospice - Home", .008, false},
    {"Hospice - Medical Facility", .007, true},
    {"Inpatient Rehabilitation Facility", .025, true},
    {"Left Against Medical Advice", .02, false},
    {"Medicaid Cert Nursing Facility", .002, true},
    {"Medicare Cert Long Term Care Hospital", .003, true},
    {"Psychiatric Hospital or Unit of Hosp", .01, true},
    {"Short-term Hospital", .02, false},
    {"Skilled Nursing Home", .09, true},
}};
constexpr std::size_t kHomeSelfCare = 7;
constexpr std::size_t kExpired = 4;

constexpr std::size_t kMdcs = 24;
constexpr std::size_t kNewbornMdc = 14;  // the 15th category

/// Block sizes that partition `total` codes over the 24 categories.
std::size_t block_size(std::size_t total, std::size_t m) {
  const auto base = total / kMdcs;
  return base + (m < total % kMdcs ? 1 : 0);
}
std::size_t block_start(std::size_t total, std::size_t m) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < m; ++i) s += block_size(total, i);
  return s;
}

/// Fixed category effects; the same for every seed.
struct World {
  std::array<double, kMdcs> mdc_weight{};
  std::array<double, kMdcs> mdc_effect{};
  std::vector<double> drg_effect;
  std::vector<double> drg_fee;
  std::array<double, 57> county_rate{};

  World() : drg_effect(326), drg_fee(326) {
    Rng rng(0x5EED'CA7E'6011'0001ULL);
    for (std::size_t m = 0; m < kMdcs; ++m) {
      mdc_weight[m] = 1.0 / static_cast<double>(2 + (m * 7) % kMdcs);
      mdc_effect[m] = 0.2 * rng.normal();
    }
    mdc_weight[kNewbornMdc] = 0.0;
    for (auto& e : drg_effect) e = 0.1 * rng.normal();
    for (auto& f : drg_fee) f = 2500.0 * std::exp(0.9 * rng.normal());
    for (auto& c : county_rate) c = 0.5 * rng.normal();
  }
};

const World& world() {
  static const World w;
  return w;
}

template <std::size_t N>
std::size_t pick(Rng& rng, const std::array<double, N>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < N; ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return N - 1;
}

/// Zipf-like pick of one of n codes: code i has weight 1/(i+1).
std::size_t pick_zipf(Rng& rng, std::size_t n) {
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += 1.0 / double(i + 1);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < n; ++i) {
    if (u < 1.0 / double(i + 1)) return i;
    u -= 1.0 / double(i + 1);
  }
  return n - 1;
}

/// Marsaglia-Tsang gamma(shape, 1) draw, shape >= 1.
double gamma_draw(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::string two_digits(std::size_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02zu", v);
  return buf;
}

std::string three_digits(std::size_t v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%03zu", v);
  return buf;
}

std::size_t county_index(std::size_t area, std::size_t county) {
  std::size_t i = county;
  for (std::size_t a = 0; a < area; ++a) i += area_counties()[a].size();
  return i;
}

struct Row {
  std::size_t area, county, age, gender, race, ethnicity, admission, severity, payer,
      disposition, mdc, drg, ccsr, risk;
  bool surgical, emergency_dept;
  double zip, cost, los;
  std::string date;
};

Row draw_row(Rng& rng, const SyntheticProfile& p) {
  const auto& w = world();
  Row r{};
  r.area = pick(rng, kAreaWeight);
  const auto& counties = area_counties()[r.area];
  r.county = static_cast<std::size_t>(rng.index(counties.size()));
  r.age = pick(rng, kAgeWeight);
  r.gender = pick(rng, kGenderWeight);
  r.race = pick(rng, kRaceWeight);
  r.ethnicity = pick(rng, kEthnicityWeight);
  r.zip = static_cast<double>(100 + rng.index(50));
  r.admission = pick(rng, r.age == 0 ? kChildAdmission : kAdultAdmission);
  const bool is_newborn = r.admission == newborn;

  const double u = std::clamp(rng.uniform(), 1e-12, 1 - 1e-12);
  const double latent = 0.35 * double(r.age) + 0.9 * std::log(u / (1 - u));
  r.severity = is_newborn ? (latent > kSeverityCuts[1] ? 1 : 0)
                          : static_cast<std::size_t>(std::upper_bound(kSeverityCuts.begin(),
                                                                      kSeverityCuts.end(),
                                                                      latent) -
                                                     kSeverityCuts.begin());
  {
    const double v = rng.uniform();
    long risk = long(r.severity) + (v < 0.2 ? -1 : v < 0.8 ? 0 : 1);
    if (r.age == 4 && rng.uniform() < 0.15) ++risk;
    r.risk = static_cast<std::size_t>(std::clamp(risk, 0L, 3L));
  }

  r.payer = pick(rng, r.age == 0 ? kChildPayer : r.age == 4 ? kSeniorPayer : kAdultPayer);

  std::array<double, 19> dw{};
  for (std::size_t i = 0; i < dw.size(); ++i) {
    dw[i] = kDispositions[i].weight;
    if (kDispositions[i].long_stay)
      dw[i] *= 0.4 + 0.9 * double(r.severity) + (r.age == 4 ? 1.5 : 0.0);
  }
  dw[kExpired] *= 0.2 + 1.5 * double(r.risk);
  if (is_newborn) {
    dw.fill(0.0);
    dw[kHomeSelfCare] = 1.0;
  }
  r.disposition = pick(rng, dw);
  const bool long_stay = kDispositions[r.disposition].long_stay;

  r.surgical = !is_newborn && rng.uniform() < (r.age == 0 ? 0.12 : 0.28);
  if (is_newborn) {
    r.mdc = kNewbornMdc;
  } else {
    r.mdc = pick(rng, w.mdc_weight);
  }
  {
    const auto size = block_size(326, r.mdc);
    const auto surgical_codes = std::max<std::size_t>(1, size * 3 / 10);
    const auto local = r.surgical ? pick_zipf(rng, surgical_codes)
                                  : surgical_codes + pick_zipf(rng, size - surgical_codes);
    r.drg = block_start(326, r.mdc) + local;
  }
  r.ccsr = block_start(471, r.mdc) + pick_zipf(rng, block_size(471, r.mdc));

  const bool emergency_like =
      r.admission == emergency || r.admission == trauma || r.admission == urgent;
  r.emergency_dept = emergency_like ? rng.uniform() < 0.92 : rng.uniform() < 0.04;

  const auto day = static_cast<int>(rng.index(365));
  const auto sd = std::chrono::sys_days{std::chrono::year{2021} / 1 / 1} + std::chrono::days{day};
  const std::chrono::year_month_day ymd{sd};
  const bool weekend = std::chrono::weekday{sd}.iso_encoding() >= 6;
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    r.date = buf;
  }

  const bool interaction = r.surgical && r.age >= 3 && r.severity >= 2;
  const double eta = p.los_intercept + 0.30 * double(r.severity) + 0.04 * double(r.age) +
                     0.5 * (long_stay ? 1 : 0) + 0.15 * (r.surgical ? 1 : 0) +
                     0.4 * (interaction ? 1 : 0) - 0.7 * (is_newborn ? 1 : 0) +
                     0.08 * (weekend ? 1 : 0) + w.mdc_effect[r.mdc] + w.drg_effect[r.drg];
  const double noise = gamma_draw(rng, p.los_shape) / p.los_shape;
  r.los = std::clamp(std::floor(std::exp(eta) * noise), 0.0, kMaxLengthOfStay);

  const double rate = p.cost_daily_rate *
                      std::exp(1.3 * (r.surgical ? 1 : 0) + kPayerRate[r.payer] +
                               kAreaRate[r.area] + w.county_rate[county_index(r.area, r.county)] +
                               0.2 * double(r.severity) - 0.5 * (is_newborn ? 1 : 0));
  const double cost = (r.los + 0.5) * rate * std::exp(p.cost_noise * rng.normal()) + w.drg_fee[r.drg] +
                      4000.0 * (r.surgical ? 1 : 0);
  r.cost = std::round(std::clamp(cost, 100.0, 2e5) * 100.0) / 100.0;
  return r;
}

}  // namespace

Dataset generate_synthetic(std::size_t n, std::uint64_t seed, const SyntheticProfile& p) {
  if (n == 0) throw DataError("generate_synthetic: n must be at least 1");
  if (!(p.los_shape >= 1.0) || !(p.cost_daily_rate > 0) || !(p.cost_noise >= 0) ||
      !(p.missing_rate >= 0 && p.missing_rate < 1))
    throw DataError("generate_synthetic: invalid profile");

  const auto& schema = admissions_schema();
  std::vector<Column> cols;
  for (const auto& s : schema) {
    if (s.kind == ColumnKind::date && !p.admission_date) continue;
    Column c;
    c.schema = s;
    c.missing.assign(n, 0);
    if (s.kind == ColumnKind::numerical)
      c.numbers.assign(n, 0.0);
    else
      c.labels.assign(n, std::string());
    cols.push_back(std::move(c));
  }
  const auto index_of = [&](std::string_view name) {
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (cols[c].schema.name == name) return c;
    throw DataError("schema lacks column '" + std::string(name) + "'");
  };
  const std::size_t target = index_of(kLengthOfStay);
  const std::size_t zip = index_of(kZipCode);
  const std::size_t cost = index_of(kTotalCosts);

  const Rng base(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.split(i);
    const Row r = draw_row(rng, p);
    const auto drg_code = three_digits(r.drg + 1);
    const auto ccsr_code = "D" + two_digits(r.mdc + 1) + "-" +
                           two_digits(r.ccsr - block_start(471, r.mdc) + 1);
    const auto mdc_code = std::to_string(r.mdc + 1);
    std::string labels[] = {
        kAreas[r.area],
        area_counties()[r.area][r.county],
        kAges[r.age],
        "",
        kGenders[r.gender],
        kRaces[r.race],
        kEthnicities[r.ethnicity],
        kAdmissions[r.admission],
        std::to_string(r.severity + 1),
        kLevels[r.severity],
        kPayers[r.payer],
        "",
        "",
        kDispositions[r.disposition].label,
        ccsr_code,
        "Diagnosis group " + ccsr_code,
        drg_code,
        "Refined DRG " + drg_code,
        mdc_code,
        "Major diagnostic category " + two_digits(r.mdc + 1),
        kLevels[r.risk],
        r.surgical ? "Surgical" : "Medical",
        r.emergency_dept ? "Y" : "N",
        r.date,
    };
    for (std::size_t c = 0; c < cols.size(); ++c) {
      auto& col = cols[c];
      if (col.schema.kind == ColumnKind::numerical) {
        col.numbers[i] = c == zip ? r.zip : c == cost ? r.cost : r.los;
      } else {
        col.labels[i] = labels[c];
      }
      if (c != target && col.schema.nullable && col.schema.kind != ColumnKind::date &&
          p.missing_rate > 0 && rng.uniform() < p.missing_rate) {
        col.missing[i] = 1;
        if (col.schema.kind == ColumnKind::numerical)
          col.numbers[i] = 0.0;
        else
          col.labels[i].clear();
      }
    }
  }
  return Dataset(std::move(cols), std::string(kLengthOfStay));
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

DistributionSummary summarize_distribution(const Dataset& ds) {
  const auto& los = ds.column(kLengthOfStay);
  const auto& cost = ds.column(kTotalCosts);
  DistributionSummary s;
  s.rows = ds.rows();
  std::vector<double> a, b;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const double v = los.numbers[r];
    s.los_mean += v;
    s.los_max = std::max(s.los_max, v);
    s.los_zero_fraction += v == 0 ? 1 : 0;
    s.los_over_20_fraction += v > 20 ? 1 : 0;
    if (!cost.is_missing(r)) {
      a.push_back(cost.numbers[r]);
      b.push_back(v);
    }
  }
  const auto n = static_cast<double>(ds.rows());
  s.los_mean /= n;
  s.los_zero_fraction /= n;
  s.los_over_20_fraction /= n;
  s.cost_los_correlation = pearson(a, b);
  return s;
}

std::vector<std::pair<std::string, double>> target_correlations(const Dataset& ds) {
  const auto& y = ds.column(ds.target_index());
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    if (c == ds.target_index()) continue;
    const auto& col = ds.column(c);
    if (col.schema.kind == ColumnKind::date) continue;
    std::map<std::string_view, double> code;
    for (std::size_t i = 0; i < col.schema.categories.size(); ++i)
      code.emplace(col.schema.categories[i], double(i));
    std::vector<double> a, b;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      if (col.is_missing(r)) continue;
      a.push_back(col.schema.kind == ColumnKind::numerical ? col.numbers[r]
                                                           : code.at(col.labels[r]));
      b.push_back(y.numbers[r]);
    }
    out.emplace_back(col.schema.name, pearson(a, b));
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> category_counts(const Dataset& ds,
                                                                 std::string_view column) {
  const auto& c = ds.column(column);
  if (!c.schema.is_labelled() || c.schema.kind == ColumnKind::date)
    throw DataError("column '" + c.schema.name + "' is not categorical");
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const auto& l : c.schema.categories) out.emplace_back(l, 0);
  for (std::size_t r = 0; r < c.size(); ++r)
    if (!c.is_missing(r)) ++out[c.code_of(c.labels[r])].second;
  return out;
}

std::vector<std::size_t> los_histogram(const Dataset& ds) {
  const auto& y = ds.column(ds.target_index());
  double top = 0;
  for (const auto v : y.numbers) top = std::max(top, v);
  std::vector<std::size_t> h(static_cast<std::size_t>(std::floor(top)) + 1, 0);
  for (const auto v : y.numbers)
    if (v >= 0) ++h[static_cast<std::size_t>(std::floor(v))];
  return h;
}

}  // namespace losnet::data
