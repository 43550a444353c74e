// SPDX-License-Identifier: Apache-2.0
#include "losnet/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace losnet::eval {

namespace {

void check_sample(std::span<const double> v, std::size_t min_size, const char* op) {
  if (v.size() < min_size) {
    throw std::invalid_argument(std::string(op) + ": need at least " +
                                std::to_string(min_size) + " values, got " +
                                std::to_string(v.size()));
  }
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(op) + ": non-finite value");
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

/// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 1000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) return h;
  }
  throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
}

/// I_x(a, b) with y = 1 - x supplied separately so callers can avoid the
/// cancellation in forming it.
double ibeta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, y) / b;
}

TTestResult from_statistic(double diff, double se2, double df) {
  TTestResult r;
  r.df = df;
  if (diff == 0.0) return r;
  if (se2 == 0.0) {
    r.t = diff > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  r.t = diff / std::sqrt(se2);
  r.p = student_t_two_sided(r.t, df);
  return r;
}

}  // namespace

Spread describe(std::span<const double> values) {
  check_sample(values, 1, "describe");
  Spread s;
  s.n = values.size();
  s.mean = mean_of(values);
  s.max = *std::max_element(values.begin(), values.end());
  s.min = *std::min_element(values.begin(), values.end());
  // Rounding in the mean can leave it a hair outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  s.std = std::sqrt(variance_of(values, s.mean));
  return s;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("regularized_incomplete_beta: need a, b > 0 and x in [0, 1]");
  }
  return ibeta(a, b, x, 1.0 - x);
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0) || std::isnan(t)) {
    throw std::invalid_argument("student_t_two_sided: need df > 0 and a numeric t");
  }
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double t2 = t * t;
  return std::clamp(ibeta(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2)), 0.0, 1.0);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  check_sample(a, 2, "welch_t_test");
  check_sample(b, 2, "welch_t_test");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double qa = variance_of(a, ma) / na, qb = variance_of(b, mb) / nb;
  const double se2 = qa + qb;
  const double df = se2 > 0.0 ? se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
                              : na + nb - 2.0;
  return from_statistic(ma - mb, se2, df);
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: samples differ in length");
  check_sample(a, 2, "paired_t_test");
  check_sample(b, 2, "paired_t_test");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double md = mean_of(d);
  return from_statistic(md, variance_of(d, md) / n, n - 1.0);
}

}  // namespace losnet::eval
