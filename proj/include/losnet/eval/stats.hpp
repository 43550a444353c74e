// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

namespace losnet::eval {

/// Mean, extremes and sample (n-1) standard deviation; a single value has
/// std 0.
struct Spread {
  std::size_t n = 0;
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double std = 0.0;
  friend bool operator==(const Spread&, const Spread&) = default;
};

/// Throws std::invalid_argument on an empty or non-finite sample.
Spread describe(std::span<const double> values);

/// I_x(a, b) by the continued fraction, evaluated on whichever of x and
/// 1-x converges fastest. Requires a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  /// Both samples have zero spread and different means; t is infinite and
  /// p is reported as 0.
  bool degenerate = false;
  friend bool operator==(const TTestResult&, const TTestResult&) = default;
};

/// Unequal-variance two-sample test with Satterthwaite degrees of freedom.
/// Each sample needs at least two finite values.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// One-sample test on the differences a[i] - b[i], df = n - 1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace losnet::eval
