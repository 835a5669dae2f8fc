// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

namespace seqloss {

struct PairedTestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  double mean_difference = 0.0;  // mean of a - b
  bool degenerate_variance = false;
};

/// Classical paired t-test on a - b with a two-sided p-value from Student's t
/// with n - 1 degrees of freedom. When the differences have zero variance the
/// result is flagged degenerate: identical inputs give t = 0, p = 1; a constant
/// nonzero shift gives t = +/-inf, p = 0. Requires equal lengths and n >= 2.
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// I_x(a, b) via the continued fraction expansion (modified Lentz).
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

}  // namespace seqloss
