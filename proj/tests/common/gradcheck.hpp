// SPDX-License-Identifier: Apache-2.0
// Central finite-difference check of Seq2SeqModel::backward.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "seqloss/network.hpp"
#include "seqloss/random.hpp"

namespace seqloss::testing {

/// sum_i weights[i] * -log p_i[target_i] for one teacher-forced pass.
inline double weighted_nll(const Seq2SeqModel &model, std::span<const TokenId> code, std::span<const TokenId> summary,
                           std::span<const double> weights) {
  const auto pass = model.forward_teacher_forced(code, summary);
  double total = 0.0;
  for (std::size_t i = 0; i < pass.positions(); ++i) {
    total += weights[i] * -std::log(pass.probabilities(pass.targets[i], static_cast<Eigen::Index>(i)));
  }
  return total;
}

struct GradSample {
  std::size_t tensor = 0;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

/// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double a, double n, double floor = 1e-7) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Compares analytic gradients (already in each tensor's grad) with central
/// differences at `count` parameter entries drawn with `rng`.
inline std::vector<GradSample> check_gradients(Seq2SeqModel &model, std::span<const TokenId> code,
                                               std::span<const TokenId> summary, std::span<const double> weights,
                                               std::size_t count, Rng &rng, double step = 1e-4) {
  auto params = model.parameters();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto &t : params) {
    offsets.push_back(total);
    total += static_cast<std::size_t>(t.value.size());
  }
  std::vector<GradSample> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t flat = rng.below(total);
    const std::size_t ti = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) -
                                                    offsets.begin()) - 1;
    const auto idx = static_cast<Eigen::Index>(flat - offsets[ti]);
    double &x = params[ti].value.data()[idx];
    const double saved = x;
    x = saved + step;
    const double up = weighted_nll(model, code, summary, weights);
    x = saved - step;
    const double down = weighted_nll(model, code, summary, weights);
    x = saved;
    GradSample s;
    s.tensor = ti;
    s.index = idx;
    s.analytic = params[ti].grad.data()[idx];
    s.numeric = (up - down) / (2 * step);
    s.relative_error = relative_error(s.analytic, s.numeric);
    out.push_back(s);
  }
  return out;
}

}  // namespace seqloss::testing
