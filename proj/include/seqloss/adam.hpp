// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "seqloss/tensor.hpp"

namespace seqloss {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for a fixed list of parameters.
class AdamState {
 public:
  AdamState(std::span<const Tensor> params, const AdamConfig &config);

  const AdamConfig &config() const { return config_; }
  std::uint64_t step_count() const { return steps_; }

  /// One bias-corrected Adam update from each tensor's grad. Throws
  /// DivergenceError (before touching anything) if a gradient is non-finite,
  /// and after the update if a parameter became non-finite.
  void step(std::span<Tensor> params);

 private:
  AdamConfig config_;
  std::vector<Eigen::MatrixXd> first_;
  std::vector<Eigen::MatrixXd> second_;
  std::uint64_t steps_ = 0;
};

inline void adam_step(std::span<Tensor> params, AdamState &state) { state.step(params); }

}  // namespace seqloss
