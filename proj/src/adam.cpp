// SPDX-License-Identifier: Apache-2.0
#include "seqloss/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "seqloss/error.hpp"

namespace seqloss {

AdamState::AdamState(std::span<const Tensor> params, const AdamConfig &config) : config_(config) {
  if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 ||
      config.beta2 < 0.0 || config.beta2 >= 1.0) {
    throw ConfigError("invalid Adam hyperparameters");
  }
  first_.reserve(params.size());
  second_.reserve(params.size());
  for (const auto &p : params) {
    first_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    second_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamState::step(std::span<Tensor> params) {
  if (params.size() != first_.size()) throw std::logic_error("Adam state does not match the parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].grad.rows() != first_[i].rows() || params[i].grad.cols() != first_[i].cols()) {
      throw std::logic_error("Adam moment shape mismatch for " + params[i].name);
    }
    if (!params[i].grad.allFinite()) throw DivergenceError("non-finite gradient in " + params[i].name);
  }

  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correct1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correct2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &m = first_[i];
    auto &v = second_[i];
    const auto &g = params[i].grad;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    params[i].value.array() -=
        config_.learning_rate * (m.array() / correct1) / ((v.array() / correct2).sqrt() + config_.epsilon);
    if (!params[i].value.allFinite()) throw DivergenceError("non-finite parameter after update: " + params[i].name);
  }
}

}  // namespace seqloss
