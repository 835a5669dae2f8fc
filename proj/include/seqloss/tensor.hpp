// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <Eigen/Core>

namespace seqloss {

/// A named parameter with its accumulated gradient. Vectors are n x 1.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor() = default;
  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Eigen::MatrixXd::Zero(rows, cols)), grad(Eigen::MatrixXd::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
  bool finite() const { return value.allFinite() && grad.allFinite(); }
  void zero_grad() { grad.setZero(); }
};

}  // namespace seqloss
