// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>

#include "seqloss/adam.hpp"
#include "seqloss/error.hpp"

using namespace seqloss;

namespace {

std::vector<Tensor> scalar(double value) {
  std::vector<Tensor> ts(1);
  ts[0].name = "w";
  ts[0].value = Eigen::MatrixXd::Constant(1, 1, value);
  ts[0].grad = Eigen::MatrixXd::Zero(1, 1);
  return ts;
}

}  // namespace

TEST_CASE("one step with g = 1 matches the oracle") {
  auto ts = scalar(0.0);
  AdamState st(ts, AdamConfig{});
  ts[0].grad(0, 0) = 1.0;
  adam_step(ts, st);
  // tests/oracles/scalar_oracle.py
  CHECK(std::abs(ts[0].value(0, 0) - (-0.00009999999900000001)) < 1e-18);
  CHECK(st.step_count() == 1);
}

TEST_CASE("two steps match the oracle") {
  auto ts = scalar(0.0);
  AdamState st(ts, AdamConfig{});
  ts[0].grad(0, 0) = 1.0;
  st.step(ts);
  const double after_one = ts[0].value(0, 0);
  ts[0].grad(0, 0) = -0.5;
  st.step(ts);
  CHECK(std::abs((ts[0].value(0, 0) - after_one) - (-0.000026633703629097023454)) < 1e-17);
}

TEST_CASE("zero gradient is a fixed point") {
  auto ts = scalar(0.25);
  AdamState st(ts, AdamConfig{});
  st.step(ts);
  st.step(ts);
  CHECK(ts[0].value(0, 0) == 0.25);
  CHECK(st.step_count() == 2);
}

TEST_CASE("identical inputs give identical updates") {
  auto a = scalar(1.0), b = scalar(1.0);
  AdamState sa(a, AdamConfig{}), sb(b, AdamConfig{});
  for (double g : {0.3, -1.2, 4.0}) {
    a[0].grad(0, 0) = b[0].grad(0, 0) = g;
    sa.step(a);
    sb.step(b);
  }
  CHECK(a[0].value(0, 0) == b[0].value(0, 0));
}

TEST_CASE("non-finite gradient aborts before any update") {
  std::vector<Tensor> ts(2);
  for (auto &t : ts) {
    t.value = Eigen::MatrixXd::Ones(2, 2);
    t.grad = Eigen::MatrixXd::Ones(2, 2);
  }
  ts[1].grad(1, 1) = std::numeric_limits<double>::infinity();
  AdamState st(ts, AdamConfig{});
  CHECK_THROWS_AS(st.step(ts), DivergenceError);
  CHECK(ts[0].value == Eigen::MatrixXd::Ones(2, 2));
  CHECK(st.step_count() == 0);
}
