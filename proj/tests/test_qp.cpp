/*
 * Copyright 2026 The coalmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "coalmpc/qp.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace coalmpc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoxQp scalar(double h, double g, double lo, double hi) {
  BoxQp qp;
  qp.H = Eigen::MatrixXd::Constant(1, 1, h);
  qp.g = Eigen::VectorXd::Constant(1, g);
  qp.lower = Eigen::VectorXd::Constant(1, lo);
  qp.upper = Eigen::VectorXd::Constant(1, hi);
  return qp;
}

BoxQp random_qp(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution rare(0.2);
  BoxQp qp;
  qp.H = oracle::random_psd(rng, n, 0.05 + 0.5 * (u(rng) + 1.0));
  qp.g = 3.0 * oracle::random_matrix(rng, n, 1);
  qp.lower.resize(n);
  qp.upper.resize(n);
  for (int i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    qp.lower(i) = rare(rng) ? -kInf : std::min(a, b);
    qp.upper(i) = rare(rng) ? kInf : std::max(a, b);
  }
  return qp;
}

}  // namespace

// Objectives below carry the constant dropped by the 1/2 x'Hx + g'x form.

TEST_CASE("unconstrained scalar") {
  // (u - 1)^2 = u^2 - 2u + 1
  const auto r = solve_box_qp(scalar(2.0, -2.0, -kInf, kInf));
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.objective + 1.0 == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("interior optimum with an inactive bound") {
  // u^2 + (u - 1)^2 = 2u^2 - 2u + 1, u >= 0
  const auto r = solve_box_qp(scalar(4.0, -2.0, 0.0, kInf));
  CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.objective + 1.0 == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("clamped optimum") {
  // (u + 2)^2 = u^2 + 4u + 4, u >= 0
  const auto r = solve_box_qp(scalar(2.0, 4.0, 0.0, kInf));
  CHECK(r.x(0) == 0.0);
  CHECK(r.objective + 4.0 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.kkt_residual == 0.0);
}

TEST_CASE("invalid problems are rejected") {
  CHECK_THROWS_AS(solve_box_qp(scalar(2.0, 0.0, 1.0, 0.0)), std::invalid_argument);
  BoxQp bad = scalar(2.0, 0.0, 0.0, 1.0);
  bad.g = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(solve_box_qp(bad), std::invalid_argument);
}

TEST_CASE("iteration limit reports the best iterate") {
  std::mt19937_64 rng(23);
  const auto qp = random_qp(rng, 12);
  QpOptions opt;
  opt.tolerance = 0.0;
  opt.max_iterations = 1;
  try {
    (void)solve_box_qp(qp, opt);
    // An exact first guess is possible but vanishingly unlikely here.
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.best_iterate().size() == 12);
  }
}

TEST_CASE("KKT residual is zero at the optimum and positive elsewhere") {
  const auto qp = scalar(2.0, -2.0, -kInf, kInf);
  CHECK(kkt_residual(qp, Eigen::VectorXd::Constant(1, 1.0)) == 0.0);
  CHECK(kkt_residual(qp, Eigen::VectorXd::Constant(1, 0.0)) > 0.0);
}

TEST_CASE("random box QPs agree with a projected-gradient reference") {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> dim(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto qp = random_qp(rng, dim(rng));
    const auto r = solve_box_qp(qp);
    const auto ref = oracle::projected_gradient(qp);
    const double f_ref = qp_objective(qp, ref);
    REQUIRE(kkt_residual(qp, ref) <= 1e-9);  // the reference itself converged
    CHECK(r.kkt_residual <= 1e-8);
    CHECK(std::abs(r.objective - f_ref) <= 1e-6 * std::abs(f_ref) + 1e-12);
    CHECK(((r.x.array() >= qp.lower.array()) && (r.x.array() <= qp.upper.array())).all());
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto qp = random_qp(rng, 10);
    const auto a = solve_box_qp(qp);
    const auto b = solve_box_qp(qp);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
  }
}
