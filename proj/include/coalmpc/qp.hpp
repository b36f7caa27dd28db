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

#ifndef COALMPC_QP_HPP
#define COALMPC_QP_HPP

#include <Eigen/Dense>

#include <stdexcept>

namespace coalmpc {

/// min 1/2 x'Hx + g'x  s.t.  lower <= x <= upper  (bounds may be infinite).
struct BoxQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index size() const { return g.size(); }
};

struct QpOptions {
  /// Bound on the scaled KKT residual, see kkt_residual().
  double tolerance = 1e-8;
  /// 0 selects 10 * n^2 (at least 100).
  long max_iterations = 0;
};

struct QpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  long iterations = 0;
  double kkt_residual = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Eigen::VectorXd best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const Eigen::VectorXd& best_iterate() const { return best_; }

 private:
  Eigen::VectorXd best_;
};

double qp_objective(const BoxQp& qp, const Eigen::VectorXd& x);

/// ||x - P(x - (Hx + g))||_inf / max(1, ||g||_inf), P the projection on the
/// box. Zero exactly at a KKT point of the box QP.
double kkt_residual(const BoxQp& qp, const Eigen::VectorXd& x);

/// Strictly convex box QP solver: primal-dual active set iterations, with a
/// projected Newton fallback when the active set cycles. Deterministic: the
/// same input gives the same output bit for bit.
///
/// Throws std::invalid_argument on inconsistent dimensions or lower > upper,
/// SolverError if the iteration limit is hit before the tolerance is met.
QpResult solve_box_qp(const BoxQp& qp, const QpOptions& options = {});

}  // namespace coalmpc

#endif  // COALMPC_QP_HPP
