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

#include "coalmpc/mpc.hpp"

#include <algorithm>

namespace coalmpc {

namespace {

void check_problem(const HorizonProblem& p) {
  const auto nx = p.A.rows();
  const auto nu = p.B.cols();
  if (p.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (p.A.cols() != nx || p.B.rows() != nx || p.Q.rows() != nx || p.Q.cols() != nx ||
      p.R.rows() != nu || p.R.cols() != nu || p.x0.size() != nx || p.x_ref.size() != nx ||
      p.u_ref.size() != nu || p.u_min.size() != nu || p.u_max.size() != nu)
    throw DimensionError("horizon problem dimension mismatch");
}

void check_weights(const HorizonProblem& p) {
  const auto sym_tol = [](const Eigen::MatrixXd& m) {
    return 1e-12 * std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  };
  if (p.Q.size() > 0) {
    if ((p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > sym_tol(p.Q))
      throw std::invalid_argument("state weight is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -sym_tol(p.Q))
      throw std::invalid_argument("state weight is not positive semidefinite");
  }
  if (p.R.size() > 0) {
    if ((p.R - p.R.transpose()).cwiseAbs().maxCoeff() > sym_tol(p.R))
      throw std::invalid_argument("input weight is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(p.R);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("input weight is not positive definite");
  }
}

}  // namespace

CondensedQp build_qp(const HorizonProblem& p) {
  check_problem(p);
  check_weights(p);
  const auto nx = p.A.rows();
  const auto nu = p.B.cols();
  const auto n = static_cast<Eigen::Index>(p.horizon);

  // Gamma: predicted states x(1..N) as a linear map of U.
  // Block (t, s) = A^(t-s) B for s <= t (0-based rows t <-> x(t+1)).
  std::vector<Eigen::MatrixXd> powers_b(static_cast<std::size_t>(n));
  powers_b[0] = p.B;
  for (Eigen::Index k = 1; k < n; ++k)
    powers_b[static_cast<std::size_t>(k)] = p.A * powers_b[static_cast<std::size_t>(k - 1)];

  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(n * nx, n * nu);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index s = 0; s <= t; ++s)
      gamma.block(t * nx, s * nu, nx, nu) = powers_b[static_cast<std::size_t>(t - s)];

  // Free response deviation e(t) = A^(t+1) x0 - x_ref.
  Eigen::VectorXd e(n * nx);
  Eigen::VectorXd free = p.x0;
  for (Eigen::Index t = 0; t < n; ++t) {
    free = p.A * free;
    e.segment(t * nx, nx) = free - p.x_ref;
  }

  Eigen::MatrixXd weighted(n * nx, n * nu);  // Qbar * Gamma
  for (Eigen::Index t = 0; t < n; ++t)
    weighted.middleRows(t * nx, nx).noalias() = p.Q * gamma.middleRows(t * nx, nx);

  CondensedQp out;
  out.qp.H.noalias() = gamma.transpose() * weighted;
  out.qp.g.noalias() = weighted.transpose() * e;
  for (Eigen::Index t = 0; t < n; ++t) {
    out.qp.H.block(t * nu, t * nu, nu, nu) += p.R;
    out.qp.g.segment(t * nu, nu) -= p.R * p.u_ref;
  }
  out.qp.H = (out.qp.H + out.qp.H.transpose()).eval();  // 2 * symmetric part
  out.qp.g *= 2.0;

  const Eigen::VectorXd dx0 = p.x0 - p.x_ref;
  double c = dx0.dot(p.Q * dx0) + static_cast<double>(n) * p.u_ref.dot(p.R * p.u_ref);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto et = e.segment(t * nx, nx);
    c += et.dot(p.Q * et);
  }
  out.constant = c;

  out.qp.lower = p.u_min.replicate(n, 1);
  out.qp.upper = p.u_max.replicate(n, 1);
  return out;
}

double horizon_cost(const HorizonProblem& p, const Eigen::VectorXd& u_stacked) {
  check_problem(p);
  const auto nu = p.B.cols();
  if (u_stacked.size() != nu * p.horizon) throw DimensionError("horizon_cost: input length mismatch");
  Eigen::VectorXd x = p.x0;
  double cost = 0.0;
  for (int t = 0; t < p.horizon; ++t) {
    const Eigen::VectorXd dx = x - p.x_ref;
    const Eigen::VectorXd u = u_stacked.segment(t * nu, nu);
    const Eigen::VectorXd du = u - p.u_ref;
    cost += dx.dot(p.Q * dx) + du.dot(p.R * du);
    x = p.A * x + p.B * u;
  }
  const Eigen::VectorXd dx = x - p.x_ref;
  return cost + dx.dot(p.Q * dx);
}

MpcSolution solve_horizon(const HorizonProblem& p, const QpOptions& options) {
  const CondensedQp cqp = build_qp(p);
  const QpResult r = solve_box_qp(cqp.qp, options);
  MpcSolution sol;
  const auto nu = p.B.cols();
  sol.u_seq = Eigen::Map<const Eigen::MatrixXd>(r.x.data(), nu, p.horizon);
  sol.control_cost = horizon_cost(p, r.x);
  sol.iterations = r.iterations;
  sol.kkt_residual = r.kkt_residual;
  return sol;
}

HorizonProblem make_horizon_problem(const PlayerModel& m, const Eigen::VectorXd& x0, int horizon) {
  HorizonProblem p;
  p.A = m.A;
  p.B = m.B;
  p.Q = m.Q;
  p.R = m.R;
  p.x0 = x0;
  p.x_ref = m.x_ref;
  p.u_ref = m.u_ref;
  p.u_min = m.u_min;
  p.u_max = m.u_max;
  p.horizon = horizon;
  return p;
}

MpcSolution solve_player_mpc(const CoupledNetwork& net, const MemberSet& members,
                             const Eigen::VectorXd& x0, const MpcConfig& cfg) {
  const PlayerModel m = compose_player_matrices(net, members);
  return solve_horizon(make_horizon_problem(m, x0, cfg.horizon), cfg.qp);
}

MpcSolution solve_merger_mpc(const CoupledNetwork& net, const MemberSet& p1,
                             const MemberSet& p2, const Eigen::VectorXd& x0,
                             const MpcConfig& cfg) {
  const PlayerModel m = compose_merger_matrices(net, p1, p2);
  return solve_horizon(make_horizon_problem(m, x0, cfg.horizon), cfg.qp);
}

}  // namespace coalmpc
