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

#ifndef COALMPC_MPC_HPP
#define COALMPC_MPC_HPP

#include "coalmpc/qp.hpp"
#include "coalmpc/system_model.hpp"

namespace coalmpc {

/// Finite-horizon regulation problem for one player or merger.
///
/// Cost: sum_{t=0}^{N} |x(t) - x_ref|_Q^2 + sum_{t=0}^{N-1} |u(t) - u_ref|_R^2
/// subject to x(t+1) = A x(t) + B u(t), u_min <= u(t) <= u_max. The terminal
/// stage carries the state term only.
struct HorizonProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::VectorXd x0;
  Eigen::VectorXd x_ref;
  Eigen::VectorXd u_ref;
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;
  int horizon = 1;
};

/// Condensed (states eliminated) form: cost = qp objective + constant over
/// the stacked input sequence U = [u(0); ...; u(N-1)].
struct CondensedQp {
  BoxQp qp;
  double constant = 0.0;
};

CondensedQp build_qp(const HorizonProblem& problem);

/// Direct evaluation of the horizon cost by simulating the prediction model.
double horizon_cost(const HorizonProblem& problem, const Eigen::VectorXd& u_stacked);

struct MpcConfig {
  int horizon = 10;
  QpOptions qp;
};

struct MpcSolution {
  Eigen::MatrixXd u_seq;  // column t is u(t)
  double control_cost = 0.0;
  long iterations = 0;
  double kkt_residual = 0.0;

  Eigen::VectorXd first_move() const { return u_seq.col(0); }
};

MpcSolution solve_horizon(const HorizonProblem& problem, const QpOptions& options = {});

HorizonProblem make_horizon_problem(const PlayerModel& model, const Eigen::VectorXd& x0,
                                    int horizon);

/// Local MPC of a player; `x0` stacks the members' states in ascending order.
MpcSolution solve_player_mpc(const CoupledNetwork& net, const MemberSet& members,
                             const Eigen::VectorXd& x0, const MpcConfig& cfg);

/// MPC of the merger of two disjoint players; `x0` stacks player 1's states
/// then player 2's.
MpcSolution solve_merger_mpc(const CoupledNetwork& net, const MemberSet& p1,
                             const MemberSet& p2, const Eigen::VectorXd& x0,
                             const MpcConfig& cfg);

}  // namespace coalmpc

#endif  // COALMPC_MPC_HPP
