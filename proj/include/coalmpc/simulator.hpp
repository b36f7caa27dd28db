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

#ifndef COALMPC_SIMULATOR_HPP
#define COALMPC_SIMULATOR_HPP

#include "coalmpc/coalition.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coalmpc {

enum class Mode { cen, dec, coo, cir };

const char* to_string(Mode mode);

struct SimConfig {
  Mode mode = Mode::coo;
  int steps = 100;
  int neg_period = 1;
  int lifetime = 10;  // kInfiniteLifetime disables expiry
  CoopCostConfig coop;
  MpcConfig mpc;
  RoundOrder order = RoundOrder::benefit;
  Execution execution = Execution::serial;
};

struct CoalitionEvent {
  enum class Kind { merge, dissolve };

  int step = 0;
  Kind kind = Kind::merge;
  MemberSet members;
  // Merge events only.
  MemberSet p1, p2;
  double chi = 0.0;
  double J1 = 0.0, J2 = 0.0, J12 = 0.0;
  std::optional<double> phi1, phi2;
  double incurred1 = 0.0, incurred2 = 0.0;
};

struct SimResult {
  Mode mode = Mode::coo;
  std::vector<Eigen::VectorXd> states;  // x(0) .. x(steps)
  std::vector<Eigen::VectorXd> inputs;  // u(0) .. u(steps-1), global layout
  std::vector<double> stage_costs;      // realized global stage cost per step
  std::vector<std::vector<MemberSet>> partitions;  // partition in force at each step
  std::vector<CoalitionEvent> timeline;
  double accumulated_control_cost = 0.0;
  double accrued_cooperation_cost = 0.0;
  double accumulated_total_cost = 0.0;
  std::vector<double> ledger;  // per-agent side-payment balance, positive = received
};

/// Thrown when an MPC solve fails inside the closed loop.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(int step, AgentId player, const std::string& what)
      : std::runtime_error(what), step_(step), player_(player) {}
  int step() const { return step_; }
  /// Smallest member id of the failing player.
  AgentId player() const { return player_; }

 private:
  int step_;
  AgentId player_;
};

/// Closed-loop simulation from `x0` (global stacked state).
///
/// At each step k: for COO/CIR and k % neg_period == 0 coalitions expire and a
/// negotiation round runs, then active coalitions accrue their chi once; every
/// player solves its MPC and applies its first move; the plant advances with
/// step_true.
SimResult run(const CoupledNetwork& net, const Eigen::VectorXd& x0, const SimConfig& cfg);

struct CostReport {
  double control = 0.0;
  double total = 0.0;
};

/// Re-sums the realized stage costs and adds the accrued cooperation costs.
CostReport accumulate_costs(const SimResult& result);

/// Per-agent balances from the merge events: each player's transfer
/// (incurred share minus Shapley share) is split evenly over its members.
std::vector<double> side_payment_ledger(const std::vector<CoalitionEvent>& events, int agents);

struct SteadyStateReport {
  std::vector<double> error;       // |x_i(final) - x_ref_i|
  std::vector<int> source_distance;  // hops from the source, -1 if unreachable/no source
};

SteadyStateReport steady_state_errors(const CoupledNetwork& net, const SimResult& result);

/// Hop distance from `from` over the coupling graph (-1 when unreachable).
std::vector<int> graph_distances(const CoupledNetwork& net, AgentId from);

}  // namespace coalmpc

#endif  // COALMPC_SIMULATOR_HPP
