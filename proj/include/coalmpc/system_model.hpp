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

#ifndef COALMPC_SYSTEM_MODEL_HPP
#define COALMPC_SYSTEM_MODEL_HPP

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coalmpc {

using AgentId = int;

/// Sorted, duplicate-free set of agent ids.
using MemberSet = std::vector<AgentId>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input channel acting only on its owner's dynamics (source inflow, sink
/// outflow).
struct ExternalChannel {
  std::string label;
  Eigen::MatrixXd B;
};

/// One agent of the coupled network.
///
/// The agent's own input vector u_i stacks, in this order, one block per
/// neighbour j (ascending id, the action u_ji "from i toward j") followed by
/// the external channels. R, u_ref, u_min and u_max are laid out the same way.
struct SubsystemModel {
  AgentId id = 0;
  Eigen::MatrixXd A;
  std::map<AgentId, Eigen::MatrixXd> B_in;   // j -> effect of j's action on x_i
  std::map<AgentId, Eigen::MatrixXd> B_out;  // j -> effect of i's action toward j on x_i
  std::vector<ExternalChannel> external;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::VectorXd x_ref;
  Eigen::VectorXd u_ref;
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const;
  std::vector<AgentId> neighbors() const;
};

struct CoupledNetwork {
  std::vector<SubsystemModel> subsystems;  // subsystems[i].id == i
  std::vector<Eigen::VectorXd> exogenous;  // empty, or one constant term per agent
  std::optional<AgentId> source;
  std::optional<AgentId> sink;

  int size() const { return static_cast<int>(subsystems.size()); }
  const SubsystemModel& agent(AgentId i) const;
  Eigen::Index state_dim() const;
  Eigen::Index state_offset(AgentId i) const;
  MemberSet all_agents() const;
};

/// One stacked input block: the action of `owner` toward `target`, or one of
/// the owner's external channels (target == kExternal).
struct Channel {
  static constexpr AgentId kExternal = -1;

  AgentId owner = 0;
  AgentId target = kExternal;
  int external_index = -1;
  Eigen::Index offset = 0;
  Eigen::Index width = 0;

  bool is_external() const { return target == kExternal; }
  std::string name(const CoupledNetwork& net) const;
};

/// Ordering of the channels inside a stacked input vector.
struct InputLayout {
  std::vector<AgentId> agents;  // agents whose channels appear, in order
  std::vector<Channel> channels;

  Eigen::Index size() const;
};

/// Channels owned by `agents`, grouped by owner in the given agent order,
/// neighbours ascending then external channels within each owner.
InputLayout make_layout(const CoupledNetwork& net, const std::vector<AgentId>& agents);

/// Layout of all channels of the network (agents ascending).
InputLayout global_layout(const CoupledNetwork& net);

struct ValidationIssue {
  AgentId agent = 0;
  std::optional<AgentId> other;
  std::string message;
};
using ValidationReport = std::vector<ValidationIssue>;

/// Empty iff every structural and weight invariant holds.
ValidationReport validate_network(const CoupledNetwork& net);

/// Plant truth: x_i(k+1) = A_i x_i + sum_j B_in[j] u_ij + sum_j B_out[j] u_ji
/// + external channels + exogenous term. `u` follows global_layout().
Eigen::VectorXd step_true(const CoupledNetwork& net, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u);

/// Quadratic stage cost of one agent.
double stage_cost(const SubsystemModel& sub, const Eigen::VectorXd& x_i,
                  const Eigen::VectorXd& u_i);

/// Sum of stage_cost over all agents; `u` follows global_layout().
double global_stage_cost(const CoupledNetwork& net, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u);

/// Prediction model of a player or a merger, with stacked weights, references
/// and bounds. States are stacked in `agents` order; inputs follow `layout`.
struct PlayerModel {
  std::vector<AgentId> agents;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  InputLayout layout;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::VectorXd x_ref;
  Eigen::VectorXd u_ref;
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;
};

/// Player model for member set P. Couplings toward agents outside P are
/// dropped: actions of outsiders are not modelled and own actions toward
/// outsiders only act through the owner's B_out.
PlayerModel compose_player_matrices(const CoupledNetwork& net, const MemberSet& members);

/// Merger model of two disjoint players: block diagonal state matrix, the two
/// player input matrices on the diagonal and the cross blocks between them.
/// States and inputs are stacked player 1 first.
PlayerModel compose_merger_matrices(const CoupledNetwork& net, const MemberSet& p1,
                                    const MemberSet& p2);

/// Stacks the states of `agents` out of a global state vector.
Eigen::VectorXd gather_states(const CoupledNetwork& net, const std::vector<AgentId>& agents,
                              const Eigen::VectorXd& x);

/// Checks that `members` is a sorted, nonempty subset of the network.
void require_member_set(const CoupledNetwork& net, const MemberSet& members);

MemberSet set_union(const MemberSet& a, const MemberSet& b);

}  // namespace coalmpc

#endif  // COALMPC_SYSTEM_MODEL_HPP
