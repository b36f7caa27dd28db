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

#ifndef COALMPC_COALITION_HPP
#define COALMPC_COALITION_HPP

#include "coalmpc/mpc.hpp"
#include "coalmpc/parallel.hpp"
#include "coalmpc/system_model.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace coalmpc {

/// Enabled communication edge, stored with first < second.
using Link = std::pair<AgentId, AgentId>;

struct Player {
  MemberSet members;
  std::vector<Link> links;  // sorted; spanning tree over members
  int born_at = 0;

  bool is_singleton() const { return members.size() == 1; }
};

struct PartitionState {
  std::vector<Player> players;  // sorted by smallest member
  int time = 0;

  static PartitionState singletons(int agents, int time = 0);
  static PartitionState grand(int agents, int time = 0);
  std::vector<MemberSet> member_sets() const;
  std::size_t coalition_count() const;  // non-singleton players
};

/// True iff the players are pairwise disjoint and cover {0..agents-1}, and
/// every player's links form a spanning tree of its members.
bool is_valid_partition(const PartitionState& state, int agents);

enum class CoopIndex { a, b };

/// Cooperation cost indices: (a) counts agents, (b) counts enabled links.
struct CoopCostConfig {
  CoopIndex kind = CoopIndex::a;
  std::function<double(int)> f_a = [](int n) { return static_cast<double>(n) * n; };
  std::function<double(int)> f_b = [](int n) { return static_cast<double>(n); };

  static CoopCostConfig zero(CoopIndex kind = CoopIndex::a);
};

/// chi of a merger of two players.
double cooperation_cost(const CoopCostConfig& cfg, const Player& p1, const Player& p2);
/// chi of a player on its own (internal communication only).
double cooperation_cost(const CoopCostConfig& cfg, const Player& p);

struct PlayerCost {
  double total = 0.0;  // control cost + chi
  double chi = 0.0;
  MpcSolution solution;
};

/// J_i = chi_i + optimal control cost; `x0` stacks the members' states.
PlayerCost player_total_cost(const CoupledNetwork& net, const Player& player,
                             const Eigen::VectorXd& x0, const MpcConfig& mpc,
                             const CoopCostConfig& coop);

struct MergerCost {
  double total = 0.0;
  double chi = 0.0;
  MpcSolution solution;
  double incurred1 = 0.0;  // player 1 agents' stage costs in the merged plan
  double incurred2 = 0.0;
};

/// J_12 = chi_12 + optimal merged control cost; `x0` stacks player 1 then 2.
MergerCost merger_total_cost(const CoupledNetwork& net, const Player& p1, const Player& p2,
                             const Eigen::VectorXd& x0, const MpcConfig& mpc,
                             const CoopCostConfig& coop);

/// J12 <= J1 + J2, decided exactly.
bool coo_decide(double j1, double j2, double j12);

/// Two-player Shapley value of the cost game.
std::pair<double, double> shapley_two_player(double j1, double j2, double j12);

/// phi_1 <= J1 and phi_2 <= J2, each inequality decided on the exact payoffs.
bool cir_decide(double j1, double j2, double j12);

enum class Criterion { coo, cir };

struct BargainOutcome {
  Player p1;
  Player p2;
  double J1 = 0.0, J2 = 0.0, J12 = 0.0;
  double chi1 = 0.0, chi2 = 0.0, chi12 = 0.0;
  std::optional<double> phi1, phi2;  // CIR only
  /// Shares of J12 each player incurs under the merged plan (its agents'
  /// stage costs plus chi12 split by member count). They sum to J12.
  double incurred1 = 0.0, incurred2 = 0.0;
  bool merged = false;
  double net_benefit = 0.0;  // J1 + J2 - J12
};

/// Transfers that move each player from its incurred share to its Shapley
/// share; positive means the player receives. The pair sums to zero exactly.
std::pair<double, double> side_payments(const BargainOutcome& outcome);

/// Smallest (min endpoint, then max endpoint) coupled pair across players.
/// Throws std::invalid_argument if the players are not coupled.
Link connecting_link(const CoupledNetwork& net, const Player& p1, const Player& p2);

bool players_coupled(const CoupledNetwork& net, const Player& p1, const Player& p2);

enum class RoundOrder { benefit, lexicographic };

struct NegotiationConfig {
  Criterion criterion = Criterion::coo;
  CoopCostConfig coop;
  MpcConfig mpc;
  RoundOrder order = RoundOrder::benefit;
  Execution execution = Execution::serial;
};

struct RoundResult {
  PartitionState state;
  std::vector<BargainOutcome> outcomes;  // all evaluated pairs
  std::vector<std::size_t> accepted;     // indices into outcomes, in acceptance order
};

/// One noniterative bargaining round at time k over every coupled player
/// pair. Each player merges at most once; merged players get born_at = k.
RoundResult negotiation_round(const PartitionState& state, int k, const Eigen::VectorXd& x,
                              const CoupledNetwork& net, const NegotiationConfig& cfg);

inline constexpr int kInfiniteLifetime = std::numeric_limits<int>::max();

/// Dissolves every coalition with k - born_at >= lifetime into singletons.
/// Dissolved players are appended to `dissolved` when given.
PartitionState expire_coalitions(const PartitionState& state, int k, int lifetime,
                                 std::vector<Player>* dissolved = nullptr);

}  // namespace coalmpc

#endif  // COALMPC_COALITION_HPP
