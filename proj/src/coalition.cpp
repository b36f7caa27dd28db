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

#include "coalmpc/coalition.hpp"

#include "coalmpc/exact.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

namespace coalmpc {

namespace {

// Stage costs over the horizon accumulated per agent of `model` (in
// model.agents order) for the input sequence `u_seq`.
std::vector<double> per_agent_horizon_costs(const CoupledNetwork& net, const PlayerModel& model,
                                            const Eigen::VectorXd& x0,
                                            const Eigen::MatrixXd& u_seq) {
  const auto m = model.agents.size();
  std::vector<Eigen::Index> xs(m + 1, 0), us(m + 1, 0);
  for (std::size_t a = 0; a < m; ++a) {
    const auto& s = net.agent(model.agents[a]);
    xs[a + 1] = xs[a] + s.state_dim();
    us[a + 1] = us[a] + s.input_dim();
  }
  std::vector<double> cost(m, 0.0);
  Eigen::VectorXd x = x0;
  const auto horizon = u_seq.cols();
  for (Eigen::Index t = 0; t <= horizon; ++t) {
    for (std::size_t a = 0; a < m; ++a) {
      const auto& s = net.agent(model.agents[a]);
      const Eigen::VectorXd dx = x.segment(xs[a], xs[a + 1] - xs[a]) - s.x_ref;
      cost[a] += dx.dot(s.Q * dx);
      if (t < horizon) {
        const Eigen::VectorXd du = u_seq.col(t).segment(us[a], us[a + 1] - us[a]) - s.u_ref;
        cost[a] += du.dot(s.R * du);
      }
    }
    if (t < horizon) x = model.A * x + model.B * u_seq.col(t);
  }
  return cost;
}

bool lexicographic_less(const BargainOutcome& a, const BargainOutcome& b) {
  return std::tie(a.p1.members, a.p2.members) < std::tie(b.p1.members, b.p2.members);
}

}  // namespace

PartitionState PartitionState::singletons(int agents, int time) {
  PartitionState s;
  s.time = time;
  for (AgentId i = 0; i < agents; ++i) s.players.push_back({{i}, {}, time});
  return s;
}

PartitionState PartitionState::grand(int agents, int time) {
  PartitionState s;
  s.time = time;
  Player p;
  p.born_at = time;
  for (AgentId i = 0; i < agents; ++i) p.members.push_back(i);
  s.players.push_back(std::move(p));
  return s;
}

std::vector<MemberSet> PartitionState::member_sets() const {
  std::vector<MemberSet> out;
  out.reserve(players.size());
  for (const auto& p : players) out.push_back(p.members);
  return out;
}

std::size_t PartitionState::coalition_count() const {
  return static_cast<std::size_t>(std::count_if(players.begin(), players.end(),
                                                [](const Player& p) { return !p.is_singleton(); }));
}

bool is_valid_partition(const PartitionState& state, int agents) {
  std::vector<int> seen(static_cast<std::size_t>(agents), 0);
  for (const auto& p : state.players) {
    if (p.members.empty()) return false;
    for (AgentId i : p.members) {
      if (i < 0 || i >= agents || seen[static_cast<std::size_t>(i)]++) return false;
    }
    if (p.links.size() + 1 != p.members.size()) return false;
    // Union-find over the links: a tree with |members|-1 edges is connected
    // iff no edge closes a cycle.
    std::map<AgentId, AgentId> parent;
    for (AgentId i : p.members) parent[i] = i;
    std::function<AgentId(AgentId)> find = [&](AgentId i) {
      return parent[i] == i ? i : parent[i] = find(parent[i]);
    };
    for (const auto& [a, b] : p.links) {
      if (!parent.count(a) || !parent.count(b)) return false;
      const auto ra = find(a), rb = find(b);
      if (ra == rb) return false;
      parent[ra] = rb;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

CoopCostConfig CoopCostConfig::zero(CoopIndex kind) {
  CoopCostConfig c;
  c.kind = kind;
  c.f_a = [](int) { return 0.0; };
  c.f_b = [](int) { return 0.0; };
  return c;
}

double cooperation_cost(const CoopCostConfig& cfg, const Player& p1, const Player& p2) {
  if (cfg.kind == CoopIndex::a)
    return cfg.f_a(static_cast<int>(p1.members.size() + p2.members.size()));
  return cfg.f_b(static_cast<int>(p1.links.size() + p2.links.size() + 1));
}

double cooperation_cost(const CoopCostConfig& cfg, const Player& p) {
  if (cfg.kind == CoopIndex::a) return cfg.f_a(static_cast<int>(p.members.size()));
  return cfg.f_b(static_cast<int>(p.links.size()));
}

PlayerCost player_total_cost(const CoupledNetwork& net, const Player& player,
                             const Eigen::VectorXd& x0, const MpcConfig& mpc,
                             const CoopCostConfig& coop) {
  PlayerCost out;
  out.solution = solve_player_mpc(net, player.members, x0, mpc);
  out.chi = cooperation_cost(coop, player);
  out.total = out.solution.control_cost + out.chi;
  return out;
}

MergerCost merger_total_cost(const CoupledNetwork& net, const Player& p1, const Player& p2,
                             const Eigen::VectorXd& x0, const MpcConfig& mpc,
                             const CoopCostConfig& coop) {
  const PlayerModel model = compose_merger_matrices(net, p1.members, p2.members);
  MergerCost out;
  out.solution = solve_horizon(make_horizon_problem(model, x0, mpc.horizon), mpc.qp);
  out.chi = cooperation_cost(coop, p1, p2);
  out.total = out.solution.control_cost + out.chi;

  const auto per_agent = per_agent_horizon_costs(net, model, x0, out.solution.u_seq);
  const auto n1 = p1.members.size();
  const double total_members = static_cast<double>(n1 + p2.members.size());
  out.incurred1 = std::accumulate(per_agent.begin(), per_agent.begin() + static_cast<long>(n1), 0.0) +
                  out.chi * static_cast<double>(n1) / total_members;
  out.incurred2 = out.total - out.incurred1;
  return out;
}

bool coo_decide(double j1, double j2, double j12) {
  return exact_sign_sum_minus(j1, j2, j12) >= 0;
}

std::pair<double, double> shapley_two_player(double j1, double j2, double j12) {
  return {0.5 * j1 + 0.5 * (j12 - j2), 0.5 * j2 + 0.5 * (j12 - j1)};
}

bool cir_decide(double j1, double j2, double j12) {
  // phi_1 <= J1  <=>  J12 - J2 <= J1, and symmetrically for player 2; both
  // are evaluated on exact reals so rounding in phi cannot flip the outcome.
  const bool first = exact_sign_sum_minus(j1, j2, j12) >= 0;
  const bool second = exact_sign_sum_minus(j2, j1, j12) >= 0;
  return first && second;
}

std::pair<double, double> side_payments(const BargainOutcome& o) {
  const auto [phi1, phi2] = o.phi1 && o.phi2 ? std::pair{*o.phi1, *o.phi2}
                                              : shapley_two_player(o.J1, o.J2, o.J12);
  (void)phi2;
  const double t1 = o.incurred1 - phi1;
  return {t1, -t1};
}

bool players_coupled(const CoupledNetwork& net, const Player& p1, const Player& p2) {
  for (AgentId i : p1.members)
    for (AgentId j : net.agent(i).neighbors())
      if (std::binary_search(p2.members.begin(), p2.members.end(), j)) return true;
  return false;
}

Link connecting_link(const CoupledNetwork& net, const Player& p1, const Player& p2) {
  std::optional<Link> best;
  for (AgentId i : p1.members) {
    for (AgentId j : net.agent(i).neighbors()) {
      if (!std::binary_search(p2.members.begin(), p2.members.end(), j)) continue;
      const Link e{std::min(i, j), std::max(i, j)};
      if (!best || e < *best) best = e;
    }
  }
  if (!best) throw std::invalid_argument("connecting_link: players are not coupled");
  return *best;
}

RoundResult negotiation_round(const PartitionState& state, int k, const Eigen::VectorXd& x,
                              const CoupledNetwork& net, const NegotiationConfig& cfg) {
  const auto& players = state.players;
  const auto np = players.size();

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<char> involved(np, 0);
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = a + 1; b < np; ++b)
      if (players_coupled(net, players[a], players[b])) {
        pairs.emplace_back(a, b);
        involved[a] = involved[b] = 1;
      }

  std::vector<PlayerCost> solo(np);
  for_each_index(cfg.execution, np, [&](std::size_t a) {
    if (!involved[a]) return;
    const auto x0 = gather_states(net, players[a].members, x);
    solo[a] = player_total_cost(net, players[a], x0, cfg.mpc, cfg.coop);
  });

  RoundResult result;
  result.outcomes.resize(pairs.size());
  for_each_index(cfg.execution, pairs.size(), [&](std::size_t q) {
    const auto [a, b] = pairs[q];
    const Player& p1 = players[a];
    const Player& p2 = players[b];
    std::vector<AgentId> order = p1.members;
    order.insert(order.end(), p2.members.begin(), p2.members.end());
    const auto merged = merger_total_cost(net, p1, p2, gather_states(net, order, x), cfg.mpc, cfg.coop);

    BargainOutcome& o = result.outcomes[q];
    o.p1 = p1;
    o.p2 = p2;
    o.J1 = solo[a].total;
    o.J2 = solo[b].total;
    o.J12 = merged.total;
    o.chi1 = solo[a].chi;
    o.chi2 = solo[b].chi;
    o.chi12 = merged.chi;
    o.incurred1 = merged.incurred1;
    o.incurred2 = merged.incurred2;
    o.net_benefit = o.J1 + o.J2 - o.J12;
    if (cfg.criterion == Criterion::coo) {
      o.merged = coo_decide(o.J1, o.J2, o.J12);
    } else {
      const auto [phi1, phi2] = shapley_two_player(o.J1, o.J2, o.J12);
      o.phi1 = phi1;
      o.phi2 = phi2;
      o.merged = cir_decide(o.J1, o.J2, o.J12);
    }
  });

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& outs = result.outcomes;
  if (cfg.order == RoundOrder::benefit) {
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
      if (outs[l].net_benefit != outs[r].net_benefit)
        return outs[l].net_benefit > outs[r].net_benefit;
      return lexicographic_less(outs[l], outs[r]);
    });
  } else {
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return lexicographic_less(outs[l], outs[r]); });
  }

  std::vector<char> used(np, 0);
  std::vector<Player> next;
  for (std::size_t q : order) {
    const auto [a, b] = pairs[q];
    if (!outs[q].merged || used[a] || used[b]) continue;
    used[a] = used[b] = 1;
    Player p;
    p.members = set_union(players[a].members, players[b].members);
    std::set<Link> links(players[a].links.begin(), players[a].links.end());
    links.insert(players[b].links.begin(), players[b].links.end());
    links.insert(connecting_link(net, players[a], players[b]));
    p.links.assign(links.begin(), links.end());
    p.born_at = k;
    next.push_back(std::move(p));
    result.accepted.push_back(q);
  }
  for (std::size_t a = 0; a < np; ++a)
    if (!used[a]) next.push_back(players[a]);
  std::sort(next.begin(), next.end(),
            [](const Player& l, const Player& r) { return l.members.front() < r.members.front(); });

  result.state.players = std::move(next);
  result.state.time = k;
  return result;
}

PartitionState expire_coalitions(const PartitionState& state, int k, int lifetime,
                                 std::vector<Player>* dissolved) {
  PartitionState out;
  out.time = k;
  for (const auto& p : state.players) {
    const bool expired = !p.is_singleton() && static_cast<long>(k) - p.born_at >= lifetime;
    if (!expired) {
      out.players.push_back(p);
      continue;
    }
    if (dissolved) dissolved->push_back(p);
    for (AgentId i : p.members) out.players.push_back({{i}, {}, k});
  }
  std::sort(out.players.begin(), out.players.end(),
            [](const Player& l, const Player& r) { return l.members.front() < r.members.front(); });
  return out;
}

}  // namespace coalmpc
