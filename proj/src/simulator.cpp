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

#include "coalmpc/simulator.hpp"

#include <deque>
#include <map>
#include <numeric>
#include <sstream>

namespace coalmpc {

namespace {

PartitionState initial_partition(Mode mode, int agents) {
  return mode == Mode::cen ? PartitionState::grand(agents) : PartitionState::singletons(agents);
}

std::string describe(const ValidationReport& report) {
  std::ostringstream os;
  os << "invalid network:";
  for (const auto& v : report) {
    os << " [agent " << v.agent;
    if (v.other) os << "/" << *v.other;
    os << ": " << v.message << "]";
  }
  return os.str();
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::cen: return "cen";
    case Mode::dec: return "dec";
    case Mode::coo: return "coo";
    case Mode::cir: return "cir";
  }
  return "?";
}

SimResult run(const CoupledNetwork& net, const Eigen::VectorXd& x0, const SimConfig& cfg) {
  if (const auto report = validate_network(net); !report.empty())
    throw std::invalid_argument(describe(report));
  if (cfg.steps < 1 || cfg.neg_period < 1 || cfg.lifetime < 1 || cfg.mpc.horizon < 1)
    throw std::invalid_argument("steps, negotiation period, lifetime and horizon must be >= 1");
  if (x0.size() != net.state_dim()) throw DimensionError("initial state dimension mismatch");

  const int agents = net.size();
  const bool coalitional = cfg.mode == Mode::coo || cfg.mode == Mode::cir;
  const InputLayout global = global_layout(net);
  std::map<std::pair<AgentId, int>, Eigen::Index> global_offset;  // (owner, key) -> offset
  for (const auto& ch : global.channels)
    global_offset[{ch.owner, ch.is_external() ? -1 - ch.external_index : ch.target}] = ch.offset;

  NegotiationConfig neg;
  neg.criterion = cfg.mode == Mode::cir ? Criterion::cir : Criterion::coo;
  neg.coop = cfg.coop;
  neg.mpc = cfg.mpc;
  neg.order = cfg.order;
  neg.execution = cfg.execution;

  SimResult res;
  res.mode = cfg.mode;
  res.states.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  res.states.push_back(x0);
  PartitionState partition = initial_partition(cfg.mode, agents);

  Eigen::VectorXd x = x0;
  for (int k = 0; k < cfg.steps; ++k) {
    if (coalitional && k % cfg.neg_period == 0) {
      std::vector<Player> dissolved;
      partition = expire_coalitions(partition, k, cfg.lifetime, &dissolved);
      for (const auto& p : dissolved) {
        CoalitionEvent e;
        e.step = k;
        e.kind = CoalitionEvent::Kind::dissolve;
        e.members = p.members;
        res.timeline.push_back(std::move(e));
      }
      RoundResult round;
      try {
        round = negotiation_round(partition, k, x, net, neg);
      } catch (const std::exception& err) {
        throw SimulationError(k, partition.players.front().members.front(),
                              std::string("negotiation failed: ") + err.what());
      }
      for (std::size_t q : round.accepted) {
        const auto& o = round.outcomes[q];
        CoalitionEvent e;
        e.step = k;
        e.kind = CoalitionEvent::Kind::merge;
        e.members = set_union(o.p1.members, o.p2.members);
        e.p1 = o.p1.members;
        e.p2 = o.p2.members;
        e.chi = o.chi12;
        e.J1 = o.J1;
        e.J2 = o.J2;
        e.J12 = o.J12;
        e.phi1 = o.phi1;
        e.phi2 = o.phi2;
        e.incurred1 = o.incurred1;
        e.incurred2 = o.incurred2;
        res.timeline.push_back(std::move(e));
      }
      partition = std::move(round.state);
      for (const auto& p : partition.players)
        if (!p.is_singleton()) res.accrued_cooperation_cost += cooperation_cost(cfg.coop, p);
    }

    const auto& players = partition.players;
    std::vector<MpcSolution> sols(players.size());
    try {
      for_each_index(cfg.execution, players.size(), [&](std::size_t a) {
        const auto& members = players[a].members;
        sols[a] = solve_player_mpc(net, members, gather_states(net, members, x), cfg.mpc);
      });
    } catch (const std::exception& err) {
      // Report the first failing player deterministically.
      for (const auto& p : players) {
        try {
          solve_player_mpc(net, p.members, gather_states(net, p.members, x), cfg.mpc);
        } catch (...) {
          throw SimulationError(k, p.members.front(), err.what());
        }
      }
      throw SimulationError(k, players.front().members.front(), err.what());
    }

    Eigen::VectorXd u = Eigen::VectorXd::Zero(global.size());
    for (std::size_t a = 0; a < players.size(); ++a) {
      const InputLayout layout = make_layout(net, players[a].members);
      const Eigen::VectorXd move = sols[a].first_move();
      for (const auto& ch : layout.channels) {
        const auto off = global_offset.at({ch.owner, ch.is_external() ? -1 - ch.external_index : ch.target});
        u.segment(off, ch.width) = move.segment(ch.offset, ch.width);
      }
    }

    const double ell = global_stage_cost(net, x, u);
    res.stage_costs.push_back(ell);
    res.accumulated_control_cost += ell;
    res.partitions.push_back(partition.member_sets());
    res.inputs.push_back(u);
    x = step_true(net, x, u);
    res.states.push_back(x);
  }
  res.accumulated_total_cost = res.accumulated_control_cost + res.accrued_cooperation_cost;
  res.ledger = cfg.mode == Mode::cir ? side_payment_ledger(res.timeline, agents)
                                     : std::vector<double>(static_cast<std::size_t>(agents), 0.0);
  return res;
}

CostReport accumulate_costs(const SimResult& result) {
  CostReport r;
  r.control = std::accumulate(result.stage_costs.begin(), result.stage_costs.end(), 0.0);
  r.total = r.control + result.accrued_cooperation_cost;
  return r;
}

std::vector<double> side_payment_ledger(const std::vector<CoalitionEvent>& events, int agents) {
  std::vector<double> balance(static_cast<std::size_t>(agents), 0.0);
  for (const auto& e : events) {
    if (e.kind != CoalitionEvent::Kind::merge) continue;
    BargainOutcome o;
    o.J1 = e.J1;
    o.J2 = e.J2;
    o.J12 = e.J12;
    o.phi1 = e.phi1;
    o.phi2 = e.phi2;
    o.incurred1 = e.incurred1;
    o.incurred2 = e.incurred2;
    const auto [t1, t2] = side_payments(o);
    for (AgentId i : e.p1) balance[static_cast<std::size_t>(i)] += t1 / static_cast<double>(e.p1.size());
    for (AgentId i : e.p2) balance[static_cast<std::size_t>(i)] += t2 / static_cast<double>(e.p2.size());
  }
  return balance;
}

std::vector<int> graph_distances(const CoupledNetwork& net, AgentId from) {
  std::vector<int> dist(static_cast<std::size_t>(net.size()), -1);
  std::deque<AgentId> queue{from};
  dist[static_cast<std::size_t>(from)] = 0;
  while (!queue.empty()) {
    const AgentId i = queue.front();
    queue.pop_front();
    for (AgentId j : net.agent(i).neighbors()) {
      if (dist[static_cast<std::size_t>(j)] >= 0) continue;
      dist[static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(i)] + 1;
      queue.push_back(j);
    }
  }
  return dist;
}

SteadyStateReport steady_state_errors(const CoupledNetwork& net, const SimResult& result) {
  SteadyStateReport r;
  const Eigen::VectorXd& x = result.states.back();
  for (const auto& s : net.subsystems)
    r.error.push_back((x.segment(net.state_offset(s.id), s.state_dim()) - s.x_ref).norm());
  r.source_distance = net.source ? graph_distances(net, *net.source)
                                 : std::vector<int>(static_cast<std::size_t>(net.size()), -1);
  return r;
}

}  // namespace coalmpc
