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


#include "coalmpc/scenario.hpp"
#include "coalmpc/simulator.hpp"
#include "doctest.h"

#include <numeric>

using namespace coalmpc;

namespace {

SimConfig config(Mode mode, int steps, CoopIndex kind = CoopIndex::a) {
  SimConfig cfg;
  cfg.mode = mode;
  cfg.steps = steps;
  cfg.coop.kind = kind;
  return cfg;
}

struct Grid {
  CoupledNetwork net;
  Eigen::VectorXd x0;
};

Grid grid(int rows, int cols) {
  const auto spec = grid_spec(rows, cols);
  return {build_network(spec), initial_state(spec)};
}

CoalitionEvent merge_event(MemberSet p1, MemberSet p2, double j1, double j2, double j12,
                           double inc1, double inc2) {
  CoalitionEvent e;
  e.members = set_union(p1, p2);
  e.p1 = std::move(p1);
  e.p2 = std::move(p2);
  e.J1 = j1;
  e.J2 = j2;
  e.J12 = j12;
  e.phi1 = 0.5 * j1 + 0.5 * (j12 - j2);
  e.phi2 = 0.5 * j2 + 0.5 * (j12 - j1);
  e.incurred1 = inc1;
  e.incurred2 = inc2;
  return e;
}

}  // namespace

TEST_CASE("centralized control at the setpoint costs nothing") {
  const auto g = grid(3, 3);
  const auto r = run(g.net, Eigen::VectorXd::Constant(9, 0.5), config(Mode::cen, 10));
  CHECK(r.accumulated_control_cost == 0.0);
  CHECK(r.timeline.empty());
  CHECK(r.states.size() == 11);
  CHECK(r.inputs.size() == 10);
  CHECK(r.partitions.front() == std::vector<MemberSet>{g.net.all_agents()});
}

TEST_CASE("decentralized control only fills the source node") {
  const auto g = grid(3, 3);
  const auto r = run(g.net, g.x0, config(Mode::dec, 30));
  const auto ss = steady_state_errors(g.net, r);
  CHECK(ss.error[0] < 0.02);
  for (int i = 1; i < 9; ++i) CHECK(ss.error[i] > 0.05);
  CHECK(r.timeline.empty());
  CHECK(r.partitions.back().size() == 9);
}

TEST_CASE("centralized control settles every node") {
  const auto g = grid(3, 3);
  const auto r = run(g.net, g.x0, config(Mode::cen, 60));
  for (double e : steady_state_errors(g.net, r).error) CHECK(e < 0.05);
}

TEST_CASE("COO and CIR produce the same closed loop") {
  const auto g = grid(2, 3);
  for (auto kind : {CoopIndex::a, CoopIndex::b}) {
    const auto coo = run(g.net, g.x0, config(Mode::coo, 25, kind));
    const auto cir = run(g.net, g.x0, config(Mode::cir, 25, kind));
    REQUIRE(coo.states.size() == cir.states.size());
    for (std::size_t k = 0; k < coo.states.size(); ++k) CHECK(coo.states[k] == cir.states[k]);
    CHECK(coo.partitions == cir.partitions);
    CHECK(std::all_of(coo.ledger.begin(), coo.ledger.end(), [](double v) { return v == 0.0; }));
    CHECK_FALSE(coo.timeline.empty());
    for (const auto& e : cir.timeline)
      if (e.kind == CoalitionEvent::Kind::merge) {
        REQUIRE(e.phi1.has_value());
        CHECK(*e.phi1 + *e.phi2 == doctest::Approx(e.J12).epsilon(1e-12));
      }
  }
}

TEST_CASE("realized costs add up") {
  const auto g = grid(2, 3);
  const auto cfg = config(Mode::coo, 20);
  const auto r = run(g.net, g.x0, cfg);
  const auto report = accumulate_costs(r);
  CHECK(report.control == doctest::Approx(r.accumulated_control_cost).epsilon(1e-14));
  CHECK(report.total == doctest::Approx(r.accumulated_total_cost).epsilon(1e-14));
  for (std::size_t k = 0; k < r.inputs.size(); ++k)
    CHECK(r.stage_costs[k] == global_stage_cost(g.net, r.states[k], r.inputs[k]));

  // Cooperation cost accrues once per negotiation instant per coalition.
  double chi = 0.0;
  for (std::size_t k = 0; k < r.partitions.size(); ++k) {
    if (static_cast<int>(k) % cfg.neg_period != 0) continue;
    for (const auto& m : r.partitions[k])
      if (m.size() > 1) chi += static_cast<double>(m.size() * m.size());
  }
  CHECK(r.accrued_cooperation_cost == chi);
  CHECK(r.accumulated_total_cost == r.accumulated_control_cost + chi);
}

TEST_CASE("one-step cost by hand") {
  const auto g = grid(1, 2);
  auto cfg = config(Mode::dec, 1);
  const auto r = run(g.net, g.x0, cfg);
  // Node 0 pumps in, node 1 stays idle: 2 * 500 * 0.25^2 + 5 * u_src^2.
  const auto layout = global_layout(g.net);
  double u_src = 0.0;
  for (const auto& ch : layout.channels)
    if (ch.owner == 0 && ch.is_external()) u_src = r.inputs[0](ch.offset);
  CHECK(u_src == doctest::Approx(0.05));
  CHECK(r.accumulated_control_cost == doctest::Approx(2 * 500 * 0.0625 + 5 * u_src * u_src).epsilon(1e-12));
}

TEST_CASE("side-payment ledger") {
  CHECK(side_payment_ledger({}, 3) == std::vector<double>{0, 0, 0});

  const auto e = merge_event({0}, {1}, 4, 8, 10, 5, 5);
  CHECK(side_payment_ledger({e}, 2) == std::vector<double>{2, -2});

  const auto sym = merge_event({0}, {1}, 6, 6, 10, 5, 5);
  CHECK(side_payment_ledger({sym}, 2) == std::vector<double>{0, 0});

  // A coalition's transfer is shared evenly by its members.
  const auto big = merge_event({0, 1}, {2}, 4, 8, 10, 5, 5);
  CHECK(side_payment_ledger({big}, 3) == std::vector<double>{1, 1, -2});

  CoalitionEvent d;
  d.kind = CoalitionEvent::Kind::dissolve;
  d.members = {0, 1};
  CHECK(side_payment_ledger({big, d}, 3) == std::vector<double>{1, 1, -2});
}

TEST_CASE("ledger balances cancel within each event") {
  const auto g = grid(2, 3);
  const auto r = run(g.net, g.x0, config(Mode::cir, 25, CoopIndex::b));
  double sum = 0.0;
  for (const auto& e : r.timeline) {
    if (e.kind != CoalitionEvent::Kind::merge) continue;
    const auto ledger = side_payment_ledger({e}, g.net.size());
    const double s = std::accumulate(ledger.begin(), ledger.end(), 0.0);
    CHECK(std::abs(s) <= 1e-12 * std::max(1.0, e.J12));
    sum += s;
  }
  CHECK(std::abs(std::accumulate(r.ledger.begin(), r.ledger.end(), 0.0)) <= 1e-9);
}

TEST_CASE("runs are reproducible and independent of the execution path") {
  const auto g = grid(2, 3);
  auto cfg = config(Mode::cir, 15);
  const auto a = run(g.net, g.x0, cfg);
  const auto b = run(g.net, g.x0, cfg);
  cfg.execution = Execution::parallel;
  const auto c = run(g.net, g.x0, cfg);
  for (const auto* other : {&b, &c}) {
    CHECK(a.states == other->states);
    CHECK(a.inputs == other->inputs);
    CHECK(a.partitions == other->partitions);
    CHECK(a.ledger == other->ledger);
    CHECK(a.accumulated_total_cost == other->accumulated_total_cost);
    REQUIRE(a.timeline.size() == other->timeline.size());
    for (std::size_t i = 0; i < a.timeline.size(); ++i) {
      CHECK(a.timeline[i].step == other->timeline[i].step);
      CHECK(a.timeline[i].members == other->timeline[i].members);
      CHECK(a.timeline[i].J12 == other->timeline[i].J12);
    }
  }
}

TEST_CASE("coalitions expire after their lifetime") {
  const auto g = grid(2, 3);
  auto cfg = config(Mode::coo, 30, CoopIndex::b);
  cfg.lifetime = 4;
  const auto r = run(g.net, g.x0, cfg);
  std::map<MemberSet, int> born;
  for (const auto& e : r.timeline) {
    if (e.kind == CoalitionEvent::Kind::merge) {
      born[e.members] = e.step;
    } else {
      REQUIRE(born.count(e.members));
      CHECK(e.step - born[e.members] == cfg.lifetime);
      born.erase(e.members);
    }
  }
}

TEST_CASE("invalid configurations are rejected") {
  const auto g = grid(2, 2);
  auto cfg = config(Mode::coo, 0);
  CHECK_THROWS_AS(run(g.net, g.x0, cfg), std::invalid_argument);
  cfg.steps = 5;
  cfg.neg_period = 0;
  CHECK_THROWS_AS(run(g.net, g.x0, cfg), std::invalid_argument);
  cfg.neg_period = 1;
  CHECK_THROWS_AS(run(g.net, Eigen::VectorXd::Zero(3), cfg), DimensionError);
}

TEST_CASE("solver failures report the step and player") {
  const auto g = grid(2, 2);
  auto cfg = config(Mode::dec, 5);
  cfg.mpc.qp.tolerance = -1.0;
  cfg.mpc.qp.max_iterations = 5;
  try {
    (void)run(g.net, g.x0, cfg);
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    CHECK(e.step() == 0);
    CHECK(e.player() == 0);
  }
}

TEST_CASE("graph distances from the source") {
  const auto g = grid(3, 4);
  CHECK(graph_distances(g.net, 0) == std::vector<int>{0, 1, 2, 3, 1, 2, 3, 4, 2, 3, 4, 5});
  ScenarioSpec spec;
  spec.agents = 3;
  spec.couplings = {{0, 1}};
  const auto net = build_network(spec);
  CHECK(graph_distances(net, 0) == std::vector<int>{0, 1, -1});
  const auto r = run(net, Eigen::VectorXd::Constant(3, 0.5), config(Mode::dec, 1));
  CHECK(steady_state_errors(net, r).source_distance == std::vector<int>{-1, -1, -1});
}
