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

#ifndef COALMPC_SCENARIO_HPP
#define COALMPC_SCENARIO_HPP

#include "coalmpc/simulator.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coalmpc {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flow/storage network of scalar integrators coupled through flows:
/// x_i(k+1) = x_i(k) + Ts (sum_j u_ij - sum_j u_ji) plus a controlled inflow at
/// the source and a controlled outflow at the sink.
///
/// Per-agent fields hold either one value (applied to every agent) or one
/// value per agent. R is the weight of each of the agent's input channels.
/// An empty u_max means unbounded above. The default flow capacity of 0.05
/// per channel and step makes filling the grid take tens of steps, and
/// Q = 500 puts one horizon of regulation error on the scale of the integer
/// cooperation costs.
struct ScenarioSpec {
  std::optional<std::pair<int, int>> grid;  // rows, cols
  int agents = 0;                           // used with explicit couplings
  std::vector<std::pair<AgentId, AgentId>> couplings;
  double Ts = 1.0;
  std::vector<double> x0{0.25};
  std::vector<double> x_ref{0.5};
  std::vector<double> Q{500.0};
  std::vector<double> R{5.0};
  std::vector<double> u_min{0.0};
  std::vector<double> u_max{0.05};
  std::optional<AgentId> source;
  std::optional<AgentId> sink;

  int agent_count() const;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Benchmark defaults on a rows x cols grid (source top-left, sink
/// bottom-right).
ScenarioSpec grid_spec(int rows, int cols);

/// Undirected coupling edges of a 4-neighbour grid, (min, max) sorted.
std::vector<std::pair<AgentId, AgentId>> grid_edges(int rows, int cols);

/// Builds and validates the network described by `spec`.
CoupledNetwork build_network(const ScenarioSpec& spec);

/// build_network(grid_spec(rows, cols)) with the non-topology fields of
/// `overrides` applied.
CoupledNetwork build_grid_scenario(int rows, int cols,
                                   const std::optional<ScenarioSpec>& overrides = std::nullopt);

Eigen::VectorXd initial_state(const ScenarioSpec& spec);

/// JSON scenario: {"grid": [r, c]} or {"agents": M, "couplings": [[i, j], ...]}
/// with optional "Ts", "x0", "xref", "Q", "R", "umin", "umax" (number or
/// per-agent array; "umax": null means unbounded), "source", "sink".
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
std::string write_scenario(const ScenarioSpec& spec);

/// Writes trajectories.csv, timeline.json and costs.json into `out_dir`.
void emit_outputs(const SimResult& result, const CoupledNetwork& net, const SimConfig& cfg,
                  const std::filesystem::path& out_dir);

std::string trajectories_csv(const SimResult& result, const CoupledNetwork& net);
std::string timeline_json(const SimResult& result, const SimConfig& cfg);
std::string costs_json(const SimResult& result, const CoupledNetwork& net, const SimConfig& cfg);

}  // namespace coalmpc

#endif  // COALMPC_SCENARIO_HPP
