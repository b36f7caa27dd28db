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

// coalmpc: closed-loop coalitional MPC simulator.
//
//   coalmpc run --scenario s.json --mode coo --coop-cost b --out results/
//   coalmpc grid --rows 4 --cols 4 --out scenario.json

#include "coalmpc/scenario.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

namespace {

constexpr int kConfigError = 1;
constexpr int kSolverFailure = 2;

int parse_lifetime(const std::string& text) {
  if (text == "inf") return coalmpc::kInfiniteLifetime;
  std::size_t pos = 0;
  const int v = std::stoi(text, &pos);
  if (pos != text.size() || v < 1) throw std::invalid_argument("lifetime must be a positive integer or 'inf'");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace coalmpc;

  CLI::App app{"Coalitional model predictive control simulator"};
  app.require_subcommand(1);

  SimConfig cfg;
  std::string scenario_path, out_dir, lifetime = std::to_string(cfg.lifetime);
  std::string order = "benefit";
  bool parallel = false;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario in closed loop");
  run_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--mode", cfg.mode, "Control architecture")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Mode>{{"cen", Mode::cen}, {"dec", Mode::dec}, {"coo", Mode::coo}, {"cir", Mode::cir}},
          CLI::ignore_case));
  run_cmd->add_option("--coop-cost", cfg.coop.kind, "Cooperation cost index")
      ->transform(CLI::CheckedTransformer(std::map<std::string, CoopIndex>{{"a", CoopIndex::a}, {"b", CoopIndex::b}},
                                          CLI::ignore_case));
  run_cmd->add_option("--steps", cfg.steps, "Simulation length")->check(CLI::PositiveNumber);
  run_cmd->add_option("--horizon", cfg.mpc.horizon, "Prediction horizon")->check(CLI::PositiveNumber);
  run_cmd->add_option("--neg-period", cfg.neg_period, "Steps between negotiations")->check(CLI::PositiveNumber);
  run_cmd->add_option("--lifetime", lifetime, "Coalition lifetime in steps, or 'inf'");
  run_cmd->add_option("--order", order, "Merge acceptance order")->check(CLI::IsMember({"benefit", "lex"}));
  run_cmd->add_flag("--parallel", parallel, "Solve independent MPC problems with OpenMP");
  run_cmd->add_option("--out", out_dir, "Output directory")->required();

  int rows = 4, cols = 4;
  std::string grid_out;
  auto* grid_cmd = app.add_subcommand("grid", "Write the grid benchmark scenario");
  grid_cmd->add_option("--rows", rows, "Grid rows")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--cols", cols, "Grid columns")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--out", grid_out, "Scenario file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (grid_cmd->parsed()) {
    try {
      std::ofstream out(grid_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + grid_out);
      out << write_scenario(grid_spec(rows, cols));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kConfigError;
    }
    return 0;
  }

  CoupledNetwork net;
  Eigen::VectorXd x0;
  try {
    cfg.lifetime = parse_lifetime(lifetime);
    cfg.order = order == "lex" ? RoundOrder::lexicographic : RoundOrder::benefit;
    cfg.execution = parallel ? Execution::parallel : Execution::serial;
    if (const char* tol = std::getenv("COALMPC_TOL")) {
      cfg.mpc.qp.tolerance = std::stod(tol);
      if (!(cfg.mpc.qp.tolerance > 0.0)) throw std::invalid_argument("COALMPC_TOL must be positive");
    }
    const ScenarioSpec spec = load_scenario(scenario_path);
    net = build_network(spec);
    x0 = initial_state(spec);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  SimResult result;
  try {
    result = run(net, x0, cfg);
  } catch (const SimulationError& e) {
    std::cerr << "solver failure at step " << e.step() << " (player of agent " << e.player()
              << "): " << e.what() << "\n";
    return kSolverFailure;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    emit_outputs(result, net, cfg, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  const auto costs = accumulate_costs(result);
  std::cout << to_string(cfg.mode) << " control_cost=" << costs.control << " total_cost=" << costs.total
            << " events=" << result.timeline.size() << "\n";
  return 0;
}
