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

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace coalmpc {

namespace {

using json = nlohmann::ordered_json;

const std::set<std::string> kKnownFields{"grid", "agents", "couplings", "Ts", "x0", "xref",
                                         "Q", "R", "umin", "umax", "source", "sink"};

double per_agent(const std::vector<double>& v, AgentId i) {
  return v.size() == 1 ? v.front() : v.at(static_cast<std::size_t>(i));
}

void check_per_agent(const char* field, const std::vector<double>& v, int agents, bool optional) {
  if (v.empty() && optional) return;
  if (v.size() != 1 && static_cast<int>(v.size()) != agents)
    throw ScenarioError(std::string("field '") + field + "': expected 1 or " +
                        std::to_string(agents) + " values, got " + std::to_string(v.size()));
}

std::vector<double> read_per_agent(const json& j, const char* field) {
  const json& v = j.at(field);
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array() && !v.empty() &&
      std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
    return v.get<std::vector<double>>();
  throw ScenarioError(std::string("field '") + field + "': expected a number or a nonempty array of numbers");
}

int read_int(const json& j, const char* field) {
  const json& v = j.at(field);
  if (!v.is_number_integer()) throw ScenarioError(std::string("field '") + field + "': expected an integer");
  return v.get<int>();
}

json per_agent_json(const std::vector<double>& v) {
  if (v.size() == 1) return v.front();
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

int ScenarioSpec::agent_count() const {
  return grid ? grid->first * grid->second : agents;
}

std::vector<std::pair<AgentId, AgentId>> grid_edges(int rows, int cols) {
  std::vector<std::pair<AgentId, AgentId>> edges;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const AgentId i = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(i, i + 1);
      if (r + 1 < rows) edges.emplace_back(i, i + cols);
    }
  std::sort(edges.begin(), edges.end());
  return edges;
}

ScenarioSpec grid_spec(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ScenarioError("grid dimensions must be >= 1");
  ScenarioSpec s;
  s.grid = {rows, cols};
  s.source = 0;
  s.sink = rows * cols - 1;
  return s;
}

CoupledNetwork build_network(const ScenarioSpec& spec) {
  const int m = spec.agent_count();
  if (spec.grid && (spec.grid->first < 1 || spec.grid->second < 1))
    throw ScenarioError("grid dimensions must be >= 1");
  if (m < 1) throw ScenarioError("scenario has no agents");
  if (!(spec.Ts > 0.0)) throw ScenarioError("field 'Ts': must be positive");
  check_per_agent("x0", spec.x0, m, false);
  check_per_agent("xref", spec.x_ref, m, false);
  check_per_agent("Q", spec.Q, m, false);
  check_per_agent("R", spec.R, m, false);
  check_per_agent("umin", spec.u_min, m, false);
  check_per_agent("umax", spec.u_max, m, true);
  auto check_id = [m](const char* field, const std::optional<AgentId>& id) {
    if (id && (*id < 0 || *id >= m))
      throw ScenarioError(std::string("field '") + field + "': agent id out of range");
  };
  check_id("source", spec.source);
  check_id("sink", spec.sink);
  if (spec.source && spec.sink && *spec.source == *spec.sink && m > 1)
    throw ScenarioError("source and sink must differ");

  const auto edges = spec.grid ? grid_edges(spec.grid->first, spec.grid->second) : spec.couplings;
  CoupledNetwork net;
  net.source = spec.source;
  net.sink = spec.sink;
  net.subsystems.resize(static_cast<std::size_t>(m));
  for (AgentId i = 0; i < m; ++i) {
    auto& s = net.subsystems[static_cast<std::size_t>(i)];
    s.id = i;
    s.A = Eigen::MatrixXd::Identity(1, 1);
    s.Q = Eigen::MatrixXd::Constant(1, 1, per_agent(spec.Q, i));
    s.x_ref = Eigen::VectorXd::Constant(1, per_agent(spec.x_ref, i));
  }
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= m || b >= m || a == b)
      throw ScenarioError("field 'couplings': invalid edge (" + std::to_string(a) + ", " +
                          std::to_string(b) + ")");
    for (const auto& [i, j] : {std::pair{a, b}, std::pair{b, a}}) {
      auto& s = net.subsystems[static_cast<std::size_t>(i)];
      s.B_out[j] = Eigen::MatrixXd::Constant(1, 1, -spec.Ts);
      s.B_in[j] = Eigen::MatrixXd::Constant(1, 1, spec.Ts);
    }
  }
  if (spec.source)
    net.subsystems[static_cast<std::size_t>(*spec.source)].external.push_back(
        {"src", Eigen::MatrixXd::Constant(1, 1, spec.Ts)});
  if (spec.sink)
    net.subsystems[static_cast<std::size_t>(*spec.sink)].external.push_back(
        {"snk", Eigen::MatrixXd::Constant(1, 1, -spec.Ts)});

  for (AgentId i = 0; i < m; ++i) {
    auto& s = net.subsystems[static_cast<std::size_t>(i)];
    const auto nu = s.input_dim();
    s.R = per_agent(spec.R, i) * Eigen::MatrixXd::Identity(nu, nu);
    s.u_ref = Eigen::VectorXd::Zero(nu);
    s.u_min = Eigen::VectorXd::Constant(nu, per_agent(spec.u_min, i));
    s.u_max = Eigen::VectorXd::Constant(
        nu, spec.u_max.empty() ? std::numeric_limits<double>::infinity() : per_agent(spec.u_max, i));
  }

  if (const auto report = validate_network(net); !report.empty()) {
    std::ostringstream os;
    os << "scenario violates network invariants:";
    for (const auto& v : report) os << " [agent " << v.agent << ": " << v.message << "]";
    throw ScenarioError(os.str());
  }
  return net;
}

CoupledNetwork build_grid_scenario(int rows, int cols, const std::optional<ScenarioSpec>& overrides) {
  ScenarioSpec spec = grid_spec(rows, cols);
  if (overrides) {
    spec.Ts = overrides->Ts;
    spec.x0 = overrides->x0;
    spec.x_ref = overrides->x_ref;
    spec.Q = overrides->Q;
    spec.R = overrides->R;
    spec.u_min = overrides->u_min;
    spec.u_max = overrides->u_max;
  }
  return build_network(spec);
}

Eigen::VectorXd initial_state(const ScenarioSpec& spec) {
  const int m = spec.agent_count();
  check_per_agent("x0", spec.x0, m, false);
  Eigen::VectorXd x(m);
  for (AgentId i = 0; i < m; ++i) x(i) = per_agent(spec.x0, i);
  return x;
}

ScenarioSpec parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ScenarioError("scenario parse error at line " + std::to_string(line) + ": " + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKnownFields.count(key)) throw ScenarioError("unknown field '" + key + "'");

  ScenarioSpec s;
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
      throw ScenarioError("field 'grid': expected [rows, cols]");
    s = grid_spec(g[0].get<int>(), g[1].get<int>());
    if (j.contains("couplings") || j.contains("agents"))
      throw ScenarioError("field 'couplings': not allowed together with 'grid'");
  } else if (j.contains("couplings")) {
    s.agents = j.contains("agents") ? read_int(j, "agents") : 0;
    const json& c = j["couplings"];
    if (!c.is_array()) throw ScenarioError("field 'couplings': expected an array of [i, j] pairs");
    for (const auto& e : c) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ScenarioError("field 'couplings': expected an array of [i, j] pairs");
      const AgentId a = e[0].get<int>(), b = e[1].get<int>();
      s.couplings.emplace_back(std::min(a, b), std::max(a, b));
      if (!j.contains("agents")) s.agents = std::max({s.agents, a + 1, b + 1});
    }
    std::sort(s.couplings.begin(), s.couplings.end());
    s.couplings.erase(std::unique(s.couplings.begin(), s.couplings.end()), s.couplings.end());
  } else {
    throw ScenarioError("field 'grid': scenario needs 'grid' or 'couplings'");
  }

  if (j.contains("Ts")) {
    if (!j["Ts"].is_number()) throw ScenarioError("field 'Ts': expected a number");
    s.Ts = j["Ts"].get<double>();
  }
  if (j.contains("x0")) s.x0 = read_per_agent(j, "x0");
  if (j.contains("xref")) s.x_ref = read_per_agent(j, "xref");
  if (j.contains("Q")) s.Q = read_per_agent(j, "Q");
  if (j.contains("R")) s.R = read_per_agent(j, "R");
  if (j.contains("umin")) s.u_min = read_per_agent(j, "umin");
  if (j.contains("umax")) {
    if (j["umax"].is_null()) {
      s.u_max.clear();
    } else {
      s.u_max = read_per_agent(j, "umax");
    }
  }
  if (j.contains("source")) s.source = read_int(j, "source");
  if (j.contains("sink")) s.sink = read_int(j, "sink");

  build_network(s);  // validation only
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string write_scenario(const ScenarioSpec& s) {
  json j;
  if (s.grid) {
    j["grid"] = {s.grid->first, s.grid->second};
  } else {
    j["agents"] = s.agents;
    j["couplings"] = json::array();
    for (const auto& [a, b] : s.couplings) j["couplings"].push_back({a, b});
  }
  j["Ts"] = s.Ts;
  j["x0"] = per_agent_json(s.x0);
  j["xref"] = per_agent_json(s.x_ref);
  j["Q"] = per_agent_json(s.Q);
  j["R"] = per_agent_json(s.R);
  j["umin"] = per_agent_json(s.u_min);
  j["umax"] = s.u_max.empty() ? json(nullptr) : per_agent_json(s.u_max);
  if (s.source) j["source"] = *s.source;
  if (s.sink) j["sink"] = *s.sink;
  return j.dump(2) + "\n";
}

std::string trajectories_csv(const SimResult& result, const CoupledNetwork& net) {
  const InputLayout global = global_layout(net);
  Eigen::Index max_n = 0;
  for (const auto& s : net.subsystems) max_n = std::max(max_n, s.state_dim());

  std::ostringstream os;
  os << "step,agent_id";
  if (max_n == 1) {
    os << ",state";
  } else {
    for (Eigen::Index d = 0; d < max_n; ++d) os << ",state_" << d;
  }
  for (const auto& ch : global.channels) {
    if (ch.width == 1) {
      os << ',' << ch.name(net);
    } else {
      for (Eigen::Index c = 0; c < ch.width; ++c) os << ',' << ch.name(net) << '_' << c;
    }
  }
  os << '\n';

  for (std::size_t k = 0; k < result.inputs.size(); ++k) {
    const auto& x = result.states[k];
    const auto& u = result.inputs[k];
    for (const auto& s : net.subsystems) {
      os << k << ',' << s.id;
      const auto off = net.state_offset(s.id);
      for (Eigen::Index d = 0; d < max_n; ++d) {
        os << ',';
        if (d < s.state_dim()) os << format_double(x(off + d));
      }
      for (const auto& ch : global.channels) {
        for (Eigen::Index c = 0; c < ch.width; ++c) {
          os << ',';
          if (ch.owner == s.id) os << format_double(u(ch.offset + c));
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string timeline_json(const SimResult& result, const SimConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["events"] = json::array();
  for (const auto& e : result.timeline) {
    json ev;
    ev["step"] = e.step;
    ev["event"] = e.kind == CoalitionEvent::Kind::merge ? "merge" : "dissolve";
    ev["members"] = e.members;
    if (e.kind == CoalitionEvent::Kind::merge) {
      ev["player1"] = e.p1;
      ev["player2"] = e.p2;
      ev["chi"] = e.chi;
      ev["J1"] = e.J1;
      ev["J2"] = e.J2;
      ev["J12"] = e.J12;
      if (e.phi1) ev["phi1"] = *e.phi1;
      if (e.phi2) ev["phi2"] = *e.phi2;
    }
    j["events"].push_back(std::move(ev));
  }
  return j.dump(2) + "\n";
}

std::string costs_json(const SimResult& result, const CoupledNetwork& net, const SimConfig& cfg) {
  const auto report = accumulate_costs(result);
  const auto ss = steady_state_errors(net, result);
  json j;
  j["mode"] = to_string(cfg.mode);
  j["coop_cost"] = cfg.coop.kind == CoopIndex::a ? "a" : "b";
  j["steps"] = cfg.steps;
  j["horizon"] = cfg.mpc.horizon;
  j["accumulated_control_cost"] = report.control;
  j["accrued_cooperation_cost"] = result.accrued_cooperation_cost;
  j["accumulated_total_cost"] = report.total;
  j["steady_state_error"] = ss.error;
  j["source_distance"] = ss.source_distance;
  j["ledger"] = result.ledger;
  return j.dump(2) + "\n";
}

void emit_outputs(const SimResult& result, const CoupledNetwork& net, const SimConfig& cfg,
                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "trajectories.csv", trajectories_csv(result, net));
  write_file(out_dir / "timeline.json", timeline_json(result, cfg));
  write_file(out_dir / "costs.json", costs_json(result, net, cfg));
}

}  // namespace coalmpc
