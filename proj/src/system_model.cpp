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

#include "coalmpc/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coalmpc {

namespace {

constexpr double kSymmetryTol = 1e-12;

bool is_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

bool is_psd(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

bool is_pd(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

// Offset of the channel (owner -> target) inside the owner's own input vector.
Eigen::Index local_offset(const SubsystemModel& sub, AgentId target, int external_index) {
  Eigen::Index off = 0;
  for (const auto& [j, b] : sub.B_out) {
    if (external_index < 0 && j == target) return off;
    off += b.cols();
  }
  for (int e = 0; e < static_cast<int>(sub.external.size()); ++e) {
    if (e == external_index) return off;
    off += sub.external[e].B.cols();
  }
  throw std::out_of_range("channel not owned by agent " + std::to_string(sub.id));
}

// Start of each agent's block in a layout where agents are stacked in
// ascending order.
std::vector<Eigen::Index> global_starts(const CoupledNetwork& net) {
  std::vector<Eigen::Index> starts(net.subsystems.size() + 1, 0);
  for (std::size_t i = 0; i < net.subsystems.size(); ++i)
    starts[i + 1] = starts[i] + net.subsystems[i].input_dim();
  return starts;
}

Eigen::MatrixXd block_diag(const std::vector<const Eigen::MatrixXd*>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto* b : blocks) {
    rows += b->rows();
    cols += b->cols();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto* b : blocks) {
    out.block(r, c, b->rows(), b->cols()) = *b;
    r += b->rows();
    c += b->cols();
  }
  return out;
}

// Per-agent state offsets inside a stacking order.
std::map<AgentId, Eigen::Index> state_offsets(const CoupledNetwork& net,
                                              const std::vector<AgentId>& agents) {
  std::map<AgentId, Eigen::Index> off;
  Eigen::Index r = 0;
  for (AgentId i : agents) {
    off[i] = r;
    r += net.agent(i).state_dim();
  }
  return off;
}

// Stacks weights, references and bounds of `agents` in the given order.
void stack_weights(const CoupledNetwork& net, PlayerModel& pm) {
  std::vector<const Eigen::MatrixXd*> qs, rs;
  Eigen::Index nx = 0, nu = 0;
  for (AgentId i : pm.agents) {
    const auto& s = net.agent(i);
    qs.push_back(&s.Q);
    rs.push_back(&s.R);
    nx += s.state_dim();
    nu += s.input_dim();
  }
  pm.Q = block_diag(qs);
  pm.R = block_diag(rs);
  pm.x_ref.resize(nx);
  pm.u_ref.resize(nu);
  pm.u_min.resize(nu);
  pm.u_max.resize(nu);
  Eigen::Index r = 0, c = 0;
  for (AgentId i : pm.agents) {
    const auto& s = net.agent(i);
    pm.x_ref.segment(r, s.state_dim()) = s.x_ref;
    pm.u_ref.segment(c, s.input_dim()) = s.u_ref;
    pm.u_min.segment(c, s.input_dim()) = s.u_min;
    pm.u_max.segment(c, s.input_dim()) = s.u_max;
    r += s.state_dim();
    c += s.input_dim();
  }
}

}  // namespace

Eigen::Index SubsystemModel::input_dim() const {
  Eigen::Index n = 0;
  for (const auto& [j, b] : B_out) n += b.cols();
  for (const auto& e : external) n += e.B.cols();
  return n;
}

std::vector<AgentId> SubsystemModel::neighbors() const {
  std::vector<AgentId> out;
  out.reserve(B_out.size());
  for (const auto& [j, b] : B_out) out.push_back(j);
  return out;
}

const SubsystemModel& CoupledNetwork::agent(AgentId i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("unknown agent id " + std::to_string(i));
  return subsystems[static_cast<std::size_t>(i)];
}

Eigen::Index CoupledNetwork::state_dim() const {
  Eigen::Index n = 0;
  for (const auto& s : subsystems) n += s.state_dim();
  return n;
}

Eigen::Index CoupledNetwork::state_offset(AgentId i) const {
  Eigen::Index off = 0;
  for (AgentId j = 0; j < i; ++j) off += agent(j).state_dim();
  return off;
}

MemberSet CoupledNetwork::all_agents() const {
  MemberSet s(subsystems.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<AgentId>(i);
  return s;
}

std::string Channel::name(const CoupledNetwork& net) const {
  std::ostringstream os;
  os << "u_" << owner << "_";
  if (is_external())
    os << net.agent(owner).external[static_cast<std::size_t>(external_index)].label;
  else
    os << target;
  return os.str();
}

Eigen::Index InputLayout::size() const {
  Eigen::Index n = 0;
  for (const auto& c : channels) n += c.width;
  return n;
}

InputLayout make_layout(const CoupledNetwork& net, const std::vector<AgentId>& agents) {
  InputLayout layout;
  layout.agents = agents;
  Eigen::Index off = 0;
  for (AgentId i : agents) {
    const auto& s = net.agent(i);
    for (const auto& [j, b] : s.B_out) {
      layout.channels.push_back({i, j, -1, off, b.cols()});
      off += b.cols();
    }
    for (int e = 0; e < static_cast<int>(s.external.size()); ++e) {
      const auto w = s.external[static_cast<std::size_t>(e)].B.cols();
      layout.channels.push_back({i, Channel::kExternal, e, off, w});
      off += w;
    }
  }
  return layout;
}

InputLayout global_layout(const CoupledNetwork& net) {
  return make_layout(net, net.all_agents());
}

ValidationReport validate_network(const CoupledNetwork& net) {
  ValidationReport report;
  auto issue = [&](AgentId i, std::optional<AgentId> j, std::string msg) {
    report.push_back({i, j, std::move(msg)});
  };
  const int m = net.size();
  for (int i = 0; i < m; ++i) {
    const auto& s = net.subsystems[static_cast<std::size_t>(i)];
    if (s.id != i) issue(i, std::nullopt, "id does not match position");
    const auto n = s.A.rows();
    if (s.A.cols() != n) issue(i, std::nullopt, "A is not square");
    if (s.Q.rows() != n || s.Q.cols() != n) {
      issue(i, std::nullopt, "Q dimension mismatch");
    } else if (!is_symmetric(s.Q) || !is_psd(s.Q)) {
      issue(i, std::nullopt, "Q is not symmetric positive semidefinite");
    }
    if (s.x_ref.size() != n) issue(i, std::nullopt, "x_ref dimension mismatch");

    for (const auto& [j, b] : s.B_out) {
      if (j < 0 || j >= m || j == i) {
        issue(i, j, "coupling to invalid agent");
        continue;
      }
      if (!s.B_in.count(j)) issue(i, j, "B_out neighbour missing from B_in");
      if (b.rows() != n) issue(i, j, "B_out row count mismatch");
      const auto& other = net.subsystems[static_cast<std::size_t>(j)];
      if (!other.B_out.count(i)) {
        issue(i, j, "asymmetric coupling");
      } else if (other.B_in.count(i) && other.B_in.at(i).cols() != b.cols()) {
        issue(i, j, "channel width mismatch between B_out and neighbour B_in");
      }
    }
    for (const auto& [j, b] : s.B_in) {
      if (!s.B_out.count(j)) issue(i, j, "B_in neighbour missing from B_out");
      if (b.rows() != n) issue(i, j, "B_in row count mismatch");
    }
    for (const auto& e : s.external)
      if (e.B.rows() != n) issue(i, std::nullopt, "external channel '" + e.label + "' row count mismatch");

    const auto nu = s.input_dim();
    if (s.R.rows() != nu || s.R.cols() != nu) {
      issue(i, std::nullopt, "R dimension mismatch");
    } else if (!is_symmetric(s.R) || !is_pd(s.R)) {
      issue(i, std::nullopt, "R is not symmetric positive definite");
    }
    if (s.u_ref.size() != nu || s.u_min.size() != nu || s.u_max.size() != nu) {
      issue(i, std::nullopt, "input reference or bound dimension mismatch");
    } else if ((s.u_min.array() > s.u_ref.array()).any() ||
               (s.u_ref.array() > s.u_max.array()).any()) {
      issue(i, std::nullopt, "u_ref outside [u_min, u_max]");
    }
  }
  if (!net.exogenous.empty()) {
    if (static_cast<int>(net.exogenous.size()) != m) {
      issue(0, std::nullopt, "exogenous term count does not match agent count");
    } else {
      for (int i = 0; i < m; ++i)
        if (net.exogenous[static_cast<std::size_t>(i)].size() != net.subsystems[static_cast<std::size_t>(i)].A.rows())
          issue(i, std::nullopt, "exogenous term dimension mismatch");
    }
  }
  if (net.source && (*net.source < 0 || *net.source >= m)) issue(*net.source, std::nullopt, "invalid source id");
  if (net.sink && (*net.sink < 0 || *net.sink >= m)) issue(*net.sink, std::nullopt, "invalid sink id");
  return report;
}

Eigen::VectorXd step_true(const CoupledNetwork& net, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u) {
  const auto starts = global_starts(net);
  if (x.size() != net.state_dim() || u.size() != starts.back())
    throw DimensionError("step_true: state or input dimension mismatch");
  Eigen::VectorXd next(x.size());
  Eigen::Index r = 0;
  for (const auto& s : net.subsystems) {
    const auto n = s.state_dim();
    const auto own = starts[static_cast<std::size_t>(s.id)];
    Eigen::VectorXd xi = s.A * x.segment(r, n);
    for (const auto& [j, b] : s.B_in) {
      const auto& other = net.agent(j);
      const auto off = starts[static_cast<std::size_t>(j)] + local_offset(other, s.id, -1);
      xi += b * u.segment(off, b.cols());
    }
    for (const auto& [j, b] : s.B_out) {
      const auto off = own + local_offset(s, j, -1);
      xi += b * u.segment(off, b.cols());
    }
    for (int e = 0; e < static_cast<int>(s.external.size()); ++e) {
      const auto& b = s.external[static_cast<std::size_t>(e)].B;
      xi += b * u.segment(own + local_offset(s, -1, e), b.cols());
    }
    if (!net.exogenous.empty()) xi += net.exogenous[static_cast<std::size_t>(s.id)];
    next.segment(r, n) = xi;
    r += n;
  }
  return next;
}

double stage_cost(const SubsystemModel& sub, const Eigen::VectorXd& x_i,
                  const Eigen::VectorXd& u_i) {
  if (x_i.size() != sub.state_dim() || u_i.size() != sub.input_dim())
    throw DimensionError("stage_cost: dimension mismatch for agent " + std::to_string(sub.id));
  const Eigen::VectorXd dx = x_i - sub.x_ref;
  const Eigen::VectorXd du = u_i - sub.u_ref;
  return dx.dot(sub.Q * dx) + du.dot(sub.R * du);
}

double global_stage_cost(const CoupledNetwork& net, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  const auto starts = global_starts(net);
  if (x.size() != net.state_dim() || u.size() != starts.back())
    throw DimensionError("global_stage_cost: dimension mismatch");
  double total = 0.0;
  Eigen::Index r = 0;
  for (const auto& s : net.subsystems) {
    total += stage_cost(s, x.segment(r, s.state_dim()),
                        u.segment(starts[static_cast<std::size_t>(s.id)], s.input_dim()));
    r += s.state_dim();
  }
  return total;
}

void require_member_set(const CoupledNetwork& net, const MemberSet& members) {
  if (members.empty()) throw std::invalid_argument("member set is empty");
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k] < 0 || members[k] >= net.size())
      throw std::invalid_argument("member " + std::to_string(members[k]) + " is not in the network");
    if (k > 0 && members[k] <= members[k - 1])
      throw std::invalid_argument("member set must be sorted and unique");
  }
}

MemberSet set_union(const MemberSet& a, const MemberSet& b) {
  MemberSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PlayerModel compose_player_matrices(const CoupledNetwork& net, const MemberSet& members) {
  require_member_set(net, members);
  PlayerModel pm;
  pm.agents = members;
  pm.layout = make_layout(net, members);
  const auto rows = state_offsets(net, members);

  std::vector<const Eigen::MatrixXd*> as;
  for (AgentId i : members) as.push_back(&net.agent(i).A);
  pm.A = block_diag(as);
  pm.B = Eigen::MatrixXd::Zero(pm.A.rows(), pm.layout.size());

  for (const auto& ch : pm.layout.channels) {
    const auto& owner = net.agent(ch.owner);
    const auto r_own = rows.at(ch.owner);
    if (ch.is_external()) {
      const auto& b = owner.external[static_cast<std::size_t>(ch.external_index)].B;
      pm.B.block(r_own, ch.offset, b.rows(), b.cols()) = b;
      continue;
    }
    const auto& b_out = owner.B_out.at(ch.target);
    pm.B.block(r_own, ch.offset, b_out.rows(), b_out.cols()) = b_out;
    if (auto it = rows.find(ch.target); it != rows.end()) {
      const auto& b_in = net.agent(ch.target).B_in.at(ch.owner);
      pm.B.block(it->second, ch.offset, b_in.rows(), b_in.cols()) = b_in;
    }
  }
  stack_weights(net, pm);
  return pm;
}

PlayerModel compose_merger_matrices(const CoupledNetwork& net, const MemberSet& p1,
                                    const MemberSet& p2) {
  require_member_set(net, p1);
  require_member_set(net, p2);
  MemberSet overlap;
  std::set_intersection(p1.begin(), p1.end(), p2.begin(), p2.end(), std::back_inserter(overlap));
  if (!overlap.empty()) throw std::invalid_argument("merger players overlap");

  const PlayerModel a = compose_player_matrices(net, p1);
  const PlayerModel b = compose_player_matrices(net, p2);

  PlayerModel pm;
  pm.agents = p1;
  pm.agents.insert(pm.agents.end(), p2.begin(), p2.end());
  pm.layout = make_layout(net, pm.agents);
  pm.A = block_diag({&a.A, &b.A});

  const auto nx1 = a.A.rows(), nu1 = a.B.cols();
  pm.B = Eigen::MatrixXd::Zero(pm.A.rows(), pm.layout.size());
  pm.B.topLeftCorner(nx1, nu1) = a.B;
  pm.B.bottomRightCorner(b.A.rows(), b.B.cols()) = b.B;

  // Cross blocks: rows of one player's agents, columns of the other player's
  // channels aimed at them.
  auto fill_cross = [&](const PlayerModel& rows_of, Eigen::Index row_base,
                        const PlayerModel& cols_of, Eigen::Index col_base) {
    const auto rows = state_offsets(net, rows_of.agents);
    for (const auto& ch : cols_of.layout.channels) {
      if (ch.is_external()) continue;
      auto it = rows.find(ch.target);
      if (it == rows.end()) continue;
      const auto& b_in = net.agent(ch.target).B_in.at(ch.owner);
      pm.B.block(row_base + it->second, col_base + ch.offset, b_in.rows(), b_in.cols()) = b_in;
    }
  };
  fill_cross(a, 0, b, nu1);   // Upsilon^(12)
  fill_cross(b, nx1, a, 0);   // Upsilon^(21)

  stack_weights(net, pm);
  return pm;
}

Eigen::VectorXd gather_states(const CoupledNetwork& net, const std::vector<AgentId>& agents,
                              const Eigen::VectorXd& x) {
  if (x.size() != net.state_dim()) throw DimensionError("gather_states: dimension mismatch");
  Eigen::Index n = 0;
  for (AgentId i : agents) n += net.agent(i).state_dim();
  Eigen::VectorXd out(n);
  Eigen::Index r = 0;
  for (AgentId i : agents) {
    const auto ni = net.agent(i).state_dim();
    out.segment(r, ni) = x.segment(net.state_offset(i), ni);
    r += ni;
  }
  return out;
}

}  // namespace coalmpc
