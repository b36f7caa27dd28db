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


// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical code.

#ifndef COALMPC_TESTS_ORACLES_HPP
#define COALMPC_TESTS_ORACLES_HPP

#include "coalmpc/mpc.hpp"
#include "coalmpc/qp.hpp"
#include "coalmpc/system_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <tuple>
#include <vector>

namespace oracle {

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// Accelerated projected gradient (FISTA with adaptive restart) on a box QP.
/// Runs until the scaled projected-gradient residual is below 1e-11.
inline Eigen::VectorXd projected_gradient(const coalmpc::BoxQp& qp, long max_iter = 2000000) {
  const Eigen::Index n = qp.g.size();
  double L = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) row += std::abs(qp.H(i, j));
    L = std::max(L, row);  // Gershgorin bound on the largest eigenvalue
  }
  const double step = 1.0 / L;
  auto project = [&](std::vector<double>& v) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = clamp(v[i], qp.lower(i), qp.upper(i));
  };
  auto grad = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = qp.g(i);
      for (Eigen::Index j = 0; j < n; ++j) s += qp.H(i, j) * v[j];
      out[i] = s;
    }
  };
  const double scale = std::max(1.0, qp.g.cwiseAbs().maxCoeff());
  auto stationary = [&](const std::vector<double>& v, std::vector<double>& tmp) {
    grad(v, tmp);
    double r = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      r = std::max(r, std::abs(v[i] - clamp(v[i] - tmp[i], qp.lower(i), qp.upper(i))));
    return r <= 1e-11 * scale;
  };

  std::vector<double> x(n, 0.0), y(n), xn(n), gy(n), scratch(n);
  project(x);
  y = x;
  double t = 1.0;
  for (long it = 0; it < max_iter; ++it) {
    if (it % 16 == 0 && stationary(x, scratch)) break;
    grad(y, gy);
    for (Eigen::Index i = 0; i < n; ++i) xn[i] = y[i] - step * gy[i];
    project(xn);
    // Gradient-based restart: drop momentum when it points uphill.
    double dir = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) dir += (y[i] - xn[i]) * (xn[i] - x[i]);
    if (dir > 0.0) {
      t = 1.0;
      y = xn;
      x = xn;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (Eigen::Index i = 0; i < n; ++i) y[i] = xn[i] + (t - 1.0) / tn * (xn[i] - x[i]);
    x = xn;
    t = tn;
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = x[i];
  return out;
}

inline double quad_form(const Eigen::MatrixXd& W, const Eigen::VectorXd& d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    for (Eigen::Index j = 0; j < d.size(); ++j) s += d(i) * W(i, j) * d(j);
  return s;
}

/// Stage cost evaluated entry by entry.
inline double stage_cost(const coalmpc::SubsystemModel& sub, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  return quad_form(sub.Q, x - sub.x_ref) + quad_form(sub.R, u - sub.u_ref);
}

/// Horizon cost by forward simulation with explicit loops. `u` stacks
/// u(0) .. u(N-1).
inline double simulate_and_sum(const coalmpc::HorizonProblem& p, const Eigen::VectorXd& u) {
  const Eigen::Index nx = p.A.rows(), nu = p.B.cols();
  std::vector<double> x(p.x0.data(), p.x0.data() + nx), xn(nx);
  double cost = 0.0;
  for (int t = 0; t <= p.horizon; ++t) {
    Eigen::VectorXd dx(nx);
    for (Eigen::Index i = 0; i < nx; ++i) dx(i) = x[i] - p.x_ref(i);
    cost += quad_form(p.Q, dx);
    if (t == p.horizon) break;
    Eigen::VectorXd du(nu);
    for (Eigen::Index i = 0; i < nu; ++i) du(i) = u(t * nu + i) - p.u_ref(i);
    cost += quad_form(p.R, du);
    for (Eigen::Index i = 0; i < nx; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < nx; ++j) s += p.A(i, j) * x[j];
      for (Eigen::Index j = 0; j < nu; ++j) s += p.B(i, j) * u(t * nu + j);
      xn[i] = s;
    }
    x = xn;
  }
  return cost;
}

/// Two-player Shapley value as the average marginal contribution over both
/// join orders of the characteristic function v({1}) = j1, v({2}) = j2,
/// v({1,2}) = j12.
inline std::array<double, 2> shapley_by_orderings(double j1, double j2, double j12) {
  auto v = [&](int mask) {
    switch (mask) {
      case 1: return j1;
      case 2: return j2;
      case 3: return j12;
      default: return 0.0;
    }
  };
  std::array<int, 2> order{0, 1};
  std::array<double, 2> phi{0.0, 0.0};
  int count = 0;
  do {
    int mask = 0;
    for (int p : order) {
      phi[p] += v(mask | (1 << p)) - v(mask);
      mask |= 1 << p;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& p : phi) p /= count;
  return phi;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index n, double shift) {
  const Eigen::MatrixXd L = random_matrix(rng, n, n);
  Eigen::MatrixXd S = L * L.transpose();
  S += shift * Eigen::MatrixXd::Identity(n, n);
  return 0.5 * (S + S.transpose());
}

/// Random valid network: 2..max_agents agents, state dims 1..3, channel
/// widths 1..2, random symmetric couplings, some external channels and some
/// infinite bounds.
inline coalmpc::CoupledNetwork random_network(std::mt19937_64& rng, int max_agents = 6) {
  std::uniform_int_distribution<int> agents_d(2, max_agents), dim_d(1, 3), width_d(1, 2);
  std::bernoulli_distribution coin(0.5), rare(0.25);
  const int M = agents_d(rng);
  coalmpc::CoupledNetwork net;
  net.subsystems.resize(M);
  std::vector<int> n(M);
  for (int i = 0; i < M; ++i) n[i] = dim_d(rng);

  std::map<std::pair<int, int>, int> width;  // directed channel i -> j
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j)
      if (j == i + 1 || rare(rng)) {  // chain keeps the graph connected
        width[{i, j}] = width_d(rng);
        width[{j, i}] = width_d(rng);
      }

  for (int i = 0; i < M; ++i) {
    auto& s = net.subsystems[i];
    s.id = i;
    s.A = random_matrix(rng, n[i], n[i], 0.6);
    for (const auto& [key, w] : width) {
      if (key.first == i) s.B_out[key.second] = random_matrix(rng, n[i], w);
      if (key.second == i) s.B_in[key.first] = random_matrix(rng, n[i], w);
    }
    if (rare(rng)) s.external.push_back({"ext", random_matrix(rng, n[i], width_d(rng))});
    const Eigen::Index m = s.input_dim();
    s.Q = random_psd(rng, n[i], coin(rng) ? 0.0 : 0.5);
    s.R = random_psd(rng, m, 0.5);
    s.x_ref = random_matrix(rng, n[i], 1);
    s.u_ref = random_matrix(rng, m, 1, 0.2);
    s.u_min.resize(m);
    s.u_max.resize(m);
    for (Eigen::Index c = 0; c < m; ++c) {
      s.u_min(c) = rare(rng) ? -std::numeric_limits<double>::infinity() : s.u_ref(c) - 0.5;
      s.u_max(c) = rare(rng) ? std::numeric_limits<double>::infinity() : s.u_ref(c) + 0.5;
    }
  }
  return net;
}

}  // namespace oracle

#endif  // COALMPC_TESTS_ORACLES_HPP
