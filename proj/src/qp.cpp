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

#include "coalmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace coalmpc {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kEpsMax = 1e-3;
constexpr int kMaxBacktracks = 60;
constexpr int kNewtonBurst = 10;

Eigen::VectorXd project(const BoxQp& qp, const Eigen::VectorXd& x) {
  return x.cwiseMax(qp.lower).cwiseMin(qp.upper);
}

double residual_scale(const BoxQp& qp) {
  return qp.size() == 0 ? 1.0 : std::max(1.0, qp.g.cwiseAbs().maxCoeff());
}

// Solves H_FF d = rhs with one round of iterative refinement.
bool solve_free(const Eigen::MatrixXd& hff, const Eigen::VectorXd& rhs, Eigen::VectorXd& d) {
  Eigen::LLT<Eigen::MatrixXd> llt(hff);
  if (llt.info() != Eigen::Success) return false;
  d = llt.solve(rhs);
  const Eigen::VectorXd r = rhs - hff * d;
  d += llt.solve(r);
  return true;
}

// Gathers the principal submatrix / subvector over `idx`.
Eigen::MatrixXd sub_matrix(const Eigen::MatrixXd& h, const std::vector<Eigen::Index>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index b = 0; b < k; ++b)
    for (Eigen::Index a = 0; a < k; ++a)
      out(a, b) = h(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return out;
}

enum class Status : char { free, lower, upper };

// Primal-dual active set iteration: fix the active variables at their bounds,
// solve for the rest, then move variables between the sets according to
// primal feasibility and multiplier signs. Converges in a few steps on well
// behaved problems but may cycle; returns false in that case.
bool primal_dual_active_set(const BoxQp& qp, double tol, Eigen::VectorXd& x, long& iterations) {
  const Eigen::Index n = qp.size();
  const double thresh = 1e-3 * tol * residual_scale(qp);
  std::vector<Status> status(static_cast<std::size_t>(n), Status::free);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) <= qp.lower(i)) status[static_cast<std::size_t>(i)] = Status::lower;
    else if (x(i) >= qp.upper(i)) status[static_cast<std::size_t>(i)] = Status::upper;
  }

  std::vector<std::vector<Status>> seen;
  std::vector<Eigen::Index> free_idx;
  constexpr int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    ++iterations;
    Eigen::VectorXd trial(n);
    free_idx.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      switch (status[static_cast<std::size_t>(i)]) {
        case Status::lower: trial(i) = qp.lower(i); break;
        case Status::upper: trial(i) = qp.upper(i); break;
        case Status::free: trial(i) = 0.0; free_idx.push_back(i); break;
      }
    }
    if (!free_idx.empty()) {
      const Eigen::VectorXd rhs_full = -(qp.g + qp.H * trial);
      Eigen::VectorXd rhs(static_cast<Eigen::Index>(free_idx.size()));
      for (std::size_t a = 0; a < free_idx.size(); ++a) rhs(static_cast<Eigen::Index>(a)) = rhs_full(free_idx[a]);
      Eigen::VectorXd xf;
      if (!solve_free(sub_matrix(qp.H, free_idx), rhs, xf)) return false;
      for (std::size_t a = 0; a < free_idx.size(); ++a) trial(free_idx[a]) = xf(static_cast<Eigen::Index>(a));
    }
    const Eigen::VectorXd grad = qp.H * trial + qp.g;

    std::vector<Status> next = status;
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& st = next[static_cast<std::size_t>(i)];
      if (st == Status::free) {
        if (trial(i) < qp.lower(i) - thresh) st = Status::lower;
        else if (trial(i) > qp.upper(i) + thresh) st = Status::upper;
      } else if (st == Status::lower) {
        if (grad(i) < -thresh) st = Status::free;
      } else if (grad(i) > thresh) {
        st = Status::free;
      }
      changed |= st != status[static_cast<std::size_t>(i)];
    }
    if (!changed) {
      x = project(qp, trial);
      return true;
    }
    seen.push_back(std::move(status));
    if (std::find(seen.begin(), seen.end(), next) != seen.end()) return false;
    status = std::move(next);
  }
  return false;
}

// One projected Newton iteration (Bertsekas) with Armijo backtracking along
// the projection arc. Returns false when no progress is possible.
bool projected_newton_step(const BoxQp& qp, Eigen::VectorXd& x) {
  const Eigen::Index n = qp.size();
  const Eigen::VectorXd grad = qp.H * x + qp.g;
  const double w = (x - project(qp, x - grad)).cwiseAbs().maxCoeff();

  // Variables close to a bound with the gradient pushing outward take a
  // scaled gradient step; the rest take a reduced Newton step.
  const double eps = std::min(kEpsMax, w);
  std::vector<Eigen::Index> free_idx, bound_idx;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool at_lower = x(i) - qp.lower(i) <= eps && grad(i) > 0.0;
    const bool at_upper = qp.upper(i) - x(i) <= eps && grad(i) < 0.0;
    (at_lower || at_upper ? bound_idx : free_idx).push_back(i);
  }

  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  if (!free_idx.empty()) {
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    Eigen::VectorXd gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) gf(a) = grad(free_idx[static_cast<std::size_t>(a)]);
    Eigen::VectorXd df;
    if (!solve_free(sub_matrix(qp.H, free_idx), -gf, df)) df = -gf;
    for (Eigen::Index a = 0; a < nf; ++a) d(free_idx[static_cast<std::size_t>(a)]) = df(a);
  }
  for (Eigen::Index i : bound_idx) d(i) = -grad(i) / std::max(qp.H(i, i), 1e-300);

  double free_slope = 0.0;
  for (Eigen::Index i : free_idx) free_slope -= grad(i) * d(i);

  double alpha = 1.0;
  for (int bt = 0; bt < kMaxBacktracks; ++bt, alpha *= 0.5) {
    const Eigen::VectorXd next = project(qp, x + alpha * d);
    const Eigen::VectorXd step = next - x;
    const double decrease = -(grad.dot(step) + 0.5 * step.dot(qp.H * step));
    double required = alpha * free_slope;
    for (Eigen::Index i : bound_idx) required += grad(i) * (x(i) - next(i));
    if (decrease >= kArmijo * required) {
      if (next == x) return false;
      x = next;
      return true;
    }
  }
  return false;
}

}  // namespace

double qp_objective(const BoxQp& qp, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(qp.H * x) + qp.g.dot(x);
}

double kkt_residual(const BoxQp& qp, const Eigen::VectorXd& x) {
  if (qp.size() == 0) return 0.0;
  const Eigen::VectorXd grad = qp.H * x + qp.g;
  return (x - project(qp, x - grad)).cwiseAbs().maxCoeff() / residual_scale(qp);
}

QpResult solve_box_qp(const BoxQp& qp, const QpOptions& options) {
  const Eigen::Index n = qp.size();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.lower.size() != n || qp.upper.size() != n)
    throw std::invalid_argument("solve_box_qp: dimension mismatch");
  if ((qp.lower.array() > qp.upper.array()).any())
    throw std::invalid_argument("solve_box_qp: infeasible bounds (lower > upper)");

  QpResult result;
  if (n == 0) {
    result.x = Eigen::VectorXd(0);
    return result;
  }
  const long cap = options.max_iterations > 0
                       ? options.max_iterations
                       : std::max<long>(100, 10 * static_cast<long>(n) * static_cast<long>(n));

  // Start from the projected unconstrained minimiser.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  {
    Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
    if (llt.info() == Eigen::Success) x = llt.solve(-qp.g);
    x = project(qp, x);
  }

  // Alternate primal-dual active set attempts with short bursts of
  // projected Newton steps; each burst moves the iterate (and hence the next
  // starting active set) closer to the solution.
  long it = 0;
  bool stalled = false;
  while (it < cap && !stalled) {
    Eigen::VectorXd trial = x;
    if (primal_dual_active_set(qp, options.tolerance, trial, it) &&
        kkt_residual(qp, trial) <= options.tolerance) {
      x = trial;
      break;
    }
    for (int burst = 0; burst < kNewtonBurst && it < cap; ++burst, ++it) {
      if (kkt_residual(qp, x) <= options.tolerance) break;
      if (!projected_newton_step(qp, x)) {
        stalled = true;
        break;
      }
    }
    if (kkt_residual(qp, x) <= options.tolerance) break;
  }

  result.x = x;
  result.iterations = it;
  result.objective = qp_objective(qp, x);
  result.kkt_residual = kkt_residual(qp, x);
  if (result.kkt_residual > options.tolerance)
    throw SolverError("solve_box_qp: no convergence after " + std::to_string(it) +
                          " iterations (residual " + std::to_string(result.kkt_residual) + ")",
                      x);
  return result;
}

}  // namespace coalmpc
