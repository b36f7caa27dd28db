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


// Serial versus OpenMP execution of the closed loop on a grid.
//
//   bench_modes [rows] [cols] [steps]

#include "coalmpc/scenario.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace coalmpc;

namespace {

double seconds_of(const CoupledNetwork& net, const Eigen::VectorXd& x0, const SimConfig& cfg,
                  SimResult& out) {
  const auto t0 = std::chrono::steady_clock::now();
  out = run(net, x0, cfg);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int rows = argc > 1 ? std::atoi(argv[1]) : 4;
  const int cols = argc > 2 ? std::atoi(argv[2]) : 4;
  const int steps = argc > 3 ? std::atoi(argv[3]) : 100;
  const auto spec = grid_spec(rows, cols);
  const auto net = build_network(spec);
  const auto x0 = initial_state(spec);

  std::printf("grid %dx%d, %d steps, %d OpenMP threads\n", rows, cols, steps, omp_get_max_threads());
  std::printf("%-8s %12s %12s %8s %s\n", "mode", "serial[s]", "parallel[s]", "speedup", "identical");
  for (Mode mode : {Mode::cen, Mode::dec, Mode::coo, Mode::cir}) {
    SimConfig cfg;
    cfg.mode = mode;
    cfg.steps = steps;
    SimResult a, b;
    cfg.execution = Execution::serial;
    const double ts = seconds_of(net, x0, cfg, a);
    cfg.execution = Execution::parallel;
    const double tp = seconds_of(net, x0, cfg, b);
    const bool same = a.states == b.states && a.accumulated_total_cost == b.accumulated_total_cost;
    std::printf("%-8s %12.3f %12.3f %8.2f %s\n", to_string(mode), ts, tp, ts / tp, same ? "yes" : "NO");
  }
}
