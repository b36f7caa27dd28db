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

#include "coalmpc/exact.hpp"

#include <array>

namespace coalmpc {

namespace {

// Knuth's TwoSum: s + e == a + b exactly.
void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  e = (a - av) + (b - bv);
}

}  // namespace

int exact_sign_sum_minus(double a, double b, double c) {
  // Expansion of a + b, then grow it by -c. Components come out in
  // increasing magnitude and are nonoverlapping, so the most significant
  // nonzero one carries the sign.
  std::array<double, 3> h{};
  double s = 0.0;
  two_sum(a, b, s, h[0]);
  double q = -c;
  two_sum(q, h[0], q, h[0]);
  two_sum(q, s, q, h[1]);
  h[2] = q;
  for (int i = 2; i >= 0; --i) {
    if (h[i] > 0.0) return 1;
    if (h[i] < 0.0) return -1;
  }
  return 0;
}

}  // namespace coalmpc
