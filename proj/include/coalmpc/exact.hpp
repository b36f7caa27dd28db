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

#ifndef COALMPC_EXACT_HPP
#define COALMPC_EXACT_HPP

namespace coalmpc {

/// Sign (-1, 0, +1) of the real number a + b - c, evaluated without rounding
/// error (error-free transformations; assumes no overflow).
int exact_sign_sum_minus(double a, double b, double c);

}  // namespace coalmpc

#endif  // COALMPC_EXACT_HPP
