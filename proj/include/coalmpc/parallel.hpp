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

#ifndef COALMPC_PARALLEL_HPP
#define COALMPC_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace coalmpc {

/// How independent per-player / per-pair work is dispatched. `serial` is the
/// reference path; `parallel` must produce bit-identical results.
enum class Execution { serial, parallel };

namespace detail {
void parallel_for_impl(std::size_t count,
                       const std::function<void(std::size_t)>& body,
                       std::vector<std::exception_ptr>& errors);
}  // namespace detail

/// Calls fn(i) for i in [0, count). Exceptions are collected per index and
/// the lowest-index one is rethrown after all work finishes, so failure
/// reporting does not depend on scheduling.
template <typename Fn>
void for_each_index(Execution exec, std::size_t count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    detail::parallel_for_impl(count, std::function<void(std::size_t)>(fn),
                              errors);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace coalmpc

#endif  // COALMPC_PARALLEL_HPP
