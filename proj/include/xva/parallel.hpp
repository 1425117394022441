// xva/parallel.hpp
//
// Copyright 2026 The xva Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XVA_PARALLEL_HPP_
#define XVA_PARALLEL_HPP_

#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace xva {

// Thread cap from XVEC_ANON_THREADS; 0 or unset means hardware concurrency.
inline unsigned thread_cap() {
  const char* env = std::getenv("XVEC_ANON_THREADS");
  long v = 0;
  if (env != nullptr) v = std::strtol(env, nullptr, 10);
  if (v > 0) return static_cast<unsigned>(v);
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs f(i) for i in [0, n). Work items must be independent and write only
// to their own output slot; the split is static and contiguous, so results
// are identical to the serial loop regardless of the thread count. The first
// exception thrown by any worker is rethrown after all threads join.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  unsigned threads = thread_cap();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  if (threads > n) threads = static_cast<unsigned>(n);

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t begin = static_cast<std::size_t>(t) * chunk;
    std::size_t end = begin + chunk < n ? begin + chunk : n;
    if (begin >= end) break;
    workers.emplace_back([&, t, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace xva

#endif  // XVA_PARALLEL_HPP_
