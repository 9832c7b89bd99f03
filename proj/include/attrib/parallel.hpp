/*
 * Copyright 2026 The attrib-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Execution policy shared by the data-parallel kernels. Every kernel accepts
// an `Exec` argument: kSerial runs the plain reference loop, kParallel runs
// the same body under OpenMP. Kernels write per-index results and reduce them
// in index order afterwards, so both policies produce bit-identical output.

#ifndef ATTRIB_PARALLEL_HPP_
#define ATTRIB_PARALLEL_HPP_

#include <cstdint>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace attrib {

enum class Exec { kSerial, kParallel };

inline int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void SetThreads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Calls fn(i) for i in [0, n). Exceptions thrown by fn are captured and the
// first one is rethrown on the calling thread.
template <typename Fn>
void ForEachIndex(Exec exec, std::int64_t n, Fn&& fn) {
  if (exec == Exec::kSerial || n < 2) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mu;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace attrib

#endif  // ATTRIB_PARALLEL_HPP_
