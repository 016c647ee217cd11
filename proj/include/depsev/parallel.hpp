#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace depsev {

// Serial is the reference path; Parallel must produce identical results.
enum class Execution { Serial, Parallel };

int max_threads();

/// Runs f(i) for i in [0, n). The first exception thrown by any iteration is
/// rethrown after the loop.
template <typename F>
void for_each_index(std::size_t n, Execution exec, F&& f) {
  if (exec == Execution::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace depsev
