#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace mobivital {

// Execution policy for the data-parallel kernels. Serial is the reference
// path; Parallel must produce bit-identical results.
enum class Exec { Serial, Parallel };

// Runs fn(i) for i in [0, n). Each index writes only its own output slot,
// so the result is independent of the schedule. The exception raised for the
// lowest index is rethrown after the loop.
template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::size_t first_index = n;
  std::mutex guard;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (static_cast<std::size_t>(i) < first_index) {
        first_index = static_cast<std::size_t>(i);
        first_error = std::current_exception();
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mobivital
