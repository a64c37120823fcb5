#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace difflab {

// Serial is the reference loop kept for testing; Parallel must produce
// bit-identical per-item results for any worker count.
enum class Execution { Parallel, Serial };

inline int resolve_workers(int requested) noexcept {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

// Calls fn(i) for i in [0, n). Items must be independent. An exception thrown
// by any item is rethrown after the loop; with several, the lowest index wins
// so the error does not depend on scheduling.
template <class Fn>
void for_each_index(std::size_t n, int workers, Execution exec, Fn&& fn) {
  if (exec == Execution::Serial || resolve_workers(workers) == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
  const int nw = resolve_workers(workers);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nw));
  std::vector<std::size_t> error_at(static_cast<std::size_t>(nw), n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(nw)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto w = static_cast<std::size_t>(omp_get_thread_num());
    if (errors[w]) continue;
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[w] = std::current_exception();
      error_at[w] = static_cast<std::size_t>(i);
    }
  }
  std::size_t best = n;
  std::exception_ptr first;
  for (std::size_t w = 0; w < errors.size(); ++w)
    if (errors[w] && error_at[w] < best) best = error_at[w], first = errors[w];
  if (first) std::rethrow_exception(first);
#else
  for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace difflab
