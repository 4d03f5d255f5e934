#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace mglue {

enum class Execution { serial, parallel };

// Applies MGLUE_THREADS (if set) to the OpenMP runtime; returns the thread count in use.
int configure_threads();
int thread_count();

// Independent RNG stream for task `index` of a run seeded with `seed`.
std::mt19937_64 task_rng(std::uint64_t seed, std::uint64_t index);

// Runs body(i) for i in [0, n).  Bodies must write only to slot i so the
// result does not depend on scheduling.
template <class Body>
void for_each_index(std::size_t n, Execution ex, Body&& body) {
  if (ex == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace mglue
