#include "mglue/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace mglue {

int configure_threads() {
  if (const char* env = std::getenv("MGLUE_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
    }
  }
  return thread_count();
}

int thread_count() { return omp_get_max_threads(); }

std::mt19937_64 task_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace mglue
