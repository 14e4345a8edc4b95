#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "actalign/error.hpp"

namespace actalign {

inline constexpr const char* kWorkersEnvVar = "ACTALIGN_WORKERS";

/// Worker count: ACTALIGN_WORKERS wins, then `requested`, then the number of
/// hardware threads. Always at least 1.
inline std::size_t resolve_worker_count(std::size_t requested = 0) {
  if (const char* env = std::getenv(kWorkersEnvVar); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) {
      throw ValidationError(kWorkersEnvVar, "", std::string("expected a positive integer, got '") + env + "'");
    }
    return static_cast<std::size_t>(v);
  }
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Indices are handed
/// out dynamically; callers write results into slot i so the merged output
/// does not depend on scheduling. The first exception thrown is rethrown
/// after all threads join, and remaining indices are skipped.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace actalign
