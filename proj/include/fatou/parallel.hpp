#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace fatou {

inline int default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries
/// depend only on n and chunk, never on the worker count, so callers that
/// merge per-chunk results in chunk order get worker-independent output.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, int workers, Fn&& fn) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(chunks)));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t c; (c = next.fetch_add(1)) < chunks;)
          fn(c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = chunks;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace fatou

namespace fatou {

/// Reduces fn(begin, end) -> T over fixed chunks and merges the partial
/// results in chunk order, so the outcome does not depend on scheduling.
template <class T, class Fn, class Merge>
T chunked_reduce(std::size_t n, std::size_t chunk, int workers, T init, Fn&& fn, Merge&& merge) {
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<std::optional<T>> parts(chunks);
  parallel_chunks(n, chunk, workers,
                  [&](std::size_t begin, std::size_t end) { parts[begin / chunk].emplace(fn(begin, end)); });
  for (auto& p : parts) merge(init, std::move(*p));
  return init;
}

}  // namespace fatou
