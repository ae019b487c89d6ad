#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace bubbleopt::parallel {

/// Number of worker threads used by path sweeps. Defaults to the hardware
/// concurrency; results never depend on this value.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Paths per work unit. Fixed so the reduction tree is independent of the
/// number of workers.
inline constexpr std::size_t kChunkSize = 2048;

/// Evaluates `fn(begin, end)` over fixed-size chunks of [0, n) on the worker
/// pool and returns the per-chunk results in chunk order.
template <typename Fn>
auto map_chunks(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}, std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}, std::size_t{}));
  const std::size_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<Result> results(n_chunks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        const std::size_t begin = c * kChunkSize;
        const std::size_t end = std::min(n, begin + kChunkSize);
        results[c] = fn(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(thread_count(), n_chunks));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Pairwise (tree) reduction in index order.
template <typename T, typename Merge>
T pairwise_reduce(std::vector<T> items, Merge&& merge) {
  if (items.empty()) return T{};
  while (items.size() > 1) {
    std::vector<T> next;
    next.reserve((items.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < items.size(); i += 2) next.push_back(merge(items[i], items[i + 1]));
    if (items.size() % 2 == 1) next.push_back(std::move(items.back()));
    items = std::move(next);
  }
  return std::move(items.front());
}

}  // namespace bubbleopt::parallel
