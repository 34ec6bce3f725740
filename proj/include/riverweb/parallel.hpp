#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace riverweb {

/// Worker count: RIVERWEB_THREADS if set and positive, else hardware concurrency.
inline unsigned resolve_threads(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RIVERWEB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Calls fn(i) for i in [0, count) on `threads` workers. Work items are claimed
/// dynamically, so fn must write its result to slot i; results then do not
/// depend on scheduling. The first exception thrown by any item is rethrown.
template <typename Fn>
void parallel_for(std::int64_t count, unsigned threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = static_cast<unsigned>(std::min<std::int64_t>(threads, count));
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// parallel_for that collects fn(i) into an index-ordered vector.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::int64_t count, unsigned threads, Fn&& fn) {
  std::vector<T> out(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](std::int64_t i) { out[static_cast<std::size_t>(i)] = fn(i); });
  return out;
}

}  // namespace riverweb
