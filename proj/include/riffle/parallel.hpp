#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace riffle {

/// Runs fn(chunk) for chunk in [0, chunks) on up to `threads` workers.
///
/// Work is identified by chunk index only, so callers that derive their
/// random streams and output slots from the index get results that are
/// independent of the worker count.
template <typename Fn>
void for_each_chunk(std::size_t chunks, unsigned threads, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(std::max(1U, threads), std::max<std::size_t>(chunks, 1)));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = chunks;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Fixed chunking of `total` items; the layout depends only on `total`.
struct ChunkLayout {
  std::size_t total;
  std::size_t chunk_size;

  std::size_t chunks() const { return (total + chunk_size - 1) / chunk_size; }
  std::size_t begin(std::size_t c) const { return c * chunk_size; }
  std::size_t end(std::size_t c) const { return std::min(total, (c + 1) * chunk_size); }
};

}  // namespace riffle
