#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace spdelab {

// Runs fn(begin, end) over [0, count) split into fixed-size chunks.
// Chunk boundaries do not depend on the thread count, so workers that write
// only into chunk-indexed slots produce identical results for any number of
// threads.  The first exception thrown by a worker is rethrown.
inline void parallel_chunks(std::size_t count, std::size_t chunk_size,
                            unsigned threads,
                            const std::function<void(std::size_t chunk_index,
                                                     std::size_t begin,
                                                     std::size_t end)>& fn) {
  if (count == 0) return;
  chunk_size = std::max<std::size_t>(1, chunk_size);
  const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
  threads = std::max(1u, threads);

  if (threads == 1 || n_chunks == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
    }
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
  for (unsigned w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t c = w; c < n_chunks; c += n_workers) {
        try {
          fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::size_t chunk_count(std::size_t count, std::size_t chunk_size) {
  chunk_size = std::max<std::size_t>(1, chunk_size);
  return count == 0 ? 0 : (count + chunk_size - 1) / chunk_size;
}

}  // namespace spdelab
