#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace rmgd {

inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

// Runs fn(begin, end) over fixed-size chunks of [0, n).  Chunk boundaries do not
// depend on the thread count, so per-chunk results are reproducible; callers
// needing a reduction should write per-chunk partials and combine them in chunk
// order afterwards.
inline void parallel_chunks(std::size_t n, std::size_t chunk, int threads,
                            const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  unsigned nthreads = resolve_threads(threads);
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  if (nthreads <= 1 || nchunks <= 1) {
    for (std::size_t c = 0; c < nchunks; ++c)
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  unsigned spawn = std::min<std::size_t>(nthreads, nchunks);
  pool.reserve(spawn);
  for (unsigned i = 0; i + 1 < spawn; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace rmgd
