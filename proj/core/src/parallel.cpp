#include "mvrecon/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mvr {

namespace {

int initial_thread_count() {
  if (const char* env = std::getenv("MVRECON_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::atomic<int> g_threads{initial_thread_count()};

}  // namespace

int thread_count() { return g_threads.load(); }

void set_thread_count(int n) {
  if (n > 0) g_threads.store(n);
}

std::int64_t chunk_count(std::int64_t n, std::int64_t chunk) {
  if (n <= 0) return 0;
  return (n + chunk - 1) / chunk;
}

void parallel_chunks(std::int64_t n, std::int64_t chunk,
                     const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn) {
  const std::int64_t nchunks = chunk_count(n, chunk);
  if (nchunks == 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), nchunks));
  if (workers <= 1) {
    for (std::int64_t c = 0; c < nchunks; ++c) {
      fn(c * chunk, std::min(n, (c + 1) * chunk), c);
    }
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (;;) {
      std::int64_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      fn(c * chunk, std::min(n, (c + 1) * chunk), c);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

}  // namespace mvr
