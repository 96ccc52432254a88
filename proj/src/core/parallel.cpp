#include "parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

namespace brainshift {

namespace {
constexpr std::size_t kChunk = 16384;
}

int thread_count() {
  if (const char *env = std::getenv("BRAINSHIFT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1)
      return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_tasks(const std::vector<std::function<void()>> &tasks) {
  const int workers =
      std::min<int>(thread_count(), static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (const auto &t : tasks)
      t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size())
          return;
        tasks[i]();
      }
    });
  for (auto &t : pool)
    t.join();
}

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)> &body) {
  const std::size_t chunks = chunk_count(n);
  std::vector<std::function<void()>> tasks;
  tasks.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    tasks.push_back([=, &body] { body(begin, end, c); });
  }
  parallel_tasks(tasks);
}

} // namespace brainshift
