#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gmdeb {

//! Runs task(i) for i in [0, count) on up to `width` threads. Tasks must
//! write only to their own slot; the first exception escaping a task is
//! rethrown after all workers join.
template <class Task>
void parallel_for(std::size_t count, int width, Task&& task) {
  if (count == 0) {
    return;
  }
  const auto workers =
      static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(width, 1, static_cast<std::ptrdiff_t>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            task(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
              error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace gmdeb
