#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace eift {

/// Calls fn(i, state) for every i in [0, n) on up to `workers` threads,
/// where each thread owns one `state` built by make_state(). The first
/// exception thrown is rethrown after all threads join.
template <class MakeState, class F>
void parallel_for_with(std::size_t n, int workers, MakeState&& make_state, F&& fn) {
  const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    auto state = make_state();
    for (std::size_t i = 0; i < n; ++i) fn(i, state);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        auto state = make_state();
        for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i, state);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

template <class F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  parallel_for_with(n, workers, [] { return 0; }, [&](std::size_t i, int&) { fn(i); });
}

}  // namespace eift
