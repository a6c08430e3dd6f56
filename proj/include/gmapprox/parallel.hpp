#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gmapprox {

// Runs f(0..n-1) on up to `workers` threads. Each index writes its own slot, so results
// do not depend on scheduling. The exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(size_t n, int workers, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    size_t k = std::min<size_t>(static_cast<size_t>(workers), n);
    for (size_t w = 0; w < k; ++w)
      pool.emplace_back([&] {
        for (size_t i = next++; i < n; i = next++) run(i);
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gmapprox
