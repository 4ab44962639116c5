#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bermudan {

/// Runs body(begin, end) over [0, n) split into at most `workers` contiguous
/// chunks. Chunking is a pure function of (n, workers); callers that write
/// into per-index slots get results independent of the worker count.
/// The first exception thrown by any chunk is rethrown.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t chunks = std::clamp<std::size_t>(workers, 1, n);
  if (chunks == 1) {
    body(0, n);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> threads;
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = n * c / chunks;
      const std::size_t end = n * (c + 1) / chunks;
      threads.emplace_back([&, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Pairwise summation; the result depends only on the input order.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace bermudan
