// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace compsim {

// Worker count for parallel loops: COMPSIM_THREADS if set, otherwise the
// hardware concurrency.
std::size_t worker_count();
void set_worker_count(std::size_t n);

// Calls body(i) for every i in [begin, end). Work is handed out in fixed-size
// blocks; callers must not depend on execution order.
template <typename Body>
void parallel_for(std::size_t begin, std::size_t end, Body&& body, std::size_t block = 16) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  const std::size_t workers = std::min(worker_count(), (n + block - 1) / block);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&]() {
    try {
      for (;;) {
        const std::size_t start = next.fetch_add(block);
        if (start >= end) break;
        const std::size_t stop = std::min(end, start + block);
        for (std::size_t i = start; i < stop; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(end);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run);
  run();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace compsim
