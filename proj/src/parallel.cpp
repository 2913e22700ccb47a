// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/parallel.hpp"

#include <cstdlib>
#include <string>

namespace compsim {

namespace {

std::atomic<std::size_t>& configured() {
  static std::atomic<std::size_t> n{[] {
    if (const char* env = std::getenv("COMPSIM_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }()};
  return n;
}

}  // namespace

std::size_t worker_count() { return configured().load(std::memory_order_relaxed); }

void set_worker_count(std::size_t n) { configured().store(std::max<std::size_t>(1, n), std::memory_order_relaxed); }

}  // namespace compsim
