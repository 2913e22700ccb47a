// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

namespace compsim {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// lr(i) = lr_start * (lr_final / lr_start)^(i / iterations). Throws
// std::invalid_argument unless 0 < lr_final < lr_start and iterations > 0.
double exponential_lr(double lr_start, double lr_final, long iteration, long iterations);

// First and second moment buffers for one parameter group.
template <typename Real>
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t size) : m_(size, Real(0)), v_(size, Real(0)) {}

  std::size_t size() const { return m_.size(); }
  long step() const { return step_; }

  // One Adam step through the active kernel. Throws std::invalid_argument on
  // size mismatch.
  void update(std::span<Real> params, std::span<const Real> grads, double lr, const AdamConfig& config = {});

 private:
  std::vector<Real> m_;
  std::vector<Real> v_;
  long step_ = 0;
};

}  // namespace compsim
