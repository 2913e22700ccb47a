// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "compsim/kernels.hpp"

namespace compsim {

double exponential_lr(double lr_start, double lr_final, long iteration, long iterations) {
  if (!(lr_start > 0.0) || !(lr_final > 0.0) || !(lr_final < lr_start))
    throw std::invalid_argument("exponential_lr: need 0 < lr_final < lr_start");
  if (iterations <= 0) throw std::invalid_argument("exponential_lr: iterations must be positive");
  const double progress = static_cast<double>(iteration) / static_cast<double>(iterations);
  return lr_start * std::pow(lr_final / lr_start, progress);
}

template <typename Real>
void AdamState<Real>::update(std::span<Real> params, std::span<const Real> grads, double lr,
                             const AdamConfig& config) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw std::invalid_argument("AdamState::update: size mismatch");
  ++step_;
  const auto c = kernels::adam_coefficients<Real>(lr, config.beta1, config.beta2, config.eps, step_);
  kernels::adam_update(params, grads, m_, v_, c);
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace compsim
