// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "compsim/kernels.hpp"

namespace compsim::kernels::scalar {

namespace {

template <typename Real>
void adam_impl(Real* p, const Real* g, Real* m, Real* v, std::size_t n, const AdamCoefficients<Real>& c) {
  for (std::size_t i = 0; i < n; ++i) {
    const Real gi = g[i];
    const Real mi = c.beta1 * m[i] + c.one_minus_beta1 * gi;
    const Real vi = c.beta2 * v[i] + c.one_minus_beta2 * (gi * gi);
    m[i] = mi;
    v[i] = vi;
    const Real m_hat = mi / c.bias_correction1;
    const Real v_hat = vi / c.bias_correction2;
    const Real denom = std::sqrt(v_hat) + c.eps;
    const Real step = (c.lr * m_hat) / denom;
    p[i] = p[i] - step;
  }
}

}  // namespace

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoefficients<float>& c) {
  adam_impl(p, g, m, v, n, c);
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamCoefficients<double>& c) {
  adam_impl(p, g, m, v, n, c);
}

double dot(const float* a, const float* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

}  // namespace compsim::kernels::scalar
