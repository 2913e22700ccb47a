// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// AArch64 only; Advanced SIMD is architecturally guaranteed there.

#include <arm_neon.h>

#include "compsim/kernels.hpp"

namespace compsim::kernels::neon {

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoefficients<float>& c) {
  const float32x4_t b1 = vdupq_n_f32(c.beta1);
  const float32x4_t omb1 = vdupq_n_f32(c.one_minus_beta1);
  const float32x4_t b2 = vdupq_n_f32(c.beta2);
  const float32x4_t omb2 = vdupq_n_f32(c.one_minus_beta2);
  const float32x4_t bc1 = vdupq_n_f32(c.bias_correction1);
  const float32x4_t bc2 = vdupq_n_f32(c.bias_correction2);
  const float32x4_t lr = vdupq_n_f32(c.lr);
  const float32x4_t eps = vdupq_n_f32(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t gi = vld1q_f32(g + i);
    const float32x4_t mi = vaddq_f32(vmulq_f32(b1, vld1q_f32(m + i)), vmulq_f32(omb1, gi));
    const float32x4_t vi = vaddq_f32(vmulq_f32(b2, vld1q_f32(v + i)), vmulq_f32(omb2, vmulq_f32(gi, gi)));
    vst1q_f32(m + i, mi);
    vst1q_f32(v + i, vi);
    const float32x4_t m_hat = vdivq_f32(mi, bc1);
    const float32x4_t v_hat = vdivq_f32(vi, bc2);
    const float32x4_t denom = vaddq_f32(vsqrtq_f32(v_hat), eps);
    const float32x4_t step = vdivq_f32(vmulq_f32(lr, m_hat), denom);
    vst1q_f32(p + i, vsubq_f32(vld1q_f32(p + i), step));
  }
  if (i < n) scalar::adam_update(p + i, g + i, m + i, v + i, n - i, c);
}

void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamCoefficients<double>& c) {
  const float64x2_t b1 = vdupq_n_f64(c.beta1);
  const float64x2_t omb1 = vdupq_n_f64(c.one_minus_beta1);
  const float64x2_t b2 = vdupq_n_f64(c.beta2);
  const float64x2_t omb2 = vdupq_n_f64(c.one_minus_beta2);
  const float64x2_t bc1 = vdupq_n_f64(c.bias_correction1);
  const float64x2_t bc2 = vdupq_n_f64(c.bias_correction2);
  const float64x2_t lr = vdupq_n_f64(c.lr);
  const float64x2_t eps = vdupq_n_f64(c.eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gi = vld1q_f64(g + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(omb1, gi));
    const float64x2_t vi = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(omb2, vmulq_f64(gi, gi)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, bc1);
    const float64x2_t v_hat = vdivq_f64(vi, bc2);
    const float64x2_t denom = vaddq_f64(vsqrtq_f64(v_hat), eps);
    const float64x2_t step = vdivq_f64(vmulq_f64(lr, m_hat), denom);
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
  }
  if (i < n) scalar::adam_update(p + i, g + i, m + i, v + i, n - i, c);
}

double dot(const float* a, const float* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    acc0 = vaddq_f64(acc0, vmulq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb))));
    acc1 = vaddq_f64(acc1, vmulq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb)));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

}  // namespace compsim::kernels::neon
