// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops. Every kernel has a scalar reference in
// kernels::scalar and vector variants selected at runtime. The Adam kernels
// perform the same IEEE operations in the same order in every variant, so
// their results are bitwise identical across instruction sets.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace compsim::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

// Best variant supported by both the build and the running CPU.
Isa detected_isa();
// Variant used by the dispatching entry points. Initialized from
// detected_isa(), or from COMPSIM_ISA=scalar|avx2|neon when set.
Isa active_isa();
// Throws std::invalid_argument if `isa` is not supported here.
void set_active_isa(Isa isa);
bool isa_supported(Isa isa);

template <typename Real>
struct AdamCoefficients {
  Real lr;
  Real beta1;
  Real one_minus_beta1;
  Real beta2;
  Real one_minus_beta2;
  Real eps;
  Real bias_correction1;  // 1 - beta1^step
  Real bias_correction2;  // 1 - beta2^step
};

template <typename Real>
AdamCoefficients<Real> adam_coefficients(double lr, double beta1, double beta2, double eps, long step);

// m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
// p <- p - lr * (m / bc1) / (sqrt(v / bc2) + eps)
void adam_update(std::span<float> params, std::span<const float> grads, std::span<float> m, std::span<float> v,
                 const AdamCoefficients<float>& c);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamCoefficients<double>& c);

// Dot product accumulated in double.
double dot(std::span<const float> a, std::span<const float> b);

namespace scalar {
void adam_update(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoefficients<float>& c);
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamCoefficients<double>& c);
double dot(const float* a, const float* b, std::size_t n);
}  // namespace scalar

namespace avx2 {
void adam_update(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoefficients<float>& c);
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamCoefficients<double>& c);
double dot(const float* a, const float* b, std::size_t n);
}  // namespace avx2

namespace neon {
void adam_update(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoefficients<float>& c);
void adam_update(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamCoefficients<double>& c);
double dot(const float* a, const float* b, std::size_t n);
}  // namespace neon

}  // namespace compsim::kernels
