// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "compsim/kernels.hpp"

namespace compsim::kernels {

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("COMPSIM_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::Scalar;
    if (want == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
    if (want == "neon" && isa_supported(Isa::Neon)) return Isa::Neon;
  }
  return detected_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

void require_same_size(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  if (a != b || a != c || a != d) throw std::invalid_argument("adam_update: span sizes differ");
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(COMPSIM_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(COMPSIM_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() {
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa))
    throw std::invalid_argument("instruction set '" + std::string(to_string(isa)) + "' is not supported here");
  active().store(isa, std::memory_order_relaxed);
}

template <typename Real>
AdamCoefficients<Real> adam_coefficients(double lr, double beta1, double beta2, double eps, long step) {
  return {static_cast<Real>(lr),
          static_cast<Real>(beta1),
          static_cast<Real>(1.0 - beta1),
          static_cast<Real>(beta2),
          static_cast<Real>(1.0 - beta2),
          static_cast<Real>(eps),
          static_cast<Real>(1.0 - std::pow(beta1, static_cast<double>(step))),
          static_cast<Real>(1.0 - std::pow(beta2, static_cast<double>(step)))};
}

template AdamCoefficients<float> adam_coefficients<float>(double, double, double, double, long);
template AdamCoefficients<double> adam_coefficients<double>(double, double, double, double, long);

namespace {

template <typename Real>
void dispatch_adam(std::span<Real> p, std::span<const Real> g, std::span<Real> m, std::span<Real> v,
                   const AdamCoefficients<Real>& c) {
  require_same_size(p.size(), g.size(), m.size(), v.size());
  switch (active_isa()) {
#if defined(COMPSIM_HAVE_AVX2)
    case Isa::Avx2: return avx2::adam_update(p.data(), g.data(), m.data(), v.data(), p.size(), c);
#endif
#if defined(COMPSIM_HAVE_NEON)
    case Isa::Neon: return neon::adam_update(p.data(), g.data(), m.data(), v.data(), p.size(), c);
#endif
    default: return scalar::adam_update(p.data(), g.data(), m.data(), v.data(), p.size(), c);
  }
}

}  // namespace

void adam_update(std::span<float> p, std::span<const float> g, std::span<float> m, std::span<float> v,
                 const AdamCoefficients<float>& c) {
  dispatch_adam(p, g, m, v, c);
}

void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v,
                 const AdamCoefficients<double>& c) {
  dispatch_adam(p, g, m, v, c);
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: span sizes differ");
  switch (active_isa()) {
#if defined(COMPSIM_HAVE_AVX2)
    case Isa::Avx2: return avx2::dot(a.data(), b.data(), a.size());
#endif
#if defined(COMPSIM_HAVE_NEON)
    case Isa::Neon: return neon::dot(a.data(), b.data(), a.size());
#endif
    default: return scalar::dot(a.data(), b.data(), a.size());
  }
}

}  // namespace compsim::kernels
