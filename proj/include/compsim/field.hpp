// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "compsim/geometry.hpp"

namespace compsim {

// Activations applied to interpolated raw parameters.
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
// d softplus / dx
inline double softplus_grad(double x) { return sigmoid(x); }

struct Resolution {
  int nx = 2;
  int ny = 2;
  int nz = 2;

  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

inline constexpr Resolution kDefaultBackgroundResolution{128, 128, 128};
inline constexpr Resolution kDefaultObjectResolution{64, 64, 64};
inline constexpr double kDefaultDensityInit = -2.0;
inline constexpr double kDefaultColorInit = 0.0;

struct FieldSample {
  double sigma = 0.0;
  Rgb rgb;
};

// Interpolated pre-activation values.
struct RawSample {
  double density = 0.0;
  Vec3 color;
};

// Corner indices and weights of the trilinear cell containing a canonical point.
struct TrilinearStencil {
  std::array<std::size_t, 8> index{};
  std::array<double, 8> weight{};
  bool inside = false;
};

// Dense grid over the canonical cube [-1, 1]^3 with voxel corners on the
// boundary. Density is stored per voxel, color interleaved as rgb triples.
template <typename Real>
class BasicVoxelField {
 public:
  using value_type = Real;

  // Throws std::invalid_argument if any axis has fewer than 2 voxels.
  BasicVoxelField(Resolution resolution, double density_init = kDefaultDensityInit,
                  double color_init = kDefaultColorInit);

  const Resolution& resolution() const { return resolution_; }
  std::size_t voxel_count() const { return density_.size(); }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * resolution_.ny + static_cast<std::size_t>(y)) * resolution_.nx +
           static_cast<std::size_t>(x);
  }

  std::span<Real> density_raw() { return density_; }
  std::span<const Real> density_raw() const { return density_; }
  std::span<Real> color_raw() { return color_; }
  std::span<const Real> color_raw() const { return color_; }

  // Bitwise comparison of resolution and parameters.
  bool bitwise_equal(const BasicVoxelField& other) const;

  template <typename Other>
  BasicVoxelField<Other> cast() const {
    BasicVoxelField<Other> out(resolution_, 0.0, 0.0);
    for (std::size_t i = 0; i < density_.size(); ++i) out.density_raw()[i] = static_cast<Other>(density_[i]);
    for (std::size_t i = 0; i < color_.size(); ++i) out.color_raw()[i] = static_cast<Other>(color_[i]);
    return out;
  }

 private:
  Resolution resolution_;
  std::vector<Real> density_;
  std::vector<Real> color_;
};

using VoxelField = BasicVoxelField<float>;
using VoxelFieldD = BasicVoxelField<double>;

// Shape-matched accumulator for d(loss)/d(raw parameters).
template <typename Real>
class BasicGradBuffer {
 public:
  BasicGradBuffer() = default;
  explicit BasicGradBuffer(Resolution resolution)
      : resolution_(resolution), d_density_(resolution.voxels(), Real(0)), d_color_(3 * resolution.voxels(), Real(0)) {}
  template <typename FieldReal>
  explicit BasicGradBuffer(const BasicVoxelField<FieldReal>& field) : BasicGradBuffer(field.resolution()) {}

  const Resolution& resolution() const { return resolution_; }
  std::span<Real> d_density_raw() { return d_density_; }
  std::span<const Real> d_density_raw() const { return d_density_; }
  std::span<Real> d_color_raw() { return d_color_; }
  std::span<const Real> d_color_raw() const { return d_color_; }

  void clear();
  template <typename FieldReal>
  bool matches(const BasicVoxelField<FieldReal>& field) const {
    return resolution_ == field.resolution() && d_density_.size() == field.voxel_count();
  }

 private:
  Resolution resolution_;
  std::vector<Real> d_density_;
  std::vector<Real> d_color_;
};

using GradBuffer = BasicGradBuffer<float>;
using GradBufferD = BasicGradBuffer<double>;

// Points outside [-1, 1]^3 produce a stencil with inside == false.
TrilinearStencil trilinear_stencil(const Resolution& resolution, Vec3 p_canonical);

template <typename Real>
RawSample interpolate_raw(const BasicVoxelField<Real>& field, const TrilinearStencil& stencil);

inline FieldSample activate(const RawSample& raw) {
  return {softplus(raw.density), {sigmoid(raw.color.x), sigmoid(raw.color.y), sigmoid(raw.color.z)}};
}

// sigma = softplus(trilinear density), rgb = sigmoid(trilinear color); zero
// outside the canonical cube. Throws std::invalid_argument on non-finite input.
template <typename Real>
FieldSample field_query(const BasicVoxelField<Real>& field, Vec3 p_canonical);

// Accumulates upstream gradients already taken through the activations.
template <typename Real>
void scatter_raw_grad(const TrilinearStencil& stencil, double d_density_raw, Vec3 d_color_raw,
                      BasicGradBuffer<Real>& grads);

// Accumulates d(sigma, rgb)/d(params) * upstream into grads. Throws
// std::invalid_argument on shape mismatch.
template <typename Real, typename GradReal>
void field_query_backward(const BasicVoxelField<Real>& field, Vec3 p_canonical, double d_sigma, Vec3 d_rgb,
                          BasicGradBuffer<GradReal>& grads);

}  // namespace compsim
