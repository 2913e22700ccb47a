// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/field.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace compsim {

template <typename Real>
BasicVoxelField<Real>::BasicVoxelField(Resolution resolution, double density_init, double color_init)
    : resolution_(resolution) {
  if (resolution.nx < 2 || resolution.ny < 2 || resolution.nz < 2)
    throw std::invalid_argument("voxel field resolution must be at least 2 on every axis");
  density_.assign(resolution.voxels(), static_cast<Real>(density_init));
  color_.assign(3 * resolution.voxels(), static_cast<Real>(color_init));
}

template <typename Real>
bool BasicVoxelField<Real>::bitwise_equal(const BasicVoxelField& other) const {
  return resolution_ == other.resolution_ && density_.size() == other.density_.size() &&
         color_.size() == other.color_.size() &&
         std::memcmp(density_.data(), other.density_.data(), density_.size() * sizeof(Real)) == 0 &&
         std::memcmp(color_.data(), other.color_.data(), color_.size() * sizeof(Real)) == 0;
}

template <typename Real>
void BasicGradBuffer<Real>::clear() {
  std::fill(d_density_.begin(), d_density_.end(), Real(0));
  std::fill(d_color_.begin(), d_color_.end(), Real(0));
}

TrilinearStencil trilinear_stencil(const Resolution& res, Vec3 p) {
  TrilinearStencil s;
  if (!(p.x >= -1.0 && p.x <= 1.0 && p.y >= -1.0 && p.y <= 1.0 && p.z >= -1.0 && p.z <= 1.0)) return s;
  s.inside = true;
  const int n[3] = {res.nx, res.ny, res.nz};
  int cell[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] + 1.0) * 0.5 * (n[a] - 1);
    int c = static_cast<int>(std::floor(u));
    c = std::clamp(c, 0, n[a] - 2);
    cell[a] = c;
    frac[a] = u - c;
  }
  const std::size_t sx = 1;
  const std::size_t sy = static_cast<std::size_t>(res.nx);
  const std::size_t sz = static_cast<std::size_t>(res.nx) * static_cast<std::size_t>(res.ny);
  const std::size_t base = cell[2] * sz + cell[1] * sy + cell[0] * sx;
  for (int k = 0; k < 8; ++k) {
    const int bx = k & 1, by = (k >> 1) & 1, bz = (k >> 2) & 1;
    s.index[k] = base + bx * sx + by * sy + bz * sz;
    s.weight[k] = (bx ? frac[0] : 1.0 - frac[0]) * (by ? frac[1] : 1.0 - frac[1]) * (bz ? frac[2] : 1.0 - frac[2]);
  }
  return s;
}

template <typename Real>
RawSample interpolate_raw(const BasicVoxelField<Real>& field, const TrilinearStencil& s) {
  RawSample r;
  const Real* density = field.density_raw().data();
  const Real* color = field.color_raw().data();
  for (int k = 0; k < 8; ++k) {
    const double w = s.weight[k];
    const std::size_t i = s.index[k];
    r.density += w * static_cast<double>(density[i]);
    r.color.x += w * static_cast<double>(color[3 * i]);
    r.color.y += w * static_cast<double>(color[3 * i + 1]);
    r.color.z += w * static_cast<double>(color[3 * i + 2]);
  }
  return r;
}

template <typename Real>
FieldSample field_query(const BasicVoxelField<Real>& field, Vec3 p) {
  if (!is_finite(p)) throw std::invalid_argument("field_query: non-finite query point");
  const TrilinearStencil s = trilinear_stencil(field.resolution(), p);
  if (!s.inside) return {};
  return activate(interpolate_raw(field, s));
}

template <typename Real>
void scatter_raw_grad(const TrilinearStencil& s, double d_density, Vec3 d_color, BasicGradBuffer<Real>& grads) {
  if (!s.inside) return;
  Real* dd = grads.d_density_raw().data();
  Real* dc = grads.d_color_raw().data();
  for (int k = 0; k < 8; ++k) {
    const double w = s.weight[k];
    const std::size_t i = s.index[k];
    dd[i] += static_cast<Real>(w * d_density);
    dc[3 * i] += static_cast<Real>(w * d_color.x);
    dc[3 * i + 1] += static_cast<Real>(w * d_color.y);
    dc[3 * i + 2] += static_cast<Real>(w * d_color.z);
  }
}

template <typename Real, typename GradReal>
void field_query_backward(const BasicVoxelField<Real>& field, Vec3 p, double d_sigma, Vec3 d_rgb,
                          BasicGradBuffer<GradReal>& grads) {
  if (!grads.matches(field)) throw std::invalid_argument("field_query_backward: gradient buffer shape mismatch");
  if (!is_finite(p)) throw std::invalid_argument("field_query_backward: non-finite query point");
  const TrilinearStencil s = trilinear_stencil(field.resolution(), p);
  if (!s.inside) return;
  const RawSample raw = interpolate_raw(field, s);
  const double d_density = d_sigma * softplus_grad(raw.density);
  Vec3 d_color;
  for (int c = 0; c < 3; ++c) {
    const double sg = sigmoid(raw.color[c]);
    d_color[c] = d_rgb[c] * sg * (1.0 - sg);
  }
  scatter_raw_grad(s, d_density, d_color, grads);
}

template class BasicVoxelField<float>;
template class BasicVoxelField<double>;
template class BasicGradBuffer<float>;
template class BasicGradBuffer<double>;
template RawSample interpolate_raw(const BasicVoxelField<float>&, const TrilinearStencil&);
template RawSample interpolate_raw(const BasicVoxelField<double>&, const TrilinearStencil&);
template FieldSample field_query(const BasicVoxelField<float>&, Vec3);
template FieldSample field_query(const BasicVoxelField<double>&, Vec3);
template void scatter_raw_grad(const TrilinearStencil&, double, Vec3, BasicGradBuffer<float>&);
template void scatter_raw_grad(const TrilinearStencil&, double, Vec3, BasicGradBuffer<double>&);
template void field_query_backward(const BasicVoxelField<float>&, Vec3, double, Vec3, BasicGradBuffer<float>&);
template void field_query_backward(const BasicVoxelField<double>&, Vec3, double, Vec3, BasicGradBuffer<double>&);

}  // namespace compsim
