// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "compsim/geometry.hpp"
#include "compsim/scene.hpp"

namespace compsim::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return normalize(Vec3{n(rng), n(rng), n(rng)});
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-3.14159, 3.14159);
  return rotation_about(random_unit(rng), angle(rng));
}

inline OrientedBox box_at(Vec3 center, Vec3 half, Mat3 rotation = Mat3::identity()) {
  OrientedBox b;
  b.pose.rotation = rotation;
  b.pose.translation = center;
  b.half_extents = half;
  return b;
}

template <typename Real>
void fill_random(BasicVoxelField<Real>& f, std::mt19937_64& rng, double d_lo, double d_hi, double c_lo = -2.0,
                 double c_hi = 2.0) {
  std::uniform_real_distribution<double> d(d_lo, d_hi), c(c_lo, c_hi);
  for (auto& v : f.density_raw()) v = static_cast<Real>(d(rng));
  for (auto& v : f.color_raw()) v = static_cast<Real>(c(rng));
}

template <typename Real>
BasicSceneNode<Real> make_node(NodeKind kind, OrientedBox box, Resolution res, double density, double color) {
  return BasicSceneNode<Real>(kind, box, BasicVoxelField<Real>(res, density, color));
}

// Camera on the +y side of the origin looking toward it.
inline Camera test_camera(int w, int h, Vec3 eye = {0.3, -6, 1.2}, Vec3 target = {0, 0, 0}) {
  Camera c;
  c.pose = look_at(eye, target);
  c.width = w;
  c.height = h;
  c.fx = c.fy = 1.2 * w;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  return c;
}

}  // namespace compsim::testing
