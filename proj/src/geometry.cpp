// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace compsim {

Mat3 rotation_about(Vec3 axis, double angle_rad) {
  axis = normalize(axis);
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  const double t = 1.0 - c;
  const double x = axis.x, y = axis.y, z = axis.z;
  return {{t * x * x + c, t * x * y - s * z, t * x * z + s * y,
           t * x * y + s * z, t * y * y + c, t * y * z - s * x,
           t * x * z - s * y, t * y * z + s * x, t * z * z + c}};
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 rtr = r.transposed() * r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      if (!(std::abs(rtr(i, j) - expected) <= tol)) return false;
    }
  }
  return std::abs(r.determinant() - 1.0) <= tol;
}

double pose_distance(const PoseSE3& a, const PoseSE3& b) {
  double d = max_abs_diff(a.translation, b.translation);
  for (int i = 0; i < 9; ++i) d = std::max(d, std::abs(a.rotation.m[i] - b.rotation.m[i]));
  return d;
}

bool OrientedBox::contains(Vec3 p_world, double eps) const {
  const Vec3 q = pose.rotation.transposed() * (p_world - pose.translation);
  return std::abs(q.x) <= half_extents.x + eps && std::abs(q.y) <= half_extents.y + eps &&
         std::abs(q.z) <= half_extents.z + eps;
}

void validate(const Camera& camera) {
  if (!(camera.fx > 0.0) || !(camera.fy > 0.0))
    throw std::invalid_argument("camera focal lengths must be positive");
  if (camera.width <= 0 || camera.height <= 0)
    throw std::invalid_argument("camera image size must be positive");
  if (!(camera.cx >= 0.0 && camera.cx < camera.width && camera.cy >= 0.0 && camera.cy < camera.height))
    throw std::invalid_argument("camera principal point outside the image");
  if (!is_rotation(camera.pose.rotation, 1e-6))
    throw std::invalid_argument("camera pose rotation is not a proper rotation");
}

std::optional<Interval> ray_box_intersect(const Ray& ray, const OrientedBox& box) {
  const Mat3 rt = box.pose.rotation.transposed();
  const Vec3 o = rt * (ray.origin - box.pose.translation);
  const Vec3 d = rt * ray.direction;
  double t0 = ray.t_near;
  double t1 = ray.t_far;
  for (int a = 0; a < 3; ++a) {
    const double h = box.half_extents[a];
    if (d[a] == 0.0) {
      if (o[a] < -h || o[a] > h) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d[a];
    double ta = (-h - o[a]) * inv;
    double tb = (h - o[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (!(t0 < t1)) return std::nullopt;
  }
  return Interval{t0, t1};
}

Vec3 world_to_canonical(Vec3 p, const OrientedBox& box) {
  const Vec3 local = box.pose.rotation.transposed() * (p - box.pose.translation);
  return {local.x / box.half_extents.x, local.y / box.half_extents.y, local.z / box.half_extents.z};
}

Vec3 canonical_to_world(Vec3 q, const OrientedBox& box) {
  return box.pose.apply(hadamard(q, box.half_extents));
}

Vec3 world_dir_to_canonical(Vec3 d, const OrientedBox& box) {
  const Vec3 local = box.pose.rotation.transposed() * d;
  return {local.x / box.half_extents.x, local.y / box.half_extents.y, local.z / box.half_extents.z};
}

Ray pixel_ray(const Camera& camera, double px, double py) {
  if (!(px >= 0.0 && px < camera.width && py >= 0.0 && py < camera.height))
    throw std::invalid_argument("pixel (" + std::to_string(px) + ", " + std::to_string(py) +
                                ") outside the image");
  const Vec3 d_cam{(px - camera.cx) / camera.fx, -(py - camera.cy) / camera.fy, -1.0};
  Ray ray;
  ray.origin = camera.pose.translation;
  ray.direction = normalize(camera.pose.rotation * d_cam);
  return ray;
}

std::optional<std::array<double, 2>> project(const Camera& camera, Vec3 p_world) {
  const Vec3 p = camera.pose.rotation.transposed() * (p_world - camera.pose.translation);
  if (!(p.z < 0.0)) return std::nullopt;
  const double depth = -p.z;
  return std::array<double, 2>{camera.cx + camera.fx * p.x / depth, camera.cy - camera.fy * p.y / depth};
}

PoseSE3 look_at(Vec3 eye, Vec3 target, Vec3 up) {
  const Vec3 back = normalize(eye - target);
  Vec3 right = cross(up, back);
  if (length(right) < 1e-12) right = cross(Vec3{0, 1, 0}, back);
  right = normalize(right);
  const Vec3 true_up = cross(back, right);
  return {Mat3::from_cols(right, true_up, back), eye};
}

}  // namespace compsim
