// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

namespace compsim {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  constexpr Vec3& operator+=(Vec3 b) { x += b.x; y += b.y; z += b.z; return *this; }
  constexpr Vec3& operator-=(Vec3 b) { x -= b.x; y -= b.y; z -= b.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

// Colors share the vector type; channels are r = x, g = y, b = z.
using Rgb = Vec3;

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr Vec3 hadamard(Vec3 a, Vec3 b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline double length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalize(Vec3 a) { return a / length(a); }
inline bool is_finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }
inline double max_abs_diff(Vec3 a, Vec3 b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

enum class Axis { X = 0, Y = 1, Z = 2 };

constexpr Vec3 unit_axis(Axis a) {
  switch (a) {
    case Axis::X: return {1, 0, 0};
    case Axis::Y: return {0, 1, 0};
    case Axis::Z: return {0, 0, 1};
  }
  return {};
}

// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return {}; }
  static constexpr Mat3 from_rows(Vec3 r0, Vec3 r1, Vec3 r2) {
    return {{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
  }
  static constexpr Mat3 from_cols(Vec3 c0, Vec3 c1, Vec3 c2) {
    return {{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
  }

  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }
  constexpr Vec3 col(int c) const { return {m[c], m[3 + c], m[6 + c]}; }

  constexpr Mat3 transposed() const {
    return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }
  constexpr double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  friend constexpr Vec3 operator*(const Mat3& a, Vec3 v) {
    return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z, a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
            a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
  }
  friend constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        r.m[i * 3 + j] = a.m[i * 3] * b.m[j] + a.m[i * 3 + 1] * b.m[3 + j] + a.m[i * 3 + 2] * b.m[6 + j];
    return r;
  }
  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

// Rotation by angle_rad about a unit axis (Rodrigues).
Mat3 rotation_about(Vec3 axis, double angle_rad);
inline Mat3 rotation_about(Axis axis, double angle_rad) { return rotation_about(unit_axis(axis), angle_rad); }

// Max |R^T R - I| and |det R - 1|; both must be below tol for a proper rotation.
bool is_rotation(const Mat3& r, double tol = 1e-9);

// Rigid transform x -> R x + t.
struct PoseSE3 {
  Mat3 rotation;
  Vec3 translation;

  static PoseSE3 identity() { return {}; }

  Vec3 apply(Vec3 p) const { return rotation * p + translation; }
  Vec3 apply_direction(Vec3 d) const { return rotation * d; }
  PoseSE3 inverse() const {
    Mat3 rt = rotation.transposed();
    return {rt, -(rt * translation)};
  }
  friend PoseSE3 operator*(const PoseSE3& a, const PoseSE3& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }
  friend bool operator==(const PoseSE3&, const PoseSE3&) = default;
};

// Max absolute difference over rotation and translation entries.
double pose_distance(const PoseSE3& a, const PoseSE3& b);

// Box whose pose maps canonical (box-local) coordinates to world coordinates.
struct OrientedBox {
  PoseSE3 pose;
  Vec3 half_extents{0.5, 0.5, 0.5};

  Vec3 center() const { return pose.translation; }
  bool contains(Vec3 p_world, double eps = 0.0) const;
  friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

struct Ray {
  Vec3 origin;
  Vec3 direction{0, 0, -1};
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();

  Vec3 at(double t) const { return origin + direction * t; }
};

struct Interval {
  double t_in = 0.0;
  double t_out = 0.0;
};

// Pinhole camera; the pose maps camera space to world space. The camera looks
// down -z in its own frame, with +x to the right and +y up; image rows grow
// downward.
struct Camera {
  PoseSE3 pose;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  Vec3 position() const { return pose.translation; }
  Vec3 forward() const { return pose.rotation * Vec3{0, 0, -1}; }
};

// Throws std::invalid_argument when intrinsics or the pose are invalid.
void validate(const Camera& camera);

// Parametric interval of the ray inside the box, clamped to the ray bounds.
// Grazing contact (t_in == t_out) is a miss.
std::optional<Interval> ray_box_intersect(const Ray& ray, const OrientedBox& box);

// Box-normalized coordinates: the box maps onto [-1, 1]^3.
Vec3 world_to_canonical(Vec3 p, const OrientedBox& box);
Vec3 canonical_to_world(Vec3 q, const OrientedBox& box);
// Direction scaling used when canonical coordinates are needed along a ray.
Vec3 world_dir_to_canonical(Vec3 d, const OrientedBox& box);

// Ray through continuous pixel coordinates (px, py). Throws std::invalid_argument
// for coordinates outside [0, width) x [0, height).
Ray pixel_ray(const Camera& camera, double px, double py);

// Projects a world point to continuous pixel coordinates; empty when the point
// is not in front of the camera.
std::optional<std::array<double, 2>> project(const Camera& camera, Vec3 p_world);

// Camera at `eye` looking at `target`, world up `up`.
PoseSE3 look_at(Vec3 eye, Vec3 target, Vec3 up = {0, 0, 1});

}  // namespace compsim
