// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// JSON encodings of the geometric value types, shared by the manifest,
// checkpoint and service code.

#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>

#include "compsim/field.hpp"
#include "compsim/geometry.hpp"

namespace compsim::json_util {

using nlohmann::json;

inline json vec(Vec3 v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 to_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json mat(const Mat3& m) {
  return json::array({json::array({m(0, 0), m(0, 1), m(0, 2)}), json::array({m(1, 0), m(1, 1), m(1, 2)}),
                      json::array({m(2, 0), m(2, 1), m(2, 2)})});
}

inline Mat3 to_mat(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("rotation must be 3 rows of 3 numbers");
  return Mat3::from_rows(to_vec(j[0]), to_vec(j[1]), to_vec(j[2]));
}

inline json box(const OrientedBox& b) {
  return {{"center", vec(b.pose.translation)}, {"rotation", mat(b.pose.rotation)}, {"half_extents", vec(b.half_extents)}};
}

inline OrientedBox to_box(const json& j) {
  OrientedBox b;
  b.pose.translation = to_vec(j.at("center"));
  b.pose.rotation = j.contains("rotation") ? to_mat(j.at("rotation")) : Mat3::identity();
  b.half_extents = to_vec(j.at("half_extents"));
  return b;
}

inline json resolution(const Resolution& r) { return json::array({r.nx, r.ny, r.nz}); }

inline Resolution to_resolution(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("resolution must be [nx, ny, nz]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

inline json camera(const Camera& c) {
  return {{"fx", c.fx},
          {"fy", c.fy},
          {"cx", c.cx},
          {"cy", c.cy},
          {"width", c.width},
          {"height", c.height},
          {"rotation", mat(c.pose.rotation)},
          {"translation", vec(c.pose.translation)}};
}

inline Camera to_camera(const json& j) {
  Camera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.pose.rotation = to_mat(j.at("rotation"));
  c.pose.translation = to_vec(j.at("translation"));
  return c;
}

}  // namespace compsim::json_util
