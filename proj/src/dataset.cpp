// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "compsim/image_io.hpp"
#include "json_util.hpp"

namespace compsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "dataset failed validation (" + std::to_string(issues.size()) + " issue" +
                    (issues.size() == 1 ? "" : "s") + ")";
  for (const auto& i : issues) out += "\n  - " + i;
  return out;
}

// Returns an issue text for rotations that are not proper, or empty.
std::string rotation_issue(const Mat3& r) {
  if (r.determinant() < 0.0) return "improper rotation";
  if (!is_rotation(r, 1e-6)) return "non-orthonormal rotation";
  return {};
}

ImageRgb to_float(const ImageRgb8& img) {
  ImageRgb out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = static_cast<float>(img.data[i] / 255.0);
  return out;
}

}  // namespace

DatasetError::DatasetError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

SceneDataset load_dataset(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DatasetError({"missing manifest " + manifest_path.string()});
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError({"manifest is not valid JSON: " + std::string(e.what())});
  }

  std::vector<std::string> issues;
  SceneDataset ds;
  ds.root = root;
  try {
    ds.name = manifest.value("name", root.filename().string());
    ds.scene_bounds = json_util::to_box(manifest.at("scene_bounds"));
    if (manifest.contains("background_resolution"))
      ds.background_resolution = json_util::to_resolution(manifest.at("background_resolution"));
    if (manifest.contains("object_resolution"))
      ds.object_resolution = json_util::to_resolution(manifest.at("object_resolution"));
  } catch (const std::exception& e) {
    issues.push_back(std::string("scene header: ") + e.what());
  }
  const double depth_scale = manifest.value("depth_scale", 0.001);
  if (ds.scene_bounds.half_extents.x <= 0 || ds.scene_bounds.half_extents.y <= 0 ||
      ds.scene_bounds.half_extents.z <= 0)
    issues.push_back("scene bounds must have positive half extents");
  if (auto r = rotation_issue(ds.scene_bounds.pose.rotation); !r.empty()) issues.push_back(r + ", scene bounds");

  std::set<int> ids;
  const json instances = manifest.value("instances", json::array());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    try {
      const json& j = instances[i];
      InstanceInfo inst;
      inst.id = j.at("id").get<int>();
      inst.name = j.value("name", "object " + std::to_string(inst.id));
      inst.bbox = json_util::to_box(j.at("bbox"));
      inst.embedding = embedding_from_name(inst.name);
      if (j.contains("embedding")) {
        const auto values = j.at("embedding").get<std::vector<float>>();
        if (values.size() != kEmbeddingDim)
          issues.push_back("instance " + std::to_string(inst.id) + ": embedding has " + std::to_string(values.size()) +
                           " values, expected " + std::to_string(kEmbeddingDim));
        else
          std::copy(values.begin(), values.end(), inst.embedding.begin());
      }
      if (inst.id <= kBackgroundId) issues.push_back("instance ids must be positive, got " + std::to_string(inst.id));
      if (!ids.insert(inst.id).second) issues.push_back("duplicate instance id " + std::to_string(inst.id));
      const Vec3 h = inst.bbox.half_extents;
      if (!(h.x > 0 && h.y > 0 && h.z > 0))
        issues.push_back("instance " + std::to_string(inst.id) + ": half extents must be positive");
      if (auto r = rotation_issue(inst.bbox.pose.rotation); !r.empty())
        issues.push_back(r + ", instance " + std::to_string(inst.id));
      ds.instances.push_back(std::move(inst));
    } catch (const std::exception& e) {
      issues.push_back("instance " + std::to_string(i) + ": " + e.what());
    }
  }

  const json frames = manifest.value("frames", json::array());
  if (frames.empty()) issues.push_back("manifest lists no frames");
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string where = "frame " + std::to_string(k);
    Frame f;
    try {
      const json& j = frames[k];
      f.image_path = j.at("image").get<std::string>();
      f.mask_path = j.value("mask", "");
      f.inpaint_rgb_path = j.value("inpaint_rgb", "");
      f.inpaint_depth_path = j.value("inpaint_depth", "");
      f.held_out = j.value("held_out", false);
      f.camera = json_util::to_camera(j.at("camera"));
    } catch (const std::exception& e) {
      issues.push_back(where + ": " + e.what());
      ds.frames.push_back(std::move(f));
      continue;
    }
    if (auto r = rotation_issue(f.camera.pose.rotation); !r.empty()) issues.push_back(r + ", " + where);
    try {
      Camera c = f.camera;
      c.pose = PoseSE3::identity();
      validate(c);
    } catch (const std::exception& e) {
      issues.push_back(where + ": " + e.what());
    }
    const std::size_t pixels = static_cast<std::size_t>(std::max(0, f.camera.width)) * std::max(0, f.camera.height);

    auto check_size = [&](int w, int h, const std::string& path) {
      if (w != f.camera.width || h != f.camera.height) {
        std::ostringstream msg;
        msg << path << " is " << w << "x" << h << ", camera expects " << f.camera.width << "x" << f.camera.height
            << " (" << where << ")";
        issues.push_back(msg.str());
        return false;
      }
      return true;
    };
    auto exists = [&](const std::string& rel) {
      if (fs::exists(root / rel)) return true;
      issues.push_back("missing file " + rel + " (" + where + ")");
      return false;
    };

    try {
      if (exists(f.image_path)) {
        ImageRgb8 img = read_png_rgb8(root / f.image_path);
        if (check_size(img.width, img.height, f.image_path)) f.rgb = to_float(img);
      }
      if (!f.mask_path.empty() && exists(f.mask_path)) {
        ImageGray16 m = read_png_gray16(root / f.mask_path);
        if (check_size(m.width, m.height, f.mask_path)) {
          f.mask.resize(pixels);
          std::set<int> unknown;
          for (std::size_t p = 0; p < pixels; ++p) {
            const std::uint16_t v = m.data[p];
            if (v == kMaskUndefinedStored) {
              f.mask[p] = kMaskUndefined;
              continue;
            }
            f.mask[p] = v;
            if (v != kBackgroundId && !ids.count(v)) unknown.insert(v);
          }
          for (int id : unknown)
            issues.push_back("unknown mask id " + std::to_string(id) + " in " + f.mask_path + " (" + where + ")");
        }
      }
      if (!f.inpaint_rgb_path.empty() && exists(f.inpaint_rgb_path)) {
        ImageRgb8 img = read_png_rgb8(root / f.inpaint_rgb_path);
        if (check_size(img.width, img.height, f.inpaint_rgb_path)) f.inpaint_rgb = to_float(img);
      }
      if (!f.inpaint_depth_path.empty() && exists(f.inpaint_depth_path)) {
        ImageGray16 d = read_png_gray16(root / f.inpaint_depth_path);
        if (check_size(d.width, d.height, f.inpaint_depth_path)) {
          f.inpaint_depth.resize(pixels);
          for (std::size_t p = 0; p < pixels; ++p) f.inpaint_depth[p] = static_cast<float>(d.data[p] * depth_scale);
        }
      }
    } catch (const ImageError& e) {
      issues.push_back(std::string(e.what()) + " (" + where + ")");
    }
    ds.frames.push_back(std::move(f));
  }

  if (!issues.empty()) throw DatasetError(std::move(issues));
  return ds;
}

Scene scene_from_dataset(const SceneDataset& dataset, const SceneInitOptions& options) {
  const Resolution bg_res =
      options.background_resolution.value_or(dataset.background_resolution.value_or(kDefaultBackgroundResolution));
  const Resolution obj_res =
      options.object_resolution.value_or(dataset.object_resolution.value_or(kDefaultObjectResolution));
  SceneNode background(NodeKind::Background, dataset.scene_bounds,
                       VoxelField(bg_res, options.density_init, options.color_init));
  background.name = "background";
  Scene scene(dataset.name, std::move(background));
  std::vector<InstanceInfo> sorted = dataset.instances;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const InstanceInfo& inst : sorted) {
    SceneNode node(NodeKind::Object, inst.bbox, VoxelField(obj_res, options.density_init, options.color_init));
    node.id = inst.id;
    node.name = inst.name;
    node.embedding = inst.embedding;
    scene.restore_node(std::move(node));
  }
  return scene;
}

}  // namespace compsim
