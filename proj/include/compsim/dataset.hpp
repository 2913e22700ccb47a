// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsim/field.hpp"
#include "compsim/geometry.hpp"
#include "compsim/scene.hpp"

namespace compsim {

// Mask value for pixels without instance supervision (stored as 65535).
inline constexpr int kMaskUndefined = -1;
inline constexpr std::uint16_t kMaskUndefinedStored = 0xFFFF;

struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // interleaved rgb in [0, 1]

  Rgb at(std::size_t pixel) const { return {data[3 * pixel], data[3 * pixel + 1], data[3 * pixel + 2]}; }
};

struct Frame {
  std::string image_path;
  std::string mask_path;
  std::string inpaint_rgb_path;
  std::string inpaint_depth_path;
  Camera camera;
  bool held_out = false;

  ImageRgb rgb;
  std::vector<int> mask;             // instance id per pixel, kMaskUndefined where unknown
  ImageRgb inpaint_rgb;
  std::vector<float> inpaint_depth;  // meters
};

struct InstanceInfo {
  int id = 0;
  std::string name;
  Embedding embedding{};  // derived from the name when the manifest has none
  OrientedBox bbox;
};

struct SceneDataset {
  std::string name;
  std::filesystem::path root;
  OrientedBox scene_bounds;
  std::vector<Frame> frames;
  std::vector<InstanceInfo> instances;
  std::optional<Resolution> background_resolution;
  std::optional<Resolution> object_resolution;

  const InstanceInfo* instance(int id) const {
    for (const auto& inst : instances)
      if (inst.id == id) return &inst;
    return nullptr;
  }
};

// Lists every problem found while loading a dataset.
class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// Validates and loads <root>/manifest.json and every referenced image.
SceneDataset load_dataset(const std::filesystem::path& root);

struct SceneInitOptions {
  std::optional<Resolution> background_resolution;
  std::optional<Resolution> object_resolution;
  double density_init = kDefaultDensityInit;
  double color_init = kDefaultColorInit;
};

// Background node over the scene bounds plus one object node per instance, ids
// taken from the dataset. Resolutions: options, then the manifest, then the
// field defaults.
Scene scene_from_dataset(const SceneDataset& dataset, const SceneInitOptions& options = {});

}  // namespace compsim
