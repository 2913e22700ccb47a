// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsim/dataset.hpp"
#include "compsim/geometry.hpp"
#include "compsim/scene.hpp"

namespace compsim {

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (all integers little-endian):
//   "CSIMCKPT"            8-byte magic
//   u32 version           kCheckpointVersion
//   u64 metadata_bytes    length of the JSON metadata that follows
//   metadata              UTF-8 JSON (scene name, next id, per-node records)
//   blobs                 per node: embedding, density, color as float32 LE
//   u32 crc32             over every preceding byte
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  Scene scene;
  // Free-form JSON object stored alongside the scene (train config, metrics,
  // depth alignment); "{}" when absent.
  std::string info_json = "{}";
};

// Throws CheckpointError if the file cannot be written or `info_json` is not a
// JSON object.
void save_scene(const Scene& scene, const std::filesystem::path& path, const std::string& info_json = "{}");
// Throws CheckpointError naming the reason (bad magic, checksum mismatch,
// unsupported version, inconsistent blobs). Nothing is constructed on failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

struct LibraryEntry {
  std::filesystem::path path;
  std::string scene_name;
  std::vector<int> object_ids;
  std::vector<std::string> object_names;
};

// Every readable checkpoint (*.csim) in `dir`, sorted by file name. Unreadable
// files are skipped.
std::vector<LibraryEntry> list_library(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Synthetic scenes with analytic ground truth
// ---------------------------------------------------------------------------

enum class PrimitiveShape { Sphere, Box };

struct Primitive {
  PrimitiveShape shape = PrimitiveShape::Sphere;
  Vec3 center;
  double radius = 1.0;                // sphere
  Vec3 half_extents{1, 1, 1};         // box
  Mat3 rotation = Mat3::identity();   // box
  double density = 1.0;               // constant sigma inside
  Rgb color{0.5, 0.5, 0.5};           // color at the center
  Vec3 color_gradient;                // per world unit, added per channel

  bool contains(Vec3 p) const;
  Rgb color_at(Vec3 p) const;
  // Parametric interval of a ray inside the primitive.
  std::optional<Interval> intersect(const Ray& ray) const;
};

struct SyntheticObject {
  int id = 1;
  std::string name;
  Primitive primitive;
  // Defaults to the primitive's bounds grown by bbox_padding.
  std::optional<OrientedBox> bbox;
};

struct SyntheticSpec {
  std::string name = "synthetic";
  int width = 64;
  int height = 64;
  double focal = 80.0;
  int views = 20;
  // Every held_out_every-th view (the last of each group) is held out.
  int held_out_every = 5;
  Vec3 orbit_target{0, 0, 0};
  double orbit_radius = 10.0;
  // Views alternate between the two elevations.
  double elevation_deg = 30.0;
  double elevation_alt_deg = 30.0;
  OrientedBox scene_bounds;
  std::vector<Primitive> background;
  std::vector<SyntheticObject> objects;
  double bbox_padding = 1.15;
  // Quadrature step length inside primitives, world units.
  double quadrature_step = 0.02;
  // Images and depth average a supersample x supersample grid of rays over
  // each pixel's footprint; masks use the pixel-center ray.
  int supersample = 1;
  std::optional<Resolution> background_resolution;
  std::optional<Resolution> object_resolution;
};

// Floor slab plus two colored spheres; the object boxes dip into the floor.
// The background bounds hug the floor with a one-unit margin.
SyntheticSpec two_sphere_spec();

SyntheticSpec synthetic_spec_from_json(const std::string& text);
std::string to_json(const SyntheticSpec& spec);

// Throws std::invalid_argument for overlapping primitives, primitives outside
// their node boxes, duplicate or non-positive ids, or invalid colors.
void validate(const SyntheticSpec& spec);

// Ground truth for one ray by dense quadrature through the primitives.
struct GroundTruthSample {
  Rgb rgb;
  double depth = 0.0;    // expected depth, sum of weight * t
  double opacity = 0.0;
  int first_hit = kBackgroundId;
};
GroundTruthSample ground_truth_ray(const SyntheticSpec& spec, const Ray& ray, bool include_objects,
                                   double step = 0.0);

std::vector<Camera> synthetic_cameras(const SyntheticSpec& spec);

// Writes manifest.json and the image folders under `out_dir`.
void make_synthetic_scene(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

// Dataset manifest (JSON) writer used by the generator; paths are relative to
// the dataset root.
void write_manifest(const SceneDataset& dataset, const std::filesystem::path& root);

}  // namespace compsim
