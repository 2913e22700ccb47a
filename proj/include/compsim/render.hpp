// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "compsim/field.hpp"
#include "compsim/geometry.hpp"
#include "compsim/scene.hpp"

namespace compsim {

// Additive color applied to samples of selected nodes before compositing.
inline constexpr Rgb kHighlightTint{0.35, 0.35, 0.0};
inline constexpr int kDefaultSamplesPerNode = 64;
// Minimum total object opacity for a pick to select anything.
inline constexpr double kPickOpacityThreshold = 0.05;

struct SampleOptions {
  int n_per_node = kDefaultSamplesPerNode;
  bool jitter = false;
  std::uint64_t seed = 0;
  bool highlight = false;
};

struct RaySample {
  double t = 0.0;
  // Width of the stratum the sample was drawn from, within its own node.
  double delta = 0.0;
  int node_id = 0;
  std::uint32_t node_index = 0;
  Vec3 p_world;
  Vec3 p_canonical;
  double sigma = 0.0;
  Rgb rgb;
  // Pre-activation density and the field color before appearance and tint;
  // kept for the backward pass.
  double density_raw = 0.0;
  Rgb base_rgb;
};

// Samples of all intersected nodes, sorted by t (stable: background first on
// ties, then node order).
struct RaySampleSet {
  std::vector<RaySample> samples;
  // Node ids by node index, for every node of the scene that was sampled.
  std::vector<int> node_ids;

  void clear() {
    samples.clear();
    node_ids.clear();
  }
};

struct PixelResult {
  Rgb rgb;
  double depth = 0.0;
  double opacity = 0.0;
  int instance_id = kBackgroundId;
};

struct NodeRender {
  Rgb rgb;
  double depth = 0.0;
  double opacity = 0.0;
};

// Deterministic per-stream uniform in [0, 1).
double hash_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);

// Appends the stratified samples of one node. Returns false (and appends
// nothing) when the ray misses the node's box.
template <typename Real>
bool sample_node(const BasicSceneNode<Real>& node, std::uint32_t node_index, const Ray& ray,
                 const SampleOptions& opts, std::vector<RaySample>& out);

// Throws std::invalid_argument if n_per_node < 1.
template <typename Real>
RaySampleSet sample_ray(const BasicScene<Real>& scene, const Ray& ray, const SampleOptions& opts);
template <typename Real>
void sample_ray_into(const BasicScene<Real>& scene, const Ray& ray, const SampleOptions& opts, RaySampleSet& out);

// Front-to-back compositing over all samples. `node_mass`, when non-empty,
// receives the summed weight of each node index. Throws std::invalid_argument
// for unsorted input.
PixelResult composite_ray(const RaySampleSet& set, std::span<double> node_mass = {});

// Compositing restricted to the samples of one node, with that node's own
// transmittance.
NodeRender composite_node(const RaySampleSet& set, std::uint32_t node_index);

template <typename Real>
NodeRender render_node_ray(const BasicSceneNode<Real>& node, const Ray& ray, const SampleOptions& opts);

enum Channel : unsigned {
  kChannelRgb = 1u << 0,
  kChannelDepth = 1u << 1,
  kChannelOpacity = 1u << 2,
  kChannelPanoptic = 1u << 3,
  kChannelPerNode = 1u << 4,
};
inline constexpr unsigned kChannelsDefault = kChannelRgb | kChannelDepth | kChannelOpacity | kChannelPanoptic;

struct RenderSettings {
  unsigned channels = kChannelsDefault;
  SampleOptions sampling;
  // Polled between rows; a set flag aborts the render.
  const std::atomic<bool>* cancel = nullptr;
};

struct NodeImage {
  int id = 0;
  std::vector<double> rgb;
  std::vector<double> depth;
  std::vector<double> opacity;
};

// Row-major buffers; rgb is interleaved.
struct RenderedImage {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;
  std::vector<double> depth;
  std::vector<double> opacity;
  std::vector<std::int32_t> panoptic;
  std::vector<NodeImage> per_node;
  bool canceled = false;
};

// Renders at pixel centers; each pixel's sampling seed is derived from the
// request seed and the pixel index. Throws std::invalid_argument for a
// zero-size image or an invalid camera.
template <typename Real>
RenderedImage render_image(const BasicScene<Real>& scene, const Camera& camera, const RenderSettings& settings);

// Object owning the largest composited weight at pixel (px, py), or empty when
// the total object opacity is below kPickOpacityThreshold.
template <typename Real>
std::optional<int> scene_pick(const BasicScene<Real>& scene, const Camera& camera, int px, int py,
                              const SampleOptions& opts = {});

}  // namespace compsim
