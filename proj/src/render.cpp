// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "compsim/parallel.hpp"

namespace compsim {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Accumulator {
  Rgb rgb;
  double depth = 0.0;
  double opacity = 0.0;
  double transmittance = 1.0;

  // Returns the sample weight T_i * alpha_i.
  double add(const RaySample& s) {
    const double attenuation = std::exp(-s.sigma * s.delta);
    const double weight = transmittance * (1.0 - attenuation);
    rgb += s.rgb * weight;
    depth += weight * s.t;
    opacity += weight;
    transmittance *= attenuation;
    return weight;
  }
};

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) { return splitmix(seed ^ splitmix(value)); }

double hash_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t h = splitmix(mix_seed(mix_seed(seed, stream), counter));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

template <typename Real>
bool sample_node(const BasicSceneNode<Real>& node, std::uint32_t node_index, const Ray& ray,
                 const SampleOptions& opts, std::vector<RaySample>& out) {
  const auto hit = ray_box_intersect(ray, node.bbox);
  if (!hit) return false;
  const int n = opts.n_per_node;
  const double width = (hit->t_out - hit->t_in) / n;
  const auto& field = node.field();
  const bool tint = opts.highlight && node.selected;
  const auto stream = static_cast<std::uint64_t>(static_cast<std::int64_t>(node.id));
  for (int j = 0; j < n; ++j) {
    const double u = opts.jitter ? hash_uniform(opts.seed, stream, static_cast<std::uint64_t>(j)) : 0.5;
    RaySample s;
    s.t = hit->t_in + (j + u) * width;
    s.delta = width;
    s.node_id = node.id;
    s.node_index = node_index;
    s.p_world = ray.at(s.t);
    s.p_canonical = world_to_canonical(s.p_world, node.bbox);
    const TrilinearStencil stencil = trilinear_stencil(field.resolution(), s.p_canonical);
    if (stencil.inside) {
      const RawSample raw = interpolate_raw(field, stencil);
      const FieldSample fs = activate(raw);
      s.density_raw = raw.density;
      s.sigma = fs.sigma;
      s.base_rgb = fs.rgb;
      Rgb c = node.appearance.apply(fs.rgb);
      if (tint) {
        c += kHighlightTint;
        c = {std::min(c.x, 1.0), std::min(c.y, 1.0), std::min(c.z, 1.0)};
      }
      s.rgb = c;
    } else {
      s.density_raw = -std::numeric_limits<double>::infinity();
    }
    out.push_back(s);
  }
  return true;
}

template <typename Real>
void sample_ray_into(const BasicScene<Real>& scene, const Ray& ray, const SampleOptions& opts, RaySampleSet& out) {
  if (opts.n_per_node < 1) throw std::invalid_argument("sample_ray: n_per_node must be at least 1");
  out.clear();
  const auto nodes = scene.nodes();
  out.node_ids.reserve(nodes.size());
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    out.node_ids.push_back(nodes[i].id);
    sample_node(nodes[i], i, ray, opts, out.samples);
  }
  std::stable_sort(out.samples.begin(), out.samples.end(),
                   [](const RaySample& a, const RaySample& b) { return a.t < b.t; });
}

template <typename Real>
RaySampleSet sample_ray(const BasicScene<Real>& scene, const Ray& ray, const SampleOptions& opts) {
  RaySampleSet set;
  sample_ray_into(scene, ray, opts, set);
  return set;
}

PixelResult composite_ray(const RaySampleSet& set, std::span<double> node_mass) {
  std::fill(node_mass.begin(), node_mass.end(), 0.0);
  Accumulator acc;
  double previous_t = -std::numeric_limits<double>::infinity();
  for (const RaySample& s : set.samples) {
    if (s.t < previous_t) throw std::invalid_argument("composite_ray: samples are not sorted by depth");
    previous_t = s.t;
    const double w = acc.add(s);
    if (s.node_index < node_mass.size()) node_mass[s.node_index] += w;
  }
  PixelResult result;
  result.rgb = acc.rgb;
  result.depth = acc.depth;
  result.opacity = acc.opacity;
  if (!node_mass.empty() && !set.node_ids.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < std::min(node_mass.size(), set.node_ids.size()); ++i)
      if (node_mass[i] > node_mass[best]) best = i;
    result.instance_id = set.node_ids[best];
  }
  return result;
}

NodeRender composite_node(const RaySampleSet& set, std::uint32_t node_index) {
  Accumulator acc;
  for (const RaySample& s : set.samples)
    if (s.node_index == node_index) acc.add(s);
  return {acc.rgb, acc.depth, acc.opacity};
}

template <typename Real>
NodeRender render_node_ray(const BasicSceneNode<Real>& node, const Ray& ray, const SampleOptions& opts) {
  if (opts.n_per_node < 1) throw std::invalid_argument("render_node_ray: n must be at least 1");
  RaySampleSet set;
  set.node_ids.push_back(node.id);
  if (!sample_node(node, 0, ray, opts, set.samples)) return {};
  return composite_node(set, 0);
}

template <typename Real>
RenderedImage render_image(const BasicScene<Real>& scene, const Camera& camera, const RenderSettings& settings) {
  if (camera.width <= 0 || camera.height <= 0) throw std::invalid_argument("render_image: zero-size image");
  validate(camera);
  if (settings.sampling.n_per_node < 1) throw std::invalid_argument("render_image: n_per_node must be at least 1");

  const auto w = static_cast<std::size_t>(camera.width);
  const auto h = static_cast<std::size_t>(camera.height);
  const std::size_t pixels = w * h;
  const unsigned ch = settings.channels;
  const std::size_t node_count = scene.size();

  RenderedImage img;
  img.width = camera.width;
  img.height = camera.height;
  if (ch & kChannelRgb) img.rgb.assign(3 * pixels, 0.0);
  if (ch & kChannelDepth) img.depth.assign(pixels, 0.0);
  if (ch & kChannelOpacity) img.opacity.assign(pixels, 0.0);
  if (ch & kChannelPanoptic) img.panoptic.assign(pixels, kBackgroundId);
  if (ch & kChannelPerNode) {
    for (const auto& node : scene.nodes()) {
      NodeImage ni;
      ni.id = node.id;
      ni.rgb.assign(3 * pixels, 0.0);
      ni.depth.assign(pixels, 0.0);
      ni.opacity.assign(pixels, 0.0);
      img.per_node.push_back(std::move(ni));
    }
  }

  std::atomic<bool> canceled{false};
  parallel_for(
      0, h,
      [&](std::size_t y) {
        if (settings.cancel && settings.cancel->load(std::memory_order_relaxed)) {
          canceled.store(true, std::memory_order_relaxed);
          return;
        }
        RaySampleSet set;
        std::vector<double> mass(node_count, 0.0);
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t p = y * w + x;
          SampleOptions opts = settings.sampling;
          opts.seed = mix_seed(settings.sampling.seed, p);
          const Ray ray = pixel_ray(camera, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5);
          sample_ray_into(scene, ray, opts, set);
          const PixelResult px = composite_ray(set, mass);
          if (ch & kChannelRgb) {
            img.rgb[3 * p] = px.rgb.x;
            img.rgb[3 * p + 1] = px.rgb.y;
            img.rgb[3 * p + 2] = px.rgb.z;
          }
          if (ch & kChannelDepth) img.depth[p] = px.depth;
          if (ch & kChannelOpacity) img.opacity[p] = px.opacity;
          if (ch & kChannelPanoptic) img.panoptic[p] = px.instance_id;
          if (ch & kChannelPerNode) {
            for (std::uint32_t k = 0; k < node_count; ++k) {
              const NodeRender nr = composite_node(set, k);
              NodeImage& ni = img.per_node[k];
              ni.rgb[3 * p] = nr.rgb.x;
              ni.rgb[3 * p + 1] = nr.rgb.y;
              ni.rgb[3 * p + 2] = nr.rgb.z;
              ni.depth[p] = nr.depth;
              ni.opacity[p] = nr.opacity;
            }
          }
        }
      },
      1);
  img.canceled = canceled.load();
  return img;
}

template <typename Real>
std::optional<int> scene_pick(const BasicScene<Real>& scene, const Camera& camera, int px, int py,
                              const SampleOptions& opts) {
  validate(camera);
  if (px < 0 || py < 0 || px >= camera.width || py >= camera.height)
    throw std::invalid_argument("scene_pick: pixel outside the image");
  SampleOptions o = opts;
  o.seed = mix_seed(opts.seed, static_cast<std::uint64_t>(py) * camera.width + px);
  const Ray ray = pixel_ray(camera, px + 0.5, py + 0.5);
  const RaySampleSet set = sample_ray(scene, ray, o);
  std::vector<double> mass(scene.size(), 0.0);
  composite_ray(set, mass);
  double object_total = 0.0;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (scene.nodes()[i].is_background()) continue;
    object_total += mass[i];
    if (!best || mass[i] > mass[*best]) best = i;
  }
  if (!best || object_total < kPickOpacityThreshold) return std::nullopt;
  return scene.nodes()[*best].id;
}

#define COMPSIM_INSTANTIATE_RENDER(Real)                                                                     \
  template bool sample_node(const BasicSceneNode<Real>&, std::uint32_t, const Ray&, const SampleOptions&,   \
                            std::vector<RaySample>&);                                                        \
  template RaySampleSet sample_ray(const BasicScene<Real>&, const Ray&, const SampleOptions&);               \
  template void sample_ray_into(const BasicScene<Real>&, const Ray&, const SampleOptions&, RaySampleSet&);   \
  template NodeRender render_node_ray(const BasicSceneNode<Real>&, const Ray&, const SampleOptions&);        \
  template RenderedImage render_image(const BasicScene<Real>&, const Camera&, const RenderSettings&);        \
  template std::optional<int> scene_pick(const BasicScene<Real>&, const Camera&, int, int, const SampleOptions&);

COMPSIM_INSTANTIATE_RENDER(float)
COMPSIM_INSTANTIATE_RENDER(double)

#undef COMPSIM_INSTANTIATE_RENDER

}  // namespace compsim
