// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "compsim/dataset.hpp"
#include "compsim/parallel.hpp"

namespace compsim {

double total_loss(const LossParts& p, const LossWeights& w) {
  return w.comp * p.comp_rgb + w.bg_rgb * p.bg_rgb + w.bg_depth * p.bg_depth + w.obj_acc * p.obj_acc +
         w.obj_rgb * p.obj_rgb;
}

void TrainBatch::clear() {
  rays.clear();
  gt_rgb.clear();
  mask_ids.clear();
  inpaint_rgb.clear();
  inpaint_depth.clear();
}

void TrainBatch::validate() const {
  const std::size_t n = rays.size();
  if (gt_rgb.size() != n || mask_ids.size() != n || inpaint_rgb.size() != n || inpaint_depth.size() != n)
    throw std::invalid_argument("train batch arrays differ in length");
}

namespace {

double squared_norm(Vec3 v) { return dot(v, v); }

}  // namespace

double loss_comp_rgb(std::span<const PixelResult> pred, std::span<const Rgb> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("loss_comp_rgb: size mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.size(); ++r) sum += squared_norm(pred[r].rgb - gt[r]);
  return sum / static_cast<double>(pred.size());
}

double loss_obj_acc(const ObjectRenders& objects, std::span<const int> mask_ids) {
  const std::size_t k_count = objects.ids.size();
  if (objects.renders.size() != k_count * mask_ids.size()) throw std::invalid_argument("loss_obj_acc: size mismatch");
  if (mask_ids.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < mask_ids.size(); ++r) {
    if (mask_ids[r] == kMaskUndefined) continue;
    for (std::size_t k = 0; k < k_count; ++k) {
      const double m = mask_ids[r] == objects.ids[k] ? 1.0 : 0.0;
      const double e = objects.renders[r * k_count + k].opacity - m;
      sum += e * e;
    }
  }
  return sum / static_cast<double>(mask_ids.size());
}

double loss_obj_rgb(const ObjectRenders& objects, std::span<const int> mask_ids, std::span<const Rgb> gt) {
  const std::size_t k_count = objects.ids.size();
  if (objects.renders.size() != k_count * mask_ids.size() || gt.size() != mask_ids.size())
    throw std::invalid_argument("loss_obj_rgb: size mismatch");
  if (mask_ids.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < mask_ids.size(); ++r)
    for (std::size_t k = 0; k < k_count; ++k)
      if (mask_ids[r] == objects.ids[k]) sum += squared_norm(objects.renders[r * k_count + k].rgb - gt[r]);
  return sum / static_cast<double>(mask_ids.size());
}

BackgroundLoss loss_bg(std::span<const NodeRender> bg, std::span<const Rgb> inpaint_rgb,
                       std::span<const double> inpaint_depth, const DepthAlign& align) {
  if (bg.size() != inpaint_rgb.size() || bg.size() != inpaint_depth.size())
    throw std::invalid_argument("loss_bg: size mismatch");
  BackgroundLoss out;
  if (bg.empty()) return out;
  for (std::size_t r = 0; r < bg.size(); ++r) {
    out.rgb += squared_norm(bg[r].rgb - inpaint_rgb[r]);
    const double e = align.w * bg[r].depth + align.q - inpaint_depth[r];
    out.depth += e * e;
  }
  out.rgb /= static_cast<double>(bg.size());
  out.depth /= static_cast<double>(bg.size());
  return out;
}

template <typename Real>
void SceneGradients<Real>::reset(const BasicScene<Real>& scene) {
  const auto nodes = scene.nodes();
  bool reuse = fields.size() == nodes.size();
  for (std::size_t i = 0; reuse && i < nodes.size(); ++i) reuse = fields[i].matches(nodes[i].field());
  if (reuse) {
    for (auto& f : fields) f.clear();
  } else {
    fields.clear();
    for (const auto& n : nodes) fields.emplace_back(n.field());
  }
  appearance.assign(nodes.size(), Appearance{{0, 0, 0}, {0, 0, 0}});
  d_w = 0.0;
  d_q = 0.0;
}

namespace {

struct SampleGrad {
  std::uint32_t node_index;
  Vec3 p_canonical;
  double d_density_raw;
  Vec3 d_color_raw;
};

struct RayWork {
  RaySampleSet set;
  std::vector<double> d_sigma;
  std::vector<Rgb> d_rgb;
  std::vector<std::size_t> scratch;
  std::vector<SampleGrad> sample_grads;
  std::vector<Appearance> d_appearance;
  LossParts parts;
  double d_w = 0.0;
  double d_q = 0.0;
};

// Backward of front-to-back compositing over samples[idx[0]], samples[idx[1]],
// ... for upstream gradients on (rgb, depth, opacity).
void composite_backward(const std::vector<RaySample>& samples, const std::vector<std::size_t>& idx, Rgb d_c,
                        double d_depth, double d_opacity, std::vector<double>& d_sigma, std::vector<Rgb>& d_rgb) {
  if (d_c == Rgb{} && d_depth == 0.0 && d_opacity == 0.0) return;
  // Forward pass: transmittance after each sample and weights.
  double suffix = 0.0;
  std::vector<double> t_after(idx.size());
  std::vector<double> weight(idx.size());
  double transmittance = 1.0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const RaySample& s = samples[idx[j]];
    const double attenuation = std::exp(-s.sigma * s.delta);
    weight[j] = transmittance * (1.0 - attenuation);
    transmittance *= attenuation;
    t_after[j] = transmittance;
  }
  for (std::size_t jj = idx.size(); jj-- > 0;) {
    const std::size_t i = idx[jj];
    const RaySample& s = samples[i];
    const double v = dot(d_c, s.rgb) + d_depth * s.t + d_opacity;
    d_sigma[i] += s.delta * (t_after[jj] * v - suffix);
    d_rgb[i] += d_c * weight[jj];
    suffix += weight[jj] * v;
  }
}

template <typename Real>
void process_ray(const BasicScene<Real>& scene, const DepthAlign& align, const TrainBatch& batch,
                 const LossWeights& lw, const SampleOptions& sampling, std::size_t r, bool want_grads,
                 RayWork& work) {
  const auto nodes = scene.nodes();
  const std::size_t node_count = nodes.size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  SampleOptions opts = sampling;
  opts.highlight = false;
  opts.seed = mix_seed(sampling.seed, r);
  sample_ray_into(scene, batch.rays[r], opts, work.set);
  const auto& samples = work.set.samples;

  work.parts = {};
  work.d_w = work.d_q = 0.0;
  work.sample_grads.clear();

  const PixelResult composite = composite_ray(work.set);
  const Rgb gt = batch.gt_rgb[r];
  const int mask = batch.mask_ids[r];

  const Rgb e_comp = composite.rgb - gt;
  work.parts.comp_rgb = squared_norm(e_comp);

  if (want_grads) {
    work.d_sigma.assign(samples.size(), 0.0);
    work.d_rgb.assign(samples.size(), Rgb{});
    work.scratch.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) work.scratch[i] = i;
    composite_backward(samples, work.scratch, e_comp * (2.0 * lw.comp * inv_b), 0.0, 0.0, work.d_sigma,
                       work.d_rgb);
  }

  for (std::uint32_t k = 0; k < node_count; ++k) {
    const auto& node = nodes[k];
    const NodeRender nr = composite_node(work.set, k);
    Rgb d_c;
    double d_depth = 0.0;
    double d_opacity = 0.0;
    if (node.is_background()) {
      const Rgb e = nr.rgb - batch.inpaint_rgb[r];
      work.parts.bg_rgb += squared_norm(e);
      const double residual = align.w * nr.depth + align.q - batch.inpaint_depth[r];
      work.parts.bg_depth += residual * residual;
      d_c = e * (2.0 * lw.bg_rgb * inv_b);
      d_depth = 2.0 * lw.bg_depth * inv_b * residual * align.w;
      work.d_w += 2.0 * lw.bg_depth * inv_b * residual * nr.depth;
      work.d_q += 2.0 * lw.bg_depth * inv_b * residual;
    } else if (mask != kMaskUndefined) {
      const bool hit = mask == node.id;
      const double e_acc = nr.opacity - (hit ? 1.0 : 0.0);
      work.parts.obj_acc += e_acc * e_acc;
      d_opacity = 2.0 * lw.obj_acc * inv_b * e_acc;
      if (hit) {
        const Rgb e = nr.rgb - gt;
        work.parts.obj_rgb += squared_norm(e);
        d_c = e * (2.0 * lw.obj_rgb * inv_b);
      }
    }
    if (want_grads) {
      work.scratch.clear();
      for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].node_index == k) work.scratch.push_back(i);
      composite_backward(samples, work.scratch, d_c, d_depth, d_opacity, work.d_sigma, work.d_rgb);
    }
  }

  if (!want_grads) return;

  work.d_appearance.assign(node_count, Appearance{{0, 0, 0}, {0, 0, 0}});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RaySample& s = samples[i];
    if (!std::isfinite(s.density_raw)) continue;  // outside the node's field
    const Appearance& app = nodes[s.node_index].appearance;
    Appearance& d_app = work.d_appearance[s.node_index];
    Vec3 d_color_raw;
    for (int c = 0; c < 3; ++c) {
      const double pre = app.gain[c] * s.base_rgb[c] + app.bias[c];
      if (!(pre > 0.0 && pre < 1.0)) continue;
      const double g = work.d_rgb[i][c];
      d_app.gain[c] += g * s.base_rgb[c];
      d_app.bias[c] += g;
      const double base = s.base_rgb[c];
      d_color_raw[c] = g * app.gain[c] * base * (1.0 - base);
    }
    const double d_density_raw = work.d_sigma[i] * softplus_grad(s.density_raw);
    if (d_density_raw != 0.0 || d_color_raw != Vec3{})
      work.sample_grads.push_back({s.node_index, s.p_canonical, d_density_raw, d_color_raw});
  }
}

}  // namespace

template <typename Real>
LossParts evaluate_batch(const BasicScene<Real>& scene, const DepthAlign& align, const TrainBatch& batch,
                         const LossWeights& weights, const SampleOptions& sampling, SceneGradients<Real>* grads) {
  batch.validate();
  const std::size_t n = batch.size();
  LossParts total;
  if (n == 0) return total;

  // Per-ray scratch reused across calls from the same thread. Worker threads
  // reach it through this reference, not through their own thread_local.
  static thread_local std::vector<RayWork> scratch;
  if (scratch.size() < n) scratch.resize(n);
  std::vector<RayWork>& work = scratch;

  const bool want_grads = grads != nullptr;
  parallel_for(0, n, [&](std::size_t r) {
    process_ray(scene, align, batch, weights, sampling, r, want_grads, work[r]);
  });

  if (want_grads && grads->fields.size() != scene.size()) grads->reset(scene);
  const auto nodes = scene.nodes();
  // Fixed ray order keeps the reduction independent of the worker count.
  for (std::size_t r = 0; r < n; ++r) {
    const RayWork& w = work[r];
    total.comp_rgb += w.parts.comp_rgb;
    total.bg_rgb += w.parts.bg_rgb;
    total.bg_depth += w.parts.bg_depth;
    total.obj_acc += w.parts.obj_acc;
    total.obj_rgb += w.parts.obj_rgb;
    if (!want_grads) continue;
    for (const SampleGrad& g : w.sample_grads) {
      const TrilinearStencil stencil = trilinear_stencil(nodes[g.node_index].field().resolution(), g.p_canonical);
      scatter_raw_grad(stencil, g.d_density_raw, g.d_color_raw, grads->fields[g.node_index]);
    }
    for (std::size_t k = 0; k < w.d_appearance.size(); ++k) {
      grads->appearance[k].gain += w.d_appearance[k].gain;
      grads->appearance[k].bias += w.d_appearance[k].bias;
    }
    grads->d_w += w.d_w;
    grads->d_q += w.d_q;
  }
  const double inv_b = 1.0 / static_cast<double>(n);
  total.comp_rgb *= inv_b;
  total.bg_rgb *= inv_b;
  total.bg_depth *= inv_b;
  total.obj_acc *= inv_b;
  total.obj_rgb *= inv_b;
  return total;
}

template struct SceneGradients<float>;
template struct SceneGradients<double>;
template LossParts evaluate_batch(const BasicScene<float>&, const DepthAlign&, const TrainBatch&, const LossWeights&,
                                  const SampleOptions&, SceneGradients<float>*);
template LossParts evaluate_batch(const BasicScene<double>&, const DepthAlign&, const TrainBatch&,
                                  const LossWeights&, const SampleOptions&, SceneGradients<double>*);

}  // namespace compsim
