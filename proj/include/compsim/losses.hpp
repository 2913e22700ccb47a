// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "compsim/field.hpp"
#include "compsim/geometry.hpp"
#include "compsim/render.hpp"
#include "compsim/scene.hpp"

namespace compsim {

// Learnable affine alignment of rendered background depth to the inpainted
// monocular depth.
struct DepthAlign {
  double w = 1.0;
  double q = 0.0;
};

// Weight of each loss term. The compositional term always enters with weight
// `comp` (1 in training); the others are lambda_1..lambda_4.
struct LossWeights {
  double comp = 1.0;
  double bg_rgb = 1.0;
  double bg_depth = 0.05;
  double obj_acc = 1.0;
  double obj_rgb = 1.0;
};

struct LossParts {
  double comp_rgb = 0.0;
  double bg_rgb = 0.0;
  double bg_depth = 0.0;
  double obj_acc = 0.0;
  double obj_rgb = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& weights);

// Supervision for a batch of rays; all arrays share the ray count.
struct TrainBatch {
  std::vector<Ray> rays;
  std::vector<Rgb> gt_rgb;
  std::vector<int> mask_ids;  // first-hit instance id, kMaskUndefined if unknown
  std::vector<Rgb> inpaint_rgb;
  std::vector<double> inpaint_depth;

  std::size_t size() const { return rays.size(); }
  void clear();
  // Throws std::invalid_argument when the arrays disagree in length.
  void validate() const;
};

// Per-object renders of a batch: renders[r * ids.size() + k] is object ids[k]
// seen along ray r.
struct ObjectRenders {
  std::vector<int> ids;
  std::vector<NodeRender> renders;
};

// Each returns the batch mean of its per-ray term.
double loss_comp_rgb(std::span<const PixelResult> pred, std::span<const Rgb> gt_rgb);
double loss_obj_acc(const ObjectRenders& objects, std::span<const int> mask_ids);
double loss_obj_rgb(const ObjectRenders& objects, std::span<const int> mask_ids, std::span<const Rgb> gt_rgb);
struct BackgroundLoss {
  double rgb = 0.0;
  double depth = 0.0;
};
BackgroundLoss loss_bg(std::span<const NodeRender> bg, std::span<const Rgb> inpaint_rgb,
                       std::span<const double> inpaint_depth, const DepthAlign& align);

// Gradients of a weighted loss with respect to every trainable quantity.
template <typename Real>
struct SceneGradients {
  std::vector<BasicGradBuffer<Real>> fields;  // by node index
  std::vector<Appearance> appearance;         // d/d gain and d/d bias, by node index
  double d_w = 0.0;
  double d_q = 0.0;

  void reset(const BasicScene<Real>& scene);
};

// Renders the batch (composite plus per-node), evaluates all five terms and,
// when `grads` is non-null, accumulates d(total_loss)/d(params) for the given
// weights. Ray r is sampled with seed mix_seed(sampling.seed, r). The result
// is independent of the worker count.
template <typename Real>
LossParts evaluate_batch(const BasicScene<Real>& scene, const DepthAlign& align, const TrainBatch& batch,
                         const LossWeights& weights, const SampleOptions& sampling, SceneGradients<Real>* grads);

}  // namespace compsim
