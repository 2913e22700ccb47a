// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// Central-difference oracle for the training losses, shared by the unit tests
// and the acceptance binary.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "compsim/dataset.hpp"
#include "compsim/losses.hpp"
#include "test_util.hpp"

namespace compsim::testing {

struct GradFixture {
  SceneD scene;
  DepthAlign align;
  TrainBatch batch;
  SampleOptions sampling;
};

// Two 4^3 object boxes inside a 4^3 background, rays from a ring of viewpoints
// with a mix of object, background and undefined mask ids.
inline GradFixture make_grad_fixture(std::uint64_t seed, std::size_t rays = 12) {
  std::mt19937_64 rng(seed);
  const Resolution res{4, 4, 4};
  SceneD scene("mini", make_node<double>(NodeKind::Background, box_at({0, 0, 0}, {1.5, 1.5, 1.5}), res, 0, 0));
  scene.add_node(make_node<double>(NodeKind::Object, box_at({-0.5, 0.1, 0}, {0.45, 0.5, 0.4}, random_rotation(rng)),
                                   res, 0, 0));
  scene.add_node(make_node<double>(NodeKind::Object, box_at({0.6, -0.2, 0.1}, {0.4, 0.35, 0.5}), res, 0, 0));
  for (auto& node : scene.nodes()) fill_random(node.mutable_field(), rng, -1.5, 1.0, -1.5, 1.5);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& node : scene.nodes()) {
    node.appearance.gain = {0.8 + 0.3 * u(rng), 0.8 + 0.3 * u(rng), 0.8 + 0.3 * u(rng)};
    node.appearance.bias = {0.05 * u(rng), -0.05 * u(rng), 0.02 * u(rng)};
  }
  GradFixture fx{scene, {1.1, -0.2}, {}, {}};
  fx.sampling.n_per_node = 6;
  fx.sampling.jitter = true;
  fx.sampling.seed = seed * 31 + 7;
  const int masks[] = {1, 2, 0, 1, kMaskUndefined, 2};
  for (std::size_t r = 0; r < rays; ++r) {
    const double a = 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(rays);
    const Vec3 origin{4.0 * std::cos(a), 4.0 * std::sin(a), 0.6 * std::sin(3 * a)};
    const Vec3 target = random_vec(rng, -0.6, 0.6);
    fx.batch.rays.push_back(Ray{origin, normalize(target - origin)});
    fx.batch.gt_rgb.push_back(random_vec(rng, 0.1, 0.9));
    fx.batch.mask_ids.push_back(masks[r % 6]);
    fx.batch.inpaint_rgb.push_back(random_vec(rng, 0.1, 0.9));
    fx.batch.inpaint_depth.push_back(2.0 + 3.0 * u(rng));
  }
  return fx;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t nonzero = 0;
  std::string worst;
};

struct GradCheckClasses {
  bool density = true;
  bool color = true;
  bool align = true;
  bool appearance = true;
};

// Relative error |a - n| / max(|a|, |n|, 1e-6); the floor keeps roundoff in
// gradients that are zero on both sides from dominating.
inline GradCheckResult check_gradients(GradFixture fx, const LossWeights& weights, double h = 1e-5,
                                       GradCheckClasses classes = {}) {
  SceneGradients<double> grads;
  grads.reset(fx.scene);
  evaluate_batch(fx.scene, fx.align, fx.batch, weights, fx.sampling, &grads);
  auto loss = [&]() {
    return total_loss(evaluate_batch<double>(fx.scene, fx.align, fx.batch, weights, fx.sampling, nullptr), weights);
  };
  GradCheckResult result;
  auto compare = [&](double& param, double analytic, const std::string& label) {
    const double saved = param;
    param = saved + h;
    const double up = loss();
    param = saved - h;
    const double down = loss();
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    const double rel = std::abs(analytic - numeric) / scale;
    ++result.checked;
    if (std::abs(analytic) > 1e-9) ++result.nonzero;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = label + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
    }
  };
  auto nodes = fx.scene.nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    auto& field = nodes[k].mutable_field();
    const std::string tag = "node " + std::to_string(nodes[k].id);
    if (classes.density)
      for (std::size_t i = 0; i < field.density_raw().size(); ++i)
        compare(field.density_raw()[i], grads.fields[k].d_density_raw()[i], tag + " density[" + std::to_string(i) + "]");
    if (classes.color)
      for (std::size_t i = 0; i < field.color_raw().size(); ++i)
        compare(field.color_raw()[i], grads.fields[k].d_color_raw()[i], tag + " color[" + std::to_string(i) + "]");
    if (classes.appearance)
      for (int c = 0; c < 3; ++c) {
        compare(nodes[k].appearance.gain[c], grads.appearance[k].gain[c], tag + " gain");
        compare(nodes[k].appearance.bias[c], grads.appearance[k].bias[c], tag + " bias");
      }
  }
  if (classes.align) {
    compare(fx.align.w, grads.d_w, "w");
    compare(fx.align.q, grads.d_q, "q");
  }
  return result;
}

inline LossWeights only(double LossWeights::*term) {
  LossWeights w{0, 0, 0, 0, 0};
  w.*term = 1.0;
  return w;
}

}  // namespace compsim::testing
