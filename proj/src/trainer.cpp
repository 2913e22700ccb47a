// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "compsim/metrics.hpp"

namespace compsim {

using nlohmann::json;

void TrainConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(lr_start > 0.0) || !(lr_final > 0.0) || !(lr_final < lr_start))
    throw std::invalid_argument("learning rates must satisfy 0 < lr_final < lr_start");
  if (batch_rays == 0) throw std::invalid_argument("batch_rays must be positive");
  if (n_per_node < 1 || eval_n_per_node < 1) throw std::invalid_argument("samples per node must be at least 1");
  if (log_every < 1) throw std::invalid_argument("log_every must be positive");
  const LossWeights& w = weights;
  for (double v : {w.comp, w.bg_rgb, w.bg_depth, w.obj_acc, w.obj_rgb})
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be finite and non-negative");
}

namespace {

json weights_json(const LossWeights& w) {
  return {{"comp", w.comp}, {"bg_rgb", w.bg_rgb}, {"bg_depth", w.bg_depth}, {"obj_acc", w.obj_acc}, {"obj_rgb", w.obj_rgb}};
}

json config_json(const TrainConfig& c) {
  return {{"iterations", c.iterations},
          {"lr_start", c.lr_start},
          {"lr_final", c.lr_final},
          {"batch_rays", c.batch_rays},
          {"weights", weights_json(c.weights)},
          {"seed", c.seed},
          {"n_per_node", c.n_per_node},
          {"train_appearance", c.train_appearance},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"log_every", c.log_every},
          {"eval_n_per_node", c.eval_n_per_node}};
}

json parts_json(const LossParts& p) {
  return {{"comp_rgb", p.comp_rgb}, {"bg_rgb", p.bg_rgb}, {"bg_depth", p.bg_depth}, {"obj_acc", p.obj_acc},
          {"obj_rgb", p.obj_rgb}};
}

// NaN and infinities are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string to_json(const TrainConfig& config) { return config_json(config).dump(2); }

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
    read_key(j, "iterations", c.iterations);
    read_key(j, "lr_start", c.lr_start);
    read_key(j, "lr_final", c.lr_final);
    read_key(j, "batch_rays", c.batch_rays);
    read_key(j, "seed", c.seed);
    read_key(j, "n_per_node", c.n_per_node);
    read_key(j, "train_appearance", c.train_appearance);
    read_key(j, "log_every", c.log_every);
    read_key(j, "eval_n_per_node", c.eval_n_per_node);
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      read_key(w, "comp", c.weights.comp);
      read_key(w, "bg_rgb", c.weights.bg_rgb);
      read_key(w, "bg_depth", c.weights.bg_depth);
      read_key(w, "obj_acc", c.weights.obj_acc);
      read_key(w, "obj_rgb", c.weights.obj_rgb);
    }
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      read_key(a, "beta1", c.adam.beta1);
      read_key(a, "beta2", c.adam.beta2);
      read_key(a, "eps", c.adam.eps);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string TrainReport::to_jsonl() const {
  std::ostringstream out;
  for (const TrainRecord& r : records) {
    const json line = {{"iteration", r.iteration}, {"loss", parts_json(r.parts)}, {"total", r.total},
                       {"lr", r.lr},               {"wall_s", r.wall_seconds}};
    out << line.dump() << '\n';
  }
  json views = json::array();
  for (const FrameMetrics& f : held_out.frames)
    views.push_back({{"frame", f.frame}, {"psnr", number(f.psnr)}, {"ssim", number(f.ssim)}});
  json iou = json::object();
  for (const auto& [id, v] : held_out.object_iou) iou[std::to_string(id)] = number(v);
  const json summary = {{"summary",
                         {{"config", config_json(config)},
                          {"held_out", views},
                          {"mean_psnr", number(held_out.mean_psnr)},
                          {"mean_ssim", number(held_out.mean_ssim)},
                          {"object_iou", iou},
                          {"occluded_background_psnr", number(held_out.occluded_background_psnr)},
                          {"align", {{"w", align.w}, {"q", align.q}}},
                          {"wall_s", wall_seconds}}}};
  out << summary.dump() << '\n';
  return out.str();
}

void check_dataset_matches_scene(const Scene& scene, const SceneDataset& dataset) {
  std::set<int> missing;
  for (const InstanceInfo& inst : dataset.instances)
    if (!scene.find(inst.id)) missing.insert(inst.id);
  for (const Frame& f : dataset.frames)
    for (int id : f.mask)
      if (id != kMaskUndefined && !scene.find(id)) missing.insert(id);
  if (missing.empty()) return;
  std::string ids;
  for (int id : missing) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
  throw std::invalid_argument("dataset ids without a scene node: " + ids);
}

EvalReport evaluate(const Scene& scene, const SceneDataset& dataset, const EvalOptions& options) {
  EvalReport report;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.mean_psnr = report.mean_ssim = report.mean_object_iou = report.occluded_background_psnr = nan;

  struct Counts {
    std::size_t inter = 0;
    std::size_t uni = 0;
  };
  std::map<int, Counts> counts;
  for (const auto& node : scene.nodes())
    if (!node.is_background()) counts[node.id] = {};
  double occluded_sq = 0.0;
  std::size_t occluded_n = 0;

  RenderSettings settings;
  settings.channels = kChannelRgb | kChannelPerNode;
  settings.sampling.n_per_node = options.n_per_node;

  for (std::size_t fi = 0; fi < dataset.frames.size(); ++fi) {
    const Frame& frame = dataset.frames[fi];
    if (options.held_out_only && !frame.held_out) continue;
    const RenderedImage img = render_image(scene, frame.camera, settings);
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    std::vector<double> gt(frame.rgb.data.begin(), frame.rgb.data.end());
    FrameMetrics m;
    m.frame = fi;
    m.psnr = psnr(img.rgb, gt);
    m.ssim = ssim(img.rgb, gt, img.width, img.height, 3);
    report.frames.push_back(m);

    for (const NodeImage& ni : img.per_node) {
      const bool background = ni.id == kBackgroundId;
      auto it = counts.find(ni.id);
      for (std::size_t p = 0; p < pixels; ++p) {
        const int mask = frame.mask.empty() ? kMaskUndefined : frame.mask[p];
        if (mask == kMaskUndefined) continue;
        if (background) {
          if (mask == kBackgroundId || frame.inpaint_rgb.data.empty()) continue;
          for (int c = 0; c < 3; ++c) {
            const double d = ni.rgb[3 * p + c] - frame.inpaint_rgb.data[3 * p + c];
            occluded_sq += d * d;
          }
          occluded_n += 3;
        } else if (it != counts.end()) {
          const bool pred = ni.opacity[p] > options.opacity_threshold;
          const bool truth = mask == ni.id;
          it->second.inter += pred && truth;
          it->second.uni += pred || truth;
        }
      }
    }
  }

  if (!report.frames.empty()) {
    double ps = 0.0, ss = 0.0;
    for (const FrameMetrics& f : report.frames) {
      ps += f.psnr;
      ss += f.ssim;
    }
    report.mean_psnr = ps / static_cast<double>(report.frames.size());
    report.mean_ssim = ss / static_cast<double>(report.frames.size());
    double iou_sum = 0.0;
    for (const auto& [id, c] : counts) {
      const double v = c.uni == 0 ? 1.0 : static_cast<double>(c.inter) / static_cast<double>(c.uni);
      report.object_iou[id] = v;
      iou_sum += v;
    }
    if (!counts.empty()) report.mean_object_iou = iou_sum / static_cast<double>(counts.size());
    if (occluded_n > 0) report.occluded_background_psnr = psnr_from_mse(occluded_sq / static_cast<double>(occluded_n));
  }
  return report;
}

namespace {

struct NodeOptim {
  AdamState<float> density;
  AdamState<float> color;
  AdamState<double> appearance;
};

std::array<double, 6> pack(const Appearance& a) {
  return {a.gain.x, a.gain.y, a.gain.z, a.bias.x, a.bias.y, a.bias.z};
}

void unpack(const std::array<double, 6>& v, Appearance& a) {
  a.gain = {v[0], v[1], v[2]};
  a.bias = {v[3], v[4], v[5]};
}

// Gains must stay strictly positive.
constexpr double kMinGain = 1e-3;

}  // namespace

TrainReport train(Scene& scene, const SceneDataset& dataset, const TrainConfig& config, DepthAlign* align_io,
                  const TrainProgress& progress) {
  config.validate();
  check_dataset_matches_scene(scene, dataset);

  TrainReport report;
  report.config = config;
  DepthAlign align = align_io ? *align_io : DepthAlign{};
  report.align = align;
  if (config.iterations == 0) return report;

  struct PixelRef {
    std::uint32_t frame;
    std::uint32_t pixel;
  };
  std::vector<std::size_t> train_frames;
  for (std::size_t i = 0; i < dataset.frames.size(); ++i)
    if (!dataset.frames[i].held_out) train_frames.push_back(i);
  if (train_frames.empty()) throw std::invalid_argument("dataset has no training frames");
  for (std::size_t fi : train_frames) {
    const Frame& f = dataset.frames[fi];
    const std::size_t pixels = static_cast<std::size_t>(f.camera.width) * f.camera.height;
    if (f.rgb.data.size() != 3 * pixels || f.mask.size() != pixels || f.inpaint_rgb.data.size() != 3 * pixels ||
        f.inpaint_depth.size() != pixels)
      throw std::invalid_argument("frame " + std::to_string(fi) + " is missing supervision images");
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  std::vector<NodeOptim> optim;
  for (const auto& node : scene.nodes())
    optim.push_back({AdamState<float>(node.field().voxel_count()), AdamState<float>(3 * node.field().voxel_count()),
                     AdamState<double>(6)});
  AdamState<double> align_optim(2);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_frame(0, train_frames.size() - 1);

  TrainBatch batch;
  SceneGradients<float> grads;
  for (long it = 0; it < config.iterations; ++it) {
    batch.clear();
    for (std::size_t r = 0; r < config.batch_rays; ++r) {
      const Frame& f = dataset.frames[train_frames[pick_frame(rng)]];
      const std::size_t pixels = static_cast<std::size_t>(f.camera.width) * f.camera.height;
      const std::size_t p = std::uniform_int_distribution<std::size_t>(0, pixels - 1)(rng);
      const double px = static_cast<double>(p % f.camera.width) + 0.5;
      const double py = static_cast<double>(p / f.camera.width) + 0.5;
      batch.rays.push_back(pixel_ray(f.camera, px, py));
      batch.gt_rgb.push_back(f.rgb.at(p));
      batch.mask_ids.push_back(f.mask[p]);
      batch.inpaint_rgb.push_back(f.inpaint_rgb.at(p));
      batch.inpaint_depth.push_back(f.inpaint_depth[p]);
    }

    SampleOptions sampling;
    sampling.n_per_node = config.n_per_node;
    sampling.jitter = true;
    sampling.seed = mix_seed(config.seed, static_cast<std::uint64_t>(it));

    grads.reset(scene);
    const LossParts parts = evaluate_batch(scene, align, batch, config.weights, sampling, &grads);
    const double lr = exponential_lr(config.lr_start, config.lr_final, it, config.iterations);

    auto nodes = scene.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      auto& field = nodes[k].mutable_field();
      optim[k].density.update(field.density_raw(), grads.fields[k].d_density_raw(), lr, config.adam);
      optim[k].color.update(field.color_raw(), grads.fields[k].d_color_raw(), lr, config.adam);
      if (config.train_appearance) {
        auto values = pack(nodes[k].appearance);
        const auto g = pack(grads.appearance[k]);
        optim[k].appearance.update(values, g, lr, config.adam);
        for (int c = 0; c < 3; ++c) values[c] = std::max(values[c], kMinGain);
        unpack(values, nodes[k].appearance);
      }
    }
    if (config.weights.bg_depth > 0.0) {
      std::array<double, 2> wq{align.w, align.q};
      const std::array<double, 2> g{grads.d_w, grads.d_q};
      align_optim.update(wq, g, lr, config.adam);
      align.w = wq[0];
      align.q = wq[1];
    }

    if (it % config.log_every == 0 || it + 1 == config.iterations) {
      TrainRecord rec{it, parts, total_loss(parts, config.weights), lr, elapsed()};
      report.records.push_back(rec);
      if (progress) progress(rec);
    }
  }

  report.align = align;
  if (align_io) *align_io = align;
  EvalOptions eval;
  eval.n_per_node = config.eval_n_per_node;
  report.held_out = evaluate(scene, dataset, eval);
  report.wall_seconds = elapsed();
  return report;
}

}  // namespace compsim
