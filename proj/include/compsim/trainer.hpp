// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "compsim/dataset.hpp"
#include "compsim/losses.hpp"
#include "compsim/optim.hpp"
#include "compsim/render.hpp"
#include "compsim/scene.hpp"

namespace compsim {

struct TrainConfig {
  long iterations = 30000;
  double lr_start = 1e-2;
  double lr_final = 1e-4;
  std::size_t batch_rays = 1024;
  LossWeights weights;
  std::uint64_t seed = 0;
  int n_per_node = kDefaultSamplesPerNode;
  // Appearance gain/bias stay fixed unless enabled.
  bool train_appearance = false;
  AdamConfig adam;
  // A loss record is kept every log_every iterations and at the last one.
  long log_every = 100;
  // Samples per node for the held-out evaluation at the end of training.
  int eval_n_per_node = kDefaultSamplesPerNode;

  // Throws std::invalid_argument for inconsistent settings.
  void validate() const;
};

std::string to_json(const TrainConfig& config);
// Missing keys keep their defaults. Throws std::invalid_argument on bad input.
TrainConfig train_config_from_json(const std::string& text);

struct TrainRecord {
  long iteration = 0;
  LossParts parts;
  double total = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
};

struct FrameMetrics {
  std::size_t frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalOptions {
  int n_per_node = kDefaultSamplesPerNode;
  bool held_out_only = true;
  // Per-node opacity above which a pixel counts as covered by the node.
  double opacity_threshold = 0.5;
};

struct EvalReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  // Per-node opacity mask vs. ground-truth mask, pooled over the frames.
  std::map<int, double> object_iou;
  double mean_object_iou = 0.0;
  // Background node vs. object-free images on pixels covered by objects;
  // NaN when no evaluated pixel is covered.
  double occluded_background_psnr = 0.0;
};

EvalReport evaluate(const Scene& scene, const SceneDataset& dataset, const EvalOptions& options = {});

struct TrainReport {
  TrainConfig config;
  std::vector<TrainRecord> records;
  EvalReport held_out;
  DepthAlign align;
  double wall_seconds = 0.0;

  bool empty() const { return records.empty(); }
  // One JSON object per record line followed by a {"summary": ...} line.
  std::string to_jsonl() const;
};

// Throws std::invalid_argument listing every dataset instance or mask id that
// has no node in the scene.
void check_dataset_matches_scene(const Scene& scene, const SceneDataset& dataset);

using TrainProgress = std::function<void(const TrainRecord&)>;

// Optimizes every node field (and the depth alignment) of `scene` against the
// training frames of `dataset`. Deterministic for a fixed seed regardless of
// the worker count. `align` carries the depth alignment in and out.
TrainReport train(Scene& scene, const SceneDataset& dataset, const TrainConfig& config, DepthAlign* align = nullptr,
                  const TrainProgress& progress = {});

}  // namespace compsim
