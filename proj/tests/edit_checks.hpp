// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// Randomized edit/undo replay, shared by the unit tests and the acceptance
// runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "compsim/edit.hpp"
#include "test_util.hpp"

namespace compsim::testing {

// Background plus three disjoint objects with random fields.
inline Scene algebra_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VoxelField bg_field({6, 6, 6});
  fill_random(bg_field, rng, -4, 0);
  Scene scene("algebra", SceneNode(NodeKind::Background, box_at({0, 0, 0}, {6, 6, 3}), bg_field));
  const Vec3 centers[] = {{-3, 0, 0}, {0, 2, 0.5}, {3, -1, -0.5}};
  const char* names[] = {"red ball", "blue ball", "green cube"};
  for (int i = 0; i < 3; ++i) {
    VoxelField f({5, 5, 5});
    fill_random(f, rng, -1, 3);
    SceneNode node(NodeKind::Object, box_at(centers[i], random_vec(rng, 0.4, 0.9), random_rotation(rng)), f);
    node.name = names[i];
    node.embedding = embedding_from_name(names[i]);
    scene.add_node(node);
  }
  return scene;
}

// Largest pose or half-extent difference between matching nodes; infinity
// when the scenes differ in ids, names, flags, embeddings or field bits.
inline double scene_distance(const Scene& a, const Scene& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const SceneNode& x = a.nodes()[i];
    const SceneNode& y = b.nodes()[i];
    if (x.id != y.id || x.kind != y.kind || x.name != y.name || x.selected != y.selected ||
        x.embedding != y.embedding || !(x.appearance == y.appearance) || !x.field().bitwise_equal(y.field()))
      return INFINITY;
    worst = std::max({worst, pose_distance(x.bbox.pose, y.bbox.pose),
                      max_abs_diff(x.bbox.half_extents, y.bbox.half_extents)});
  }
  return worst;
}

struct AlgebraReport {
  int sequences = 0;
  int applied = 0;
  int rejected = 0;
  double max_restore_error = 0.0;  // after replaying all inverses
  bool fields_untouched = true;    // geometric edits kept field bits
  bool swap_involution = true;
  bool background_rejected = true;
};

// Applies random command sequences to a fresh scene, then replays the
// returned inverses in reverse order and compares with the original.
inline AlgebraReport run_edit_algebra(int sequences, std::uint64_t seed) {
  AlgebraReport report;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> op_dist(0, 6), len_dist(1, 10), axis_dist(0, 2);
  std::uniform_real_distribution<double> dist(-2.0, 2.0), angle(-360.0, 360.0), factor(0.25, 4.0);
  const Scene original = algebra_scene(seed);

  for (int s = 0; s < sequences; ++s) {
    Scene scene = original;
    std::vector<EditCommand> inverses;
    const int length = len_dist(rng);
    for (int k = 0; k < length; ++k) {
      std::vector<int> ids;
      for (const SceneNode& n : scene.nodes()) ids.push_back(n.id);
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      EditCommand cmd;
      cmd.instance_id = ids[pick(rng)];
      const Axis axis = static_cast<Axis>(axis_dist(rng));
      switch (op_dist(rng)) {
        case 0:
          cmd.operation = Operation::Translate;
          cmd.config.axis = axis;
          cmd.config.distance = dist(rng);
          break;
        case 1:
          cmd.operation = Operation::Rotate;
          cmd.config.axis = axis;
          cmd.config.angle = angle(rng);
          break;
        case 2:
          cmd.operation = Operation::Scale;
          if (rng() % 2) cmd.config.axis = axis;
          cmd.config.factor = factor(rng);
          break;
        case 3: cmd.operation = Operation::Select; break;
        case 4:
          cmd.operation = Operation::Replicate;
          if (rng() % 2) {
            cmd.config.axis = axis;
            cmd.config.distance = dist(rng);
          }
          break;
        case 5: cmd.operation = Operation::Delete; break;
        default:
          cmd.operation = Operation::Swap;
          cmd.config.other_id = ids[pick(rng)];
          break;
      }

      const Scene before = scene;
      const CommandOutcome out = apply_command(scene, cmd);
      const bool touches_background =
          cmd.instance_id == kBackgroundId || (cmd.operation == Operation::Swap && cmd.config.other_id == kBackgroundId);
      if (touches_background) {
        if (out.applied() || scene_distance(scene, before) != 0.0) report.background_rejected = false;
        ++report.rejected;
        continue;
      }
      if (!out.applied() || !out.inverse) {
        report.max_restore_error = INFINITY;
        continue;
      }
      ++report.applied;
      if (cmd.operation == Operation::Translate || cmd.operation == Operation::Rotate ||
          cmd.operation == Operation::Scale) {
        const SceneNode& after = scene.at(cmd.instance_id);
        if (!after.shares_field_with(before.at(cmd.instance_id))) report.fields_untouched = false;
      }
      if (cmd.operation == Operation::Swap) {
        Scene twice = scene;
        if (!apply_command(twice, cmd).applied() || scene_distance(twice, before) != 0.0)
          report.swap_involution = false;
      }
      inverses.push_back(*out.inverse);
    }
    for (auto it = inverses.rbegin(); it != inverses.rend(); ++it) {
      if (!apply_command(scene, *it).applied()) report.max_restore_error = INFINITY;
    }
    report.max_restore_error = std::max(report.max_restore_error, scene_distance(scene, original));
    ++report.sequences;
  }
  return report;
}

}  // namespace compsim::testing
