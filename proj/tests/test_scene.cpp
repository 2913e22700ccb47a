// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "compsim/render.hpp"
#include "compsim/scene.hpp"
#include "test_util.hpp"

namespace compsim {
namespace {

using testing::box_at;

Scene empty_scene() {
  return Scene("s", SceneNode(NodeKind::Background, box_at({0, 0, 0}, {3, 3, 3}), VoxelField({4, 4, 4})));
}

SceneNode object_node(Vec3 center = {0, 0, 0}) {
  return SceneNode(NodeKind::Object, box_at(center, {0.5, 0.5, 0.5}), VoxelField({4, 4, 4}, 1.0, 0.2));
}

TEST(Scene, RequiresBackgroundKind) {
  EXPECT_THROW(Scene("s", object_node()), std::invalid_argument);
}

TEST(Scene, AddAssignsCounterIds) {
  Scene scene = empty_scene();
  EXPECT_EQ(scene.add_node(object_node()), 1);
  EXPECT_EQ(scene.add_node(object_node()), 2);
  EXPECT_NE(scene.find(1), nullptr);
  EXPECT_NE(scene.find(2), nullptr);
  EXPECT_EQ(scene.size(), 3u);
  EXPECT_GT(scene.next_id(), 2);
}

TEST(Scene, RejectsSecondBackground) {
  Scene scene = empty_scene();
  SceneNode bg = scene.background();
  EXPECT_THROW(scene.add_node(bg), std::invalid_argument);
}

TEST(Scene, RemoveRulesAndMonotoneCounter) {
  Scene scene = empty_scene();
  const int id = scene.add_node(object_node());
  EXPECT_THROW(scene.remove_node(0), std::invalid_argument);
  EXPECT_THROW(scene.remove_node(99), NotFoundError);
  scene.remove_node(id);
  EXPECT_EQ(scene.find(id), nullptr);
  EXPECT_EQ(scene.add_node(object_node()), id + 1);
}

TEST(Scene, RemovingOnlyObjectLeavesBackgroundRender) {
  Scene scene = empty_scene();
  const Camera cam = testing::test_camera(8, 8);
  const RenderedImage bg = render_image(scene, cam, {});
  const int id = scene.add_node(object_node());
  scene.remove_node(id);
  EXPECT_EQ(render_image(scene, cam, {}).rgb, bg.rgb);
}

TEST(Scene, ReplicateThenDeleteKeepsRender) {
  Scene scene = empty_scene();
  std::mt19937_64 rng(1);
  SceneNode node = object_node();
  testing::fill_random(node.mutable_field(), rng, -2, 3);
  const int original = scene.add_node(node);
  const Camera cam = testing::test_camera(12, 12);
  const RenderedImage before = render_image(scene, cam, {});
  const int copy = scene.add_node(scene.at(original));
  scene.remove_node(original);
  const RenderedImage after = render_image(scene, cam, {});
  EXPECT_EQ(before.rgb, after.rgb);
  EXPECT_EQ(before.depth, after.depth);
  EXPECT_NE(copy, original);
}

TEST(Scene, CopiesDoNotShareMutations) {
  Scene scene = empty_scene();
  const int id = scene.add_node(object_node());
  Scene copy = scene;
  EXPECT_TRUE(copy.at(id).shares_field_with(scene.at(id)));
  copy.at(id).mutable_field().density_raw()[0] = 42.0f;
  EXPECT_FALSE(copy.at(id).shares_field_with(scene.at(id)));
  EXPECT_EQ(scene.at(id).field().density_raw()[0], 1.0f);
}

TEST(Scene, RestoreReinsertsInIdOrder) {
  Scene scene = empty_scene();
  scene.add_node(object_node());
  scene.add_node(object_node());
  scene.add_node(object_node());
  SceneNode two = scene.at(2);
  scene.remove_node(2);
  scene.restore_node(two);
  ASSERT_EQ(scene.size(), 4u);
  EXPECT_EQ(scene.nodes()[2].id, 2);
  EXPECT_EQ(scene.add_node(object_node()), 4);
  EXPECT_THROW(scene.restore_node(scene.at(3)), std::invalid_argument);
}

TEST(Scene, CastPreservesIdsAndCounter) {
  Scene scene = empty_scene();
  scene.add_node(object_node());
  scene.add_node(object_node());
  scene.remove_node(2);
  const SceneD d = scene.cast<double>();
  EXPECT_EQ(d.next_id(), scene.next_id());
  EXPECT_EQ(d.size(), scene.size());
  EXPECT_EQ(d.at(1).field().density_raw()[5], 1.0);
}

TEST(Appearance, ClampsAffineCorrection) {
  Appearance a{{2, 1, 0.5}, {0.1, -0.2, 0}};
  const Rgb c = a.apply({0.6, 0.1, 0.4});
  EXPECT_DOUBLE_EQ(c.x, 1.0);
  EXPECT_DOUBLE_EQ(c.y, 0.0);
  EXPECT_DOUBLE_EQ(c.z, 0.2);
}

Embedding unit_axis_embedding(std::size_t axis) {
  Embedding e{};
  e[axis] = 1.0f;
  return e;
}

TEST(SemanticQuery, SelfSimilarityWins) {
  Scene scene = empty_scene();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 4; ++i) {
    SceneNode n = object_node();
    n.embedding = embedding_from_name("object " + std::to_string(i));
    scene.add_node(n);
  }
  EXPECT_EQ(semantic_query(scene, scene.at(3).embedding), 3);
}

TEST(SemanticQuery, OrthogonalConstruction) {
  Scene scene = empty_scene();
  for (std::size_t i = 0; i < 3; ++i) {
    SceneNode n = object_node();
    n.embedding = unit_axis_embedding(10 + i);
    scene.add_node(n);
  }
  EXPECT_EQ(semantic_query(scene, unit_axis_embedding(11)), 2);
}

TEST(SemanticQuery, TiesGoToLowestId) {
  Scene scene = empty_scene();
  for (int i = 0; i < 3; ++i) {
    SceneNode n = object_node();
    n.embedding = unit_axis_embedding(7);
    scene.add_node(n);
  }
  EXPECT_EQ(semantic_query(scene, unit_axis_embedding(7)), 1);
}

TEST(SemanticQuery, MatchesExhaustiveScanAndIgnoresScale) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> d;
  Scene scene = empty_scene();
  for (int i = 0; i < 12; ++i) {
    SceneNode n = object_node();
    for (auto& v : n.embedding) v = d(rng);
    scene.add_node(n);
  }
  for (int trial = 0; trial < 50; ++trial) {
    Embedding q{};
    for (auto& v : q) v = d(rng);
    int best = -1;
    double best_sim = -2.0;
    for (const auto& node : scene.nodes()) {
      if (node.is_background()) continue;
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
        ab += double(q[i]) * node.embedding[i];
        aa += double(q[i]) * q[i];
        bb += double(node.embedding[i]) * node.embedding[i];
      }
      const double sim = ab / std::sqrt(aa * bb);
      if (sim > best_sim) {
        best_sim = sim;
        best = node.id;
      }
    }
    EXPECT_EQ(semantic_query(scene, q), best);
    Embedding scaled = q;
    for (auto& v : scaled) v *= 7.5f;
    EXPECT_EQ(semantic_query(scene, scaled), best);
  }
}

TEST(SemanticQuery, NoObjectsIsNotFound) {
  Scene scene = empty_scene();
  EXPECT_THROW(semantic_query(scene, unit_axis_embedding(0)), NotFoundError);
}

TEST(EmbeddingFromName, DeterministicUnitVectors) {
  const Embedding a = embedding_from_name("red sphere");
  const Embedding b = embedding_from_name("red sphere");
  const Embedding c = embedding_from_name("blue sphere");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  double norm = 0;
  for (float v : a) norm += double(v) * v;
  EXPECT_NEAR(norm, 1.0, 1e-5);
}

}  // namespace
}  // namespace compsim
