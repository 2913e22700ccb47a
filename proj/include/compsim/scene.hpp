// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsim/field.hpp"
#include "compsim/geometry.hpp"

namespace compsim {

inline constexpr int kBackgroundId = 0;
inline constexpr std::size_t kEmbeddingDim = 512;

using Embedding = std::array<float, kEmbeddingDim>;

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-channel exposure correction applied at query time.
struct Appearance {
  Vec3 gain{1, 1, 1};
  Vec3 bias{0, 0, 0};

  Rgb apply(Rgb c) const;
  friend bool operator==(const Appearance&, const Appearance&) = default;
};

enum class NodeKind { Background, Object };

// One independently trainable part of the scene. The field is held through a
// shared pointer and copied on first mutation, so copying a node or a scene is
// cheap while keeping value semantics.
template <typename Real>
class BasicSceneNode {
 public:
  using Field = BasicVoxelField<Real>;

  BasicSceneNode(NodeKind kind, OrientedBox bbox, Field field);

  NodeKind kind = NodeKind::Object;
  int id = kBackgroundId;
  std::string name;
  Embedding embedding{};
  OrientedBox bbox;
  Appearance appearance;
  bool selected = false;

  bool is_background() const { return kind == NodeKind::Background; }
  const Field& field() const { return *field_; }
  Field& mutable_field();
  void set_field(Field field);
  // True when both nodes currently share field storage.
  bool shares_field_with(const BasicSceneNode& other) const { return field_ == other.field_; }

 private:
  std::shared_ptr<Field> field_;
};

using SceneNode = BasicSceneNode<float>;

// Flat list of nodes: the background (id 0) first, then objects in id order.
template <typename Real>
class BasicScene {
 public:
  using Node = BasicSceneNode<Real>;

  // Throws std::invalid_argument unless `background` has NodeKind::Background.
  BasicScene(std::string name, Node background);

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<Node> nodes() { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  int next_id() const { return next_id_; }

  const Node& background() const { return nodes_.front(); }
  Node& background() { return nodes_.front(); }
  const Node* find(int id) const;
  Node* find(int id);
  // Throws NotFoundError.
  const Node& at(int id) const;
  Node& at(int id);
  std::optional<std::size_t> index_of(int id) const;

  // Inserts a copy of `node` under a fresh id and returns the id. Rejects a
  // second background with std::invalid_argument.
  int add_node(Node node);
  // Throws std::invalid_argument for the background and NotFoundError for
  // unknown ids.
  void remove_node(int id);
  // Reinserts a previously removed node under its original id (undo path).
  void restore_node(Node node);
  // Raises next_id() to at least `id`, so ids retired by deletions stay
  // retired after a reload.
  void reserve_ids(int id) { next_id_ = std::max(next_id_, id); }

  std::optional<int> selection() const;

  template <typename Other>
  BasicScene<Other> cast() const;

 private:
  template <typename>
  friend class BasicScene;

  std::string name_;
  std::vector<Node> nodes_;
  int next_id_ = 1;
};

using Scene = BasicScene<float>;
using SceneD = BasicScene<double>;

// Object whose embedding has the highest cosine similarity with the query;
// ties go to the lowest id. Throws NotFoundError when the scene has no objects.
template <typename Real>
int semantic_query(const BasicScene<Real>& scene, std::span<const float> query);

// Deterministic unit embedding derived from a name, for datasets that carry
// names but no precomputed features.
Embedding embedding_from_name(const std::string& name);

}  // namespace compsim
