// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "compsim/dataset.hpp"
#include "compsim/geometry.hpp"
#include "compsim/scene.hpp"

namespace compsim {

enum class Operation { Translate, Rotate, Scale, Select, Replicate, Delete, Add, Swap };

std::string_view to_string(Operation op);
// Accepts the canonical names above in lower case; throws std::invalid_argument.
Operation operation_from_string(std::string_view name);

// How a command names its node.
enum class Selector {
  Id,    // instance_id as given
  It,    // the scene's current selection
  Name,  // `name`, resolved through a name-embedding table
};

struct EditConfig {
  std::optional<Axis> axis;
  std::optional<double> distance;  // meters; translate, replicate offset
  std::optional<double> angle;     // degrees; rotate
  std::optional<double> factor;    // scale, add
  // add: source scene and optional placement. The new box center goes to
  // `position` (default: the source center) and is turned by `yaw` degrees
  // about world z.
  std::string source_scene;
  std::optional<Vec3> position;
  std::optional<double> yaw;
  // swap: the partner node, in `source_scene` when that is non-empty.
  Selector other_selector = Selector::Id;
  int other_id = 0;
  std::string other_name;

  friend bool operator==(const EditConfig&, const EditConfig&) = default;
};

struct EditCommand {
  Operation operation = Operation::Select;
  Selector selector = Selector::Id;
  int instance_id = 0;
  std::string name;
  EditConfig config;
  // Undo payload of a delete: the removed node, reinserted under its own id.
  // Not expressible in the command language.
  std::shared_ptr<const SceneNode> restore;

  friend bool operator==(const EditCommand& a, const EditCommand& b) {
    return a.operation == b.operation && a.selector == b.selector && a.instance_id == b.instance_id &&
           a.name == b.name && a.config == b.config && a.restore == b.restore;
  }
};

// Throws std::invalid_argument when a field the operation needs is missing or
// not finite, or a factor is not positive.
void validate(const EditCommand& cmd);

// Syntax errors and unresolvable targets. `position` is a byte offset into
// the input; `expected` lists the tokens that would have been accepted.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, std::string message, std::vector<std::string> expected);
  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string message_;
  std::vector<std::string> expected_;
};

// Case-insensitive map from object names to embeddings.
class NameTable {
 public:
  NameTable() = default;
  // Names and embeddings of every object node.
  static NameTable from_scene(const Scene& scene);
  static NameTable from_dataset(const SceneDataset& dataset);

  void add(const std::string& name, const Embedding& embedding);
  const Embedding* find(std::string_view name) const;
  bool empty() const { return table_.empty(); }

 private:
  std::map<std::string, Embedding> table_;
};

// Parses one command; targets are left as written (`#3`, `it`, a name).
EditCommand parse_command(std::string_view text);
// Parses and resolves `it` and names against `scene`, so the result always
// has Selector::Id. Names are looked up in `names` (the scene's own table
// when null) and matched by semantic_query.
EditCommand parse_command(std::string_view text, const Scene& scene, const NameTable* names = nullptr);

// Canonical text; parse_command(format_command(c)) == c for any command
// without a restore payload. Throws std::invalid_argument for payload
// commands.
std::string format_command(const EditCommand& cmd);

enum class OutcomeStatus { Applied, Rejected };

struct CommandOutcome {
  OutcomeStatus status = OutcomeStatus::Rejected;
  std::vector<int> affected_ids;
  std::string reason;
  std::optional<EditCommand> inverse;

  bool applied() const { return status == OutcomeStatus::Applied; }
};

struct EditContext {
  // Other loaded scenes, by name, for add and cross-scene swap.
  std::function<Scene*(const std::string&)> find_scene;
  const NameTable* names = nullptr;
};

// Applies `cmd` to `scene`. Geometric edits change only the target's box:
// translate moves the center along a world axis, rotate turns the box about
// its center around one of its own axes, and scale multiplies the half
// extents on one axis (all axes when none is given). Field parameters are
// never touched. Invalid requests come back Rejected with a reason.
CommandOutcome apply_command(Scene& scene, const EditCommand& cmd, const EditContext& ctx = {});

// Inserts a copy of source node `source_id` into `target` under a fresh id.
// The new box pose is placement * source pose and its half extents are
// scaled by `scale`.
CommandOutcome cross_scene_add(Scene& target, const Scene& source, int source_id, const PoseSE3& placement,
                               double scale = 1.0);

// Exchanges two nodes: each slot keeps its id, box and selection flag, and
// receives the other node's field, embedding, name and appearance. The
// scenes may be the same object.
CommandOutcome swap_nodes(Scene& scene_a, int id_a, Scene& scene_b, int id_b);

// Interactive key bindings.
enum class KeyAction { Translate, Rotate, Scale, Select, Replicate, Delete, CrossScene, Add, Swap };

struct KeyBinding {
  std::string_view key;  // KeyboardEvent.key value
  KeyAction action;
  std::string_view label;
};

std::span<const KeyBinding> keymap();
std::optional<KeyAction> action_for_key(std::string_view key);

}  // namespace compsim
