// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "compsim/edit.hpp"
#include "compsim/render.hpp"
#include "compsim/scene.hpp"

namespace compsim {

// Errors that map onto HTTP status classes.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceConfig {
  int max_width = 1920;
  int max_height = 1080;
  int max_samples_per_node = 512;
  // Undo entries kept per scene; older ones are dropped.
  std::size_t undo_depth = 256;
};

// An immutable scene state and the revision it was committed at.
struct SceneSnapshot {
  std::shared_ptr<const Scene> scene;
  std::uint64_t revision = 0;
};

struct SceneSummary {
  std::string name;
  std::uint64_t revision = 0;
  std::size_t node_count = 0;
};

struct RenderRequest {
  std::string scene;
  Camera camera;
  unsigned channels = kChannelsDefault;
  int n_per_node = kDefaultSamplesPerNode;
  std::uint64_t seed = 0;
  // A new request with the same non-empty view id cancels the one in flight.
  std::string view_id;
};

struct RenderResponse {
  RenderedImage image;
  std::uint64_t revision = 0;
};

struct EditRequest {
  std::string scene;
  // Exactly one of the two is used; text wins when both are set.
  std::optional<std::string> text;
  std::optional<EditCommand> command;
};

struct EditResponse {
  CommandOutcome outcome;
  // The scene revision after the request; unchanged on rejection.
  std::uint64_t revision = 0;
  // The command as applied, with targets resolved to ids.
  EditCommand command;
};

struct PickRequest {
  std::string scene;
  Camera camera;
  int x = 0;
  int y = 0;
  int n_per_node = kDefaultSamplesPerNode;
  // Toggle the picked node's selection through a regular select edit.
  bool select = false;
};

struct PickResponse {
  std::optional<int> instance_id;
  bool highlighted = false;
  std::uint64_t revision = 0;
};

struct RevisionEvent {
  std::string scene;
  std::uint64_t revision = 0;
};

// Thread-safe host for named scenes. Each scene has one writer lock; edits
// copy the current snapshot, apply, and publish the copy with the next
// revision, so readers always see whole states. Renders and picks run on
// snapshots without holding any lock.
class SimService {
 public:
  using Listener = std::function<void(const RevisionEvent&)>;

  explicit SimService(ServiceConfig config = {});
  ~SimService();
  SimService(const SimService&) = delete;
  SimService& operator=(const SimService&) = delete;

  const ServiceConfig& config() const { return config_; }

  // Registers a scene under scene.name() at revision 0. `names` overrides the
  // name table built from the scene's own nodes. Throws ServiceError (409)
  // for a duplicate name.
  void add_scene(Scene scene, std::optional<NameTable> names = std::nullopt);
  std::vector<SceneSummary> list_scenes() const;
  // Throws ServiceError (404) for unknown scenes.
  SceneSnapshot snapshot(const std::string& name) const;

  // Throws ServiceError: 404 unknown scene, 422 oversize or invalid request.
  RenderResponse handle_render(const RenderRequest& req);
  // Throws ParseError for malformed text and ServiceError for unknown scenes.
  EditResponse handle_edit(const EditRequest& req);
  // Applies the most recent stored inverse; rejected when there is none.
  EditResponse handle_undo(const std::string& scene);
  EditResponse handle_import(const std::string& target, const std::string& source, int source_id,
                             const PoseSE3& placement, double scale = 1.0);
  PickResponse handle_pick(const PickRequest& req);

  // Listeners are called after each commit, outside the scene locks, from the
  // committing thread.
  int subscribe(Listener listener);
  void unsubscribe(int token);

 private:
  struct Entry;

  Entry& entry(const std::string& name) const;
  // Runs `op` on working copies of `primary` and, when non-empty, `other`,
  // under both writer locks. Applied results are published; `record_undo`
  // pushes the inverse onto the primary scene's undo stack.
  EditResponse commit(const std::string& primary, const std::string& other,
                      const std::function<CommandOutcome(Scene&, Scene*, EditCommand&)>& op, bool record_undo);
  void notify(const std::vector<RevisionEvent>& events);

  ServiceConfig config_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<Entry>> scenes_;

  std::mutex cancel_mutex_;
  std::map<std::string, std::shared_ptr<std::atomic<bool>>> in_flight_;

  std::mutex listener_mutex_;
  std::map<int, Listener> listeners_;
  int next_token_ = 1;
};

}  // namespace compsim
