// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/service.hpp"

#include <deque>
#include <utility>

namespace compsim {

struct SimService::Entry {
  std::mutex writer;
  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const Scene> scene;
  std::uint64_t revision = 0;
  std::deque<EditCommand> undo;  // guarded by writer
  std::optional<NameTable> names;

  SceneSnapshot snapshot() const {
    std::lock_guard lock(snapshot_mutex);
    return {scene, revision};
  }
  void publish(Scene s) {
    auto next = std::make_shared<const Scene>(std::move(s));
    std::lock_guard lock(snapshot_mutex);
    scene = std::move(next);
    ++revision;
  }
};

namespace {

ServiceError not_found(const std::string& name) {
  return ServiceError(404, "not_found", "unknown scene '" + name + "'");
}

CommandOutcome rejection(std::string reason) {
  CommandOutcome o;
  o.reason = std::move(reason);
  return o;
}

}  // namespace

SimService::SimService(ServiceConfig config) : config_(config) {}
SimService::~SimService() = default;

void SimService::add_scene(Scene scene, std::optional<NameTable> names) {
  auto e = std::make_unique<Entry>();
  const std::string name = scene.name();
  e->scene = std::make_shared<const Scene>(std::move(scene));
  e->names = std::move(names);
  std::lock_guard lock(registry_mutex_);
  if (scenes_.count(name)) throw ServiceError(409, "conflict", "scene '" + name + "' is already loaded");
  scenes_.emplace(name, std::move(e));
}

SimService::Entry& SimService::entry(const std::string& name) const {
  std::lock_guard lock(registry_mutex_);
  const auto it = scenes_.find(name);
  if (it == scenes_.end()) throw not_found(name);
  return *it->second;
}

std::vector<SceneSummary> SimService::list_scenes() const {
  std::vector<std::pair<std::string, Entry*>> entries;
  {
    std::lock_guard lock(registry_mutex_);
    for (const auto& [name, e] : scenes_) entries.emplace_back(name, e.get());
  }
  std::vector<SceneSummary> out;
  for (const auto& [name, e] : entries) {
    const SceneSnapshot s = e->snapshot();
    out.push_back({name, s.revision, s.scene->size()});
  }
  return out;
}

SceneSnapshot SimService::snapshot(const std::string& name) const { return entry(name).snapshot(); }

RenderResponse SimService::handle_render(const RenderRequest& req) {
  const SceneSnapshot snap = snapshot(req.scene);
  const Camera& cam = req.camera;
  if (cam.width < 1 || cam.height < 1 || cam.width > config_.max_width || cam.height > config_.max_height)
    throw ServiceError(422, "invalid_request",
                       "image size " + std::to_string(cam.width) + "x" + std::to_string(cam.height) +
                           " outside 1x1.." + std::to_string(config_.max_width) + "x" +
                           std::to_string(config_.max_height));
  if (req.n_per_node < 1 || req.n_per_node > config_.max_samples_per_node)
    throw ServiceError(422, "invalid_request",
                       "n_per_node must be in [1, " + std::to_string(config_.max_samples_per_node) + "]");

  auto cancel = std::make_shared<std::atomic<bool>>(false);
  if (!req.view_id.empty()) {
    std::lock_guard lock(cancel_mutex_);
    auto& slot = in_flight_[req.scene + "\n" + req.view_id];
    if (slot) slot->store(true);
    slot = cancel;
  }
  RenderSettings settings;
  settings.channels = req.channels;
  settings.sampling.n_per_node = req.n_per_node;
  settings.sampling.seed = req.seed;
  settings.sampling.highlight = true;
  settings.cancel = cancel.get();

  RenderResponse out;
  out.revision = snap.revision;
  try {
    out.image = render_image(*snap.scene, cam, settings);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(422, "invalid_request", e.what());
  }
  if (!req.view_id.empty()) {
    std::lock_guard lock(cancel_mutex_);
    const auto it = in_flight_.find(req.scene + "\n" + req.view_id);
    if (it != in_flight_.end() && it->second == cancel) in_flight_.erase(it);
  }
  if (out.image.canceled) throw ServiceError(409, "canceled", "render superseded by a newer request for this view");
  return out;
}

EditResponse SimService::commit(const std::string& primary, const std::string& other,
                                const std::function<CommandOutcome(Scene&, Scene*, EditCommand&)>& op,
                                bool record_undo) {
  Entry& a = entry(primary);
  Entry* b = other.empty() || other == primary ? nullptr : &entry(other);
  EditResponse response;
  std::vector<RevisionEvent> events;
  {
    std::unique_lock<std::mutex> lock_a(a.writer, std::defer_lock), lock_b;
    if (b) {
      lock_b = std::unique_lock<std::mutex>(b->writer, std::defer_lock);
      std::lock(lock_a, lock_b);
    } else {
      lock_a.lock();
    }
    Scene work = *a.snapshot().scene;
    std::optional<Scene> work_b;
    if (b) work_b.emplace(*b->snapshot().scene);

    response.outcome = op(work, work_b ? &*work_b : nullptr, response.command);
    if (response.outcome.applied()) {
      a.publish(std::move(work));
      events.push_back({primary, a.snapshot().revision});
      if (b && response.command.operation == Operation::Swap) {
        b->publish(std::move(*work_b));
        events.push_back({other, b->snapshot().revision});
      }
      if (record_undo && response.outcome.inverse) {
        a.undo.push_back(*response.outcome.inverse);
        if (a.undo.size() > config_.undo_depth) a.undo.pop_front();
      }
    }
    response.revision = a.snapshot().revision;
  }
  notify(events);
  return response;
}

EditResponse SimService::handle_edit(const EditRequest& req) {
  Entry& e = entry(req.scene);
  // A syntactic pass finds the other scene a command refers to, so both
  // writer locks can be taken before targets are resolved.
  EditCommand shape;
  if (req.text)
    shape = parse_command(*req.text);
  else if (req.command)
    shape = *req.command;
  else
    throw ServiceError(400, "bad_request", "edit request needs text or a command");
  const std::string& ref = shape.config.source_scene;
  const bool other_writes = shape.operation == Operation::Swap && !ref.empty();
  // Add only reads its source; a snapshot is enough.
  std::optional<Scene> source_copy;
  if (shape.operation == Operation::Add && !ref.empty() && ref != req.scene)
    source_copy.emplace(*snapshot(ref).scene);

  return commit(
      req.scene, other_writes ? ref : std::string(),
      [&](Scene& work, Scene* other, EditCommand& cmd) {
        const NameTable* names = e.names ? &*e.names : nullptr;
        cmd = req.text ? parse_command(*req.text, work, names) : *req.command;
        EditContext ctx;
        ctx.names = names;
        ctx.find_scene = [&](const std::string& name) -> Scene* {
          if (name == req.scene) return &work;
          if (other && name == ref) return other;
          if (source_copy && name == ref) return &*source_copy;
          return nullptr;
        };
        return apply_command(work, cmd, ctx);
      },
      true);
}

EditResponse SimService::handle_undo(const std::string& scene) {
  Entry& e = entry(scene);
  for (;;) {
    std::optional<EditCommand> top;
    {
      std::lock_guard lock(e.writer);
      if (!e.undo.empty()) top = e.undo.back();
    }
    if (!top) {
      EditResponse r;
      r.outcome = rejection("nothing to undo");
      r.revision = e.snapshot().revision;
      return r;
    }
    const std::string other = top->operation == Operation::Swap ? top->config.source_scene : std::string();
    bool stale = false;
    EditResponse r = commit(
        scene, other,
        [&](Scene& work, Scene* other_scene, EditCommand& cmd) {
          if (e.undo.empty() || !(e.undo.back() == *top)) {
            stale = true;
            return rejection("undo stack changed");
          }
          cmd = *top;
          EditContext ctx;
          ctx.find_scene = [&](const std::string& name) -> Scene* {
            if (name == scene) return &work;
            return other_scene && name == other ? other_scene : nullptr;
          };
          CommandOutcome out = apply_command(work, cmd, ctx);
          if (out.applied()) e.undo.pop_back();
          return out;
        },
        false);
    if (!stale) return r;
  }
}

EditResponse SimService::handle_import(const std::string& target, const std::string& source, int source_id,
                                       const PoseSE3& placement, double scale) {
  const SceneSnapshot src = snapshot(source);
  return commit(
      target, std::string(),
      [&](Scene& work, Scene*, EditCommand& cmd) {
        // Descriptive command for the response; the pose comes from `placement`.
        cmd.operation = Operation::Add;
        cmd.instance_id = source_id;
        cmd.config.source_scene = source;
        cmd.config.position = placement.apply(src.scene->find(source_id) ? src.scene->at(source_id).bbox.pose.translation
                                                                          : Vec3{});
        if (scale != 1.0) cmd.config.factor = scale;
        return cross_scene_add(work, *src.scene, source_id, placement, scale);
      },
      true);
}

PickResponse SimService::handle_pick(const PickRequest& req) {
  const SceneSnapshot snap = snapshot(req.scene);
  if (req.x < 0 || req.y < 0 || req.x >= req.camera.width || req.y >= req.camera.height)
    throw ServiceError(422, "invalid_request", "pixel outside the image");
  if (req.n_per_node < 1 || req.n_per_node > config_.max_samples_per_node)
    throw ServiceError(422, "invalid_request", "n_per_node out of range");
  SampleOptions opts;
  opts.n_per_node = req.n_per_node;
  PickResponse out;
  try {
    out.instance_id = scene_pick(*snap.scene, req.camera, req.x, req.y, opts);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(422, "invalid_request", e.what());
  }
  out.revision = snap.revision;
  if (out.instance_id) out.highlighted = snap.scene->at(*out.instance_id).selected;
  if (req.select && out.instance_id) {
    EditRequest edit;
    edit.scene = req.scene;
    edit.command = EditCommand{};
    edit.command->operation = Operation::Select;
    edit.command->instance_id = *out.instance_id;
    const EditResponse r = handle_edit(edit);
    out.revision = r.revision;
    if (r.outcome.applied()) {
      const SceneSnapshot after = snapshot(req.scene);
      const SceneNode* n = after.scene->find(*out.instance_id);
      out.highlighted = n && n->selected;
    }
  }
  return out;
}

int SimService::subscribe(Listener listener) {
  std::lock_guard lock(listener_mutex_);
  listeners_.emplace(next_token_, std::move(listener));
  return next_token_++;
}

void SimService::unsubscribe(int token) {
  std::lock_guard lock(listener_mutex_);
  listeners_.erase(token);
}

void SimService::notify(const std::vector<RevisionEvent>& events) {
  if (events.empty()) return;
  std::vector<Listener> targets;
  {
    std::lock_guard lock(listener_mutex_);
    for (const auto& [token, l] : listeners_) targets.push_back(l);
  }
  for (const RevisionEvent& ev : events)
    for (const Listener& l : targets) l(ev);
}

}  // namespace compsim
