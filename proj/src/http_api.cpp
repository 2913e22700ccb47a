// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/http_api.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <set>
#include <thread>

#include "compsim/image_io.hpp"
#include "json_util.hpp"

namespace compsim {

using nlohmann::json;

namespace {

std::string base64(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t n = (std::uint32_t{bytes[i]} << 16) |
                            (i + 1 < bytes.size() ? std::uint32_t{bytes[i + 1]} << 8 : 0) |
                            (i + 2 < bytes.size() ? std::uint32_t{bytes[i + 2]} : 0);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kAlphabet[n & 63] : '=';
  }
  return out;
}

std::string base64_floats(const std::vector<double>& values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  return base64(bytes);
}

ServiceError bad_request(const std::string& message) { return ServiceError(400, "bad_request", message); }

std::string axis_text(Axis a) { return a == Axis::X ? "x" : (a == Axis::Y ? "y" : "z"); }

Axis axis_from(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw bad_request("axis must be x, y or z");
}

std::string selector_text(Selector s) {
  return s == Selector::Id ? "id" : (s == Selector::It ? "it" : "name");
}

Selector selector_from(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "id") return Selector::Id;
  if (s == "it") return Selector::It;
  if (s == "name") return Selector::Name;
  throw bad_request("selector must be id, it or name");
}

unsigned channels_from(const json& j) {
  unsigned mask = 0;
  for (const auto& c : j) {
    const std::string s = c.get<std::string>();
    if (s == "rgb") mask |= kChannelRgb;
    else if (s == "depth") mask |= kChannelDepth;
    else if (s == "opacity") mask |= kChannelOpacity;
    else if (s == "panoptic") mask |= kChannelPanoptic;
    else if (s == "per_node") mask |= kChannelPerNode;
    else throw bad_request("unknown channel '" + s + "'");
  }
  return mask;
}

// Either explicit intrinsics and pose, or "eye"/"target" (optional "up")
// with intrinsics.
Camera camera_from(const json& j) {
  if (!j.contains("eye")) return json_util::to_camera(j);
  Camera c;
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.fx = j.at("fx").get<double>();
  c.fy = j.value("fy", c.fx);
  c.cx = j.value("cx", c.width / 2.0);
  c.cy = j.value("cy", c.height / 2.0);
  const Vec3 up = j.contains("up") ? json_util::to_vec(j.at("up")) : Vec3{0, 0, 1};
  c.pose = look_at(json_util::to_vec(j.at("eye")), json_util::to_vec(j.at("target")), up);
  return c;
}

std::uint16_t clamp16(double v) { return static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L)); }

json encode_channels(const RenderedImage& img, unsigned channels, bool raw) {
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  json out = json::object();
  auto gray = [&](const std::vector<double>& v, double scale) {
    ImageGray16 g{img.width, img.height, std::vector<std::uint16_t>(n)};
    for (std::size_t i = 0; i < n; ++i) g.data[i] = clamp16(v[i] * scale);
    return base64(encode_png(g));
  };
  if (channels & kChannelRgb) {
    if (raw) {
      out["rgb"] = base64_floats(img.rgb);
    } else {
      ImageRgb8 rgb{img.width, img.height, std::vector<std::uint8_t>(3 * n)};
      for (std::size_t i = 0; i < 3 * n; ++i) rgb.data[i] = to_u8(img.rgb[i]);
      out["rgb"] = base64(encode_png(rgb));
    }
  }
  if (channels & kChannelDepth) out["depth"] = raw ? base64_floats(img.depth) : gray(img.depth, 1000.0);
  if (channels & kChannelOpacity) out["opacity"] = raw ? base64_floats(img.opacity) : gray(img.opacity, 65535.0);
  if (channels & kChannelPanoptic) {
    ImageGray16 g{img.width, img.height, std::vector<std::uint16_t>(n)};
    for (std::size_t i = 0; i < n; ++i) g.data[i] = static_cast<std::uint16_t>(img.panoptic[i]);
    out["panoptic"] = base64(encode_png(g));
  }
  if (channels & kChannelPerNode) {
    json nodes = json::array();
    for (const NodeImage& ni : img.per_node)
      nodes.push_back({{"id", ni.id},
                       {"rgb", base64_floats(ni.rgb)},
                       {"depth", base64_floats(ni.depth)},
                       {"opacity", base64_floats(ni.opacity)}});
    out["per_node"] = std::move(nodes);
  }
  return out;
}

json error_body(const std::string& code, const std::string& message) {
  return {{"error", code}, {"message", message}};
}

// Blocking queue feeding one server-sent-events connection.
struct EventQueue {
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<RevisionEvent> events;
  bool closed = false;
  bool greeted = false;

  void push(const RevisionEvent& e) {
    {
      std::lock_guard lock(mutex);
      events.push_back(e);
    }
    cv.notify_one();
  }
  void close() {
    {
      std::lock_guard lock(mutex);
      closed = true;
    }
    cv.notify_all();
  }
};

}  // namespace

json command_to_json(const EditCommand& cmd) {
  json j = {{"operation", std::string(to_string(cmd.operation))}, {"instance_id", cmd.instance_id}};
  if (cmd.selector != Selector::Id) j["selector"] = selector_text(cmd.selector);
  if (!cmd.name.empty()) j["name"] = cmd.name;
  if (cmd.restore) {
    j["restore"] = true;
    return j;
  }
  const EditConfig& c = cmd.config;
  json config = json::object();
  if (c.axis) config["axis"] = axis_text(*c.axis);
  if (c.distance) config["distance"] = *c.distance;
  if (c.angle) config["angle"] = *c.angle;
  if (c.factor) config["factor"] = *c.factor;
  if (!c.source_scene.empty()) config["source_scene"] = c.source_scene;
  if (c.position) config["position"] = json_util::vec(*c.position);
  if (c.yaw) config["yaw"] = *c.yaw;
  if (cmd.operation == Operation::Swap) {
    config["other_id"] = c.other_id;
    if (c.other_selector != Selector::Id) config["other_selector"] = selector_text(c.other_selector);
    if (!c.other_name.empty()) config["other_name"] = c.other_name;
  }
  j["config"] = std::move(config);
  return j;
}

EditCommand command_from_json(const json& j) {
  try {
    if (!j.is_object()) throw bad_request("command must be an object");
    if (j.value("restore", false)) throw bad_request("undo payloads cannot be submitted; use the undo endpoint");
    EditCommand cmd;
    try {
      cmd.operation = operation_from_string(j.at("operation").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw bad_request(e.what());
    }
    cmd.instance_id = j.value("instance_id", 0);
    if (j.contains("selector")) cmd.selector = selector_from(j.at("selector"));
    cmd.name = j.value("name", std::string());
    if (cmd.selector == Selector::Name && cmd.name.empty()) throw bad_request("selector 'name' needs a name");
    if (j.contains("config")) {
      const json& c = j.at("config");
      EditConfig& out = cmd.config;
      if (c.contains("axis")) out.axis = axis_from(c.at("axis"));
      if (c.contains("distance")) out.distance = c.at("distance").get<double>();
      if (c.contains("angle")) out.angle = c.at("angle").get<double>();
      if (c.contains("factor")) out.factor = c.at("factor").get<double>();
      out.source_scene = c.value("source_scene", std::string());
      if (c.contains("position")) out.position = json_util::to_vec(c.at("position"));
      if (c.contains("yaw")) out.yaw = c.at("yaw").get<double>();
      out.other_id = c.value("other_id", 0);
      if (c.contains("other_selector")) out.other_selector = selector_from(c.at("other_selector"));
      out.other_name = c.value("other_name", std::string());
    }
    return cmd;
  } catch (const json::exception& e) {
    throw bad_request(std::string("malformed command: ") + e.what());
  }
}

json outcome_to_json(const EditResponse& r) {
  const CommandOutcome& o = r.outcome;
  json j = {{"status", o.applied() ? "applied" : "rejected"},
            {"affected_ids", o.affected_ids},
            {"revision", r.revision},
            {"command", command_to_json(r.command)}};
  if (!o.applied()) j["reason"] = o.reason;
  if (o.inverse) j["inverse"] = command_to_json(*o.inverse);
  return j;
}

json scene_to_json(const SceneSnapshot& snap) {
  json nodes = json::array();
  for (const SceneNode& n : snap.scene->nodes())
    nodes.push_back({{"id", n.id},
                     {"kind", n.is_background() ? "background" : "object"},
                     {"name", n.name},
                     {"bbox", json_util::box(n.bbox)},
                     {"selected", n.selected}});
  return {{"name", snap.scene->name()}, {"revision", snap.revision}, {"nodes", std::move(nodes)}};
}

struct HttpApi::Impl {
  SimService& service;
  httplib::Server server;
  std::thread thread;
  std::mutex queues_mutex;
  std::set<std::shared_ptr<EventQueue>> queues;
  std::atomic<bool> stopping{false};

  explicit Impl(SimService& s) : service(s) { routes(); }

  void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Runs a handler, mapping library errors onto status codes.
  template <typename F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const ParseError& e) {
      send(res, 400,
           {{"error", "parse_error"},
            {"message", e.message()},
            {"position", e.position()},
            {"expected", e.expected()}});
    } catch (const ServiceError& e) {
      send(res, e.status(), error_body(e.code(), e.what()));
    } catch (const json::exception& e) {
      send(res, 400, error_body("bad_request", e.what()));
    } catch (const std::exception& e) {
      send(res, 500, error_body("internal", e.what()));
    }
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      throw bad_request(std::string("invalid JSON: ") + e.what());
    }
  }

  void routes() {
    server.Get("/api/v1", [this](const httplib::Request&, httplib::Response& res) {
      send(res, 200,
           {{"api_version", kApiVersion},
            {"routes",
             {"GET /api/v1/scenes", "GET /api/v1/scenes/:scene", "POST /api/v1/scenes/:scene/render",
              "POST /api/v1/scenes/:scene/pick", "POST /api/v1/scenes/:scene/edit",
              "POST /api/v1/scenes/:scene/undo", "POST /api/v1/scenes/:scene/import", "GET /api/v1/keymap",
              "GET /api/v1/events"}}});
    });

    server.Get("/api/v1/scenes", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        json list = json::array();
        for (const SceneSummary& s : service.list_scenes())
          list.push_back({{"name", s.name}, {"revision", s.revision}, {"node_count", s.node_count}});
        send(res, 200, {{"scenes", std::move(list)}});
      });
    });

    server.Get("/api/v1/scenes/:scene", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, scene_to_json(service.snapshot(req.path_params.at("scene")))); });
    });

    server.Post("/api/v1/scenes/:scene/render", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json b = body_of(req);
        RenderRequest r;
        r.scene = req.path_params.at("scene");
        r.camera = camera_from(b.at("camera"));
        if (b.contains("channels")) r.channels = channels_from(b.at("channels"));
        r.n_per_node = b.value("n_per_node", kDefaultSamplesPerNode);
        r.seed = b.value("seed", std::uint64_t{0});
        r.view_id = b.value("view_id", std::string());
        const std::string encoding = b.value("encoding", std::string("png"));
        if (encoding != "png" && encoding != "f32") throw bad_request("encoding must be png or f32");
        const RenderResponse out = service.handle_render(r);
        res.set_header("X-Compsim-Revision", std::to_string(out.revision));
        send(res, 200,
             {{"revision", out.revision},
              {"width", out.image.width},
              {"height", out.image.height},
              {"encoding", encoding},
              {"depth_scale", encoding == "png" ? 0.001 : 1.0},
              {"channels", encode_channels(out.image, r.channels, encoding == "f32")}});
      });
    });

    server.Post("/api/v1/scenes/:scene/pick", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json b = body_of(req);
        PickRequest p;
        p.scene = req.path_params.at("scene");
        p.camera = camera_from(b.at("camera"));
        p.x = b.at("x").get<int>();
        p.y = b.at("y").get<int>();
        p.n_per_node = b.value("n_per_node", kDefaultSamplesPerNode);
        p.select = b.value("select", false);
        const PickResponse out = service.handle_pick(p);
        send(res, 200,
             {{"instance_id", out.instance_id ? json(*out.instance_id) : json(nullptr)},
              {"highlighted", out.highlighted},
              {"revision", out.revision}});
      });
    });

    server.Post("/api/v1/scenes/:scene/edit", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json b = body_of(req);
        EditRequest e;
        e.scene = req.path_params.at("scene");
        if (b.contains("text"))
          e.text = b.at("text").get<std::string>();
        else if (b.contains("command"))
          e.command = command_from_json(b.at("command"));
        else
          throw bad_request("body needs \"text\" or \"command\"");
        send(res, 200, outcome_to_json(service.handle_edit(e)));
      });
    });

    server.Post("/api/v1/scenes/:scene/undo", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send(res, 200, outcome_to_json(service.handle_undo(req.path_params.at("scene")))); });
    });

    server.Post("/api/v1/scenes/:scene/import", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json b = body_of(req);
        PoseSE3 placement;
        if (b.contains("placement")) {
          const json& p = b.at("placement");
          if (p.contains("rotation")) placement.rotation = json_util::to_mat(p.at("rotation"));
          if (p.contains("translation")) placement.translation = json_util::to_vec(p.at("translation"));
        }
        const EditResponse out =
            service.handle_import(req.path_params.at("scene"), b.at("source").get<std::string>(),
                                  b.at("source_id").get<int>(), placement, b.value("scale", 1.0));
        send(res, 200, outcome_to_json(out));
      });
    });

    server.Get("/api/v1/keymap", [this](const httplib::Request&, httplib::Response& res) {
      static constexpr const char* kActions[] = {"translate", "rotate", "scale",      "select", "replicate",
                                                 "delete",    "cross_scene", "add", "swap"};
      json list = json::array();
      for (const KeyBinding& k : keymap())
        list.push_back({{"key", std::string(k.key)},
                        {"action", kActions[static_cast<int>(k.action)]},
                        {"label", std::string(k.label)}});
      send(res, 200, {{"bindings", std::move(list)}});
    });

    server.Get("/api/v1/events", [this](const httplib::Request&, httplib::Response& res) {
      auto queue = std::make_shared<EventQueue>();
      {
        std::lock_guard lock(queues_mutex);
        queues.insert(queue);
      }
      const int token = service.subscribe([queue](const RevisionEvent& e) { queue->push(e); });
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, queue](std::size_t, httplib::DataSink& sink) {
            std::string message;
            if (!queue->greeted) {
              queue->greeted = true;
              json scenes = json::array();
              for (const SceneSummary& s : service.list_scenes())
                scenes.push_back({{"scene", s.name}, {"revision", s.revision}});
              message = "event: hello\ndata: " + json{{"api_version", kApiVersion}, {"scenes", scenes}}.dump() + "\n\n";
              return sink.write(message.data(), message.size());
            }
            std::unique_lock lock(queue->mutex);
            queue->cv.wait_for(lock, std::chrono::seconds(15), [&] { return queue->closed || !queue->events.empty(); });
            if (queue->closed) return false;
            if (queue->events.empty()) {
              message = ": keep-alive\n\n";
            } else {
              const RevisionEvent e = queue->events.front();
              queue->events.pop_front();
              message = "event: revision\ndata: " + json{{"scene", e.scene}, {"revision", e.revision}}.dump() + "\n\n";
            }
            lock.unlock();
            return sink.write(message.data(), message.size());
          },
          [this, token, queue](bool) {
            service.unsubscribe(token);
            std::lock_guard lock(queues_mutex);
            queues.erase(queue);
          });
    });
  }

  void close_streams() {
    std::lock_guard lock(queues_mutex);
    for (const auto& q : queues) q->close();
  }
};

HttpApi::HttpApi(SimService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpApi::~HttpApi() { stop(); }

int HttpApi::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpApi::serve(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw std::runtime_error("cannot serve on " + host + ":" + std::to_string(port));
}

void HttpApi::stop() {
  if (!impl_) return;
  impl_->close_streams();
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace compsim
