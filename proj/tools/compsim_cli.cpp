// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: dataset generation, training, rendering, editing
// and the HTTP service.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "compsim/dataset.hpp"
#include "compsim/edit.hpp"
#include "compsim/http_api.hpp"
#include "compsim/image_io.hpp"
#include "compsim/parallel.hpp"
#include "compsim/render.hpp"
#include "compsim/scene_io.hpp"
#include "compsim/service.hpp"
#include "compsim/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace compsim {
namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vec3 parse_vec(const std::string& text) {
  Vec3 v;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',')
    throw std::runtime_error("expected x,y,z but got '" + text + "'");
  return v;
}

json eval_json(const EvalReport& r) {
  json iou = json::object();
  for (const auto& [id, v] : r.object_iou) iou[std::to_string(id)] = v;
  return {{"psnr", r.mean_psnr},
          {"ssim", r.mean_ssim},
          {"object_iou", iou},
          {"mean_object_iou", r.mean_object_iou},
          {"occluded_background_psnr", std::isnan(r.occluded_background_psnr) ? json(nullptr)
                                                                               : json(r.occluded_background_psnr)}};
}

// Scenes from a library directory, by scene name.
std::map<std::string, Scene> load_library(const fs::path& dir) {
  std::map<std::string, Scene> out;
  if (dir.empty()) return out;
  for (const LibraryEntry& e : list_library(dir)) out.emplace(e.scene_name, load_scene(e.path));
  return out;
}

struct CameraArgs {
  std::string dataset;
  int frame = -1;
  std::string eye, target = "0,0,0";
  int width = 256, height = 256;
  double fx = 0.0;

  void add(CLI::App* app) {
    app->add_option("--dataset", dataset, "Dataset whose frame camera to use");
    app->add_option("--frame", frame, "Frame index in --dataset");
    app->add_option("--eye", eye, "Camera position x,y,z (alternative to --frame)");
    app->add_option("--target", target, "Look-at point x,y,z");
    app->add_option("--width", width, "Image width for --eye cameras");
    app->add_option("--height", height, "Image height for --eye cameras");
    app->add_option("--fx", fx, "Focal length in pixels (default: width)");
  }

  Camera resolve() const {
    if (!dataset.empty()) {
      const SceneDataset ds = load_dataset(dataset);
      if (frame < 0 || frame >= static_cast<int>(ds.frames.size()))
        throw std::runtime_error("--frame must be in [0, " + std::to_string(ds.frames.size()) + ")");
      return ds.frames[frame].camera;
    }
    if (eye.empty()) throw std::runtime_error("give --dataset/--frame or --eye");
    Camera c;
    c.width = width;
    c.height = height;
    c.fx = c.fy = fx > 0 ? fx : width;
    c.cx = width / 2.0;
    c.cy = height / 2.0;
    c.pose = look_at(parse_vec(eye), parse_vec(target));
    return c;
  }
};

int run_make_synthetic(const std::string& spec_path, const std::string& out, bool print_spec) {
  const SyntheticSpec spec = spec_path.empty() ? two_sphere_spec() : synthetic_spec_from_json(read_text(spec_path));
  if (print_spec) {
    std::cout << to_json(spec) << "\n";
    return 0;
  }
  if (out.empty()) throw std::runtime_error("--out is required");
  make_synthetic_scene(spec, out);
  std::cout << "wrote " << spec.views << " views of '" << spec.name << "' to " << out << "\n";
  return 0;
}

int run_train(const std::string& data, const std::string& out, const std::string& config_path, long iterations,
              long seed, bool quiet) {
  const SceneDataset dataset = load_dataset(data);
  TrainConfig config = config_path.empty() ? TrainConfig{} : train_config_from_json(read_text(config_path));
  if (iterations > 0) config.iterations = iterations;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  Scene scene = scene_from_dataset(dataset);
  DepthAlign align;
  const TrainReport report = train(scene, dataset, config, &align, [&](const TrainRecord& r) {
    if (!quiet)
      std::fprintf(stderr, "iter %6ld  loss %.5f  lr %.2e  %.1fs\n", r.iteration, r.total, r.lr, r.wall_seconds);
  });
  const json info = {{"train", json::parse(to_json(config))},
                     {"depth_align", {{"w", align.w}, {"q", align.q}}},
                     {"held_out", eval_json(report.held_out)},
                     {"wall_seconds", report.wall_seconds}};
  save_scene(scene, out, info.dump());
  std::cout << info["held_out"].dump(2) << "\n";
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data, int n_per_node, bool all_frames) {
  const Scene scene = load_scene(ckpt);
  const SceneDataset dataset = load_dataset(data);
  EvalOptions opts;
  opts.n_per_node = n_per_node;
  opts.held_out_only = !all_frames;
  std::cout << eval_json(evaluate(scene, dataset, opts)).dump(2) << "\n";
  return 0;
}

int run_render(const std::string& ckpt, const CameraArgs& cam_args, const std::string& rgb_out,
               const std::string& depth_out, const std::string& panoptic_out, int n_per_node) {
  const Scene scene = load_scene(ckpt);
  const Camera cam = cam_args.resolve();
  RenderSettings settings;
  settings.sampling.n_per_node = n_per_node;
  settings.sampling.highlight = true;
  const RenderedImage img = render_image(scene, cam, settings);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  ImageRgb8 rgb{img.width, img.height, std::vector<std::uint8_t>(3 * n)};
  for (std::size_t i = 0; i < 3 * n; ++i) rgb.data[i] = to_u8(img.rgb[i]);
  write_png(rgb_out, rgb);
  if (!depth_out.empty()) {
    ImageGray16 d{img.width, img.height, std::vector<std::uint16_t>(n)};
    for (std::size_t i = 0; i < n; ++i)
      d.data[i] = static_cast<std::uint16_t>(std::clamp(std::lround(img.depth[i] * 1000.0), 0L, 65535L));
    write_png(depth_out, d);
  }
  if (!panoptic_out.empty()) {
    ImageGray16 p{img.width, img.height, std::vector<std::uint16_t>(n)};
    for (std::size_t i = 0; i < n; ++i) p.data[i] = static_cast<std::uint16_t>(img.panoptic[i]);
    write_png(panoptic_out, p);
  }
  return 0;
}

int run_edit(const std::string& ckpt, const std::string& out, const std::vector<std::string>& commands,
             const std::string& library) {
  Checkpoint cp = load_checkpoint(ckpt);
  std::map<std::string, Scene> others = load_library(library);
  EditContext ctx;
  ctx.find_scene = [&](const std::string& name) -> Scene* {
    const auto it = others.find(name);
    return it == others.end() ? nullptr : &it->second;
  };
  int failures = 0;
  for (const std::string& text : commands) {
    try {
      const EditCommand cmd = parse_command(text, cp.scene);
      const CommandOutcome o = apply_command(cp.scene, cmd, ctx);
      if (o.applied()) {
        std::cout << "applied: " << format_command(cmd) << "  (ids";
        for (int id : o.affected_ids) std::cout << " " << id;
        std::cout << ")\n";
      } else {
        ++failures;
        std::cout << "rejected: " << text << ": " << o.reason << "\n";
      }
    } catch (const ParseError& e) {
      ++failures;
      std::cout << "error: " << text << "\n       " << std::string(e.position(), ' ') << "^ " << e.message();
      if (!e.expected().empty()) {
        std::cout << " (expected";
        for (const auto& x : e.expected()) std::cout << " " << x;
        std::cout << ")";
      }
      std::cout << "\n";
    }
  }
  save_scene(cp.scene, out.empty() ? ckpt : out, cp.info_json);
  return failures == 0 ? 0 : 1;
}

int run_info(const std::string& path) {
  if (fs::is_directory(path)) {
    for (const LibraryEntry& e : list_library(path)) {
      std::cout << e.path.filename().string() << "  scene '" << e.scene_name << "'";
      for (std::size_t i = 0; i < e.object_ids.size(); ++i)
        std::cout << "  #" << e.object_ids[i] << " " << e.object_names[i];
      std::cout << "\n";
    }
    return 0;
  }
  const Checkpoint cp = load_checkpoint(path);
  json nodes = json::array();
  for (const SceneNode& n : cp.scene.nodes()) {
    const Resolution& r = n.field().resolution();
    nodes.push_back({{"id", n.id},
                     {"name", n.name},
                     {"kind", n.is_background() ? "background" : "object"},
                     {"center", {n.bbox.pose.translation.x, n.bbox.pose.translation.y, n.bbox.pose.translation.z}},
                     {"half_extents", {n.bbox.half_extents.x, n.bbox.half_extents.y, n.bbox.half_extents.z}},
                     {"resolution", {r.nx, r.ny, r.nz}}});
  }
  std::cout << json{{"name", cp.scene.name()}, {"nodes", nodes}, {"info", json::parse(cp.info_json)}}.dump(2)
            << "\n";
  return 0;
}

volatile std::sig_atomic_t g_stop = 0;

int run_serve(const std::vector<std::string>& checkpoints, const std::string& library, const std::string& host,
              int port) {
  SimService service;
  for (const std::string& path : checkpoints) service.add_scene(load_scene(path));
  for (auto& [name, scene] : load_library(library)) {
    bool loaded = false;
    for (const SceneSummary& s : service.list_scenes()) loaded |= s.name == name;
    if (!loaded) service.add_scene(std::move(scene));
  }
  if (service.list_scenes().empty()) throw std::runtime_error("no scenes to serve");
  HttpApi api(service);
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  const int bound = api.start(host, port);
  for (const SceneSummary& s : service.list_scenes())
    std::cout << "serving '" << s.name << "' (" << s.node_count << " nodes)\n";
  std::cout << "listening on http://" << host << ":" << bound << "/api/v1" << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  api.stop();
  return 0;
}

}  // namespace
}  // namespace compsim

int main(int argc, char** argv) {
  using namespace compsim;
  CLI::App app{"compsim: compositional radiance-field scenes"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: all cores or COMPSIM_THREADS)");

  std::string spec_path, out, data, config_path, ckpt, rgb_out = "render.png", depth_out, panoptic_out, library;
  std::string host = "127.0.0.1";
  int port = 8080, n_per_node = kDefaultSamplesPerNode;
  long iterations = 0, seed = -1;
  bool print_spec = false, quiet = false, all_frames = false;
  std::vector<std::string> commands, checkpoints;
  CameraArgs cam;

  auto* synth = app.add_subcommand("make-synthetic", "Write a synthetic dataset");
  synth->add_option("--scene", spec_path, "Generator settings JSON (default: the built-in two-sphere toy)");
  synth->add_option("--out", out, "Output dataset directory");
  synth->add_flag("--print-settings", print_spec, "Print the generator settings as JSON and exit");

  auto* tr = app.add_subcommand("train", "Train a scene from a dataset");
  tr->add_option("--data", data, "Dataset directory")->required();
  tr->add_option("--out", out, "Checkpoint to write")->required();
  tr->add_option("--config", config_path, "Training config JSON");
  tr->add_option("--iterations", iterations, "Override the iteration count");
  tr->add_option("--seed", seed, "Override the seed");
  tr->add_flag("--quiet", quiet, "No progress lines");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint against a dataset");
  ev->add_option("checkpoint", ckpt)->required();
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--samples", n_per_node, "Samples per node");
  ev->add_flag("--all-frames", all_frames, "Include training frames");

  auto* rd = app.add_subcommand("render", "Render a checkpoint to PNG");
  rd->add_option("checkpoint", ckpt)->required();
  rd->add_option("--out", rgb_out, "RGB output");
  rd->add_option("--depth", depth_out, "16-bit depth output (millimeters)");
  rd->add_option("--panoptic", panoptic_out, "16-bit instance-id output");
  rd->add_option("--samples", n_per_node, "Samples per node");
  cam.add(rd);

  auto* ed = app.add_subcommand("edit", "Apply DSL commands to a checkpoint");
  ed->add_option("checkpoint", ckpt)->required();
  ed->add_option("commands", commands, "Commands, e.g. \"move #1 10 cm along x\"")->required();
  ed->add_option("--out", out, "Output checkpoint (default: overwrite)");
  ed->add_option("--library", library, "Directory of *.csim checkpoints for add/swap sources (read only)");

  auto* inf = app.add_subcommand("info", "Describe a checkpoint or list a library directory");
  inf->add_option("path", ckpt)->required();

  auto* sv = app.add_subcommand("serve", "Serve scenes over HTTP");
  sv->add_option("checkpoints", checkpoints, "Checkpoints to load");
  sv->add_option("--library", library, "Also load every *.csim checkpoint in this directory");
  sv->add_option("--host", host, "Bind address");
  sv->add_option("--port", port, "Port");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_worker_count(static_cast<std::size_t>(threads));
  try {
    if (*synth) return run_make_synthetic(spec_path, out, print_spec);
    if (*tr) return run_train(data, out, config_path, iterations, seed, quiet);
    if (*ev) return run_eval(ckpt, data, n_per_node, all_frames);
    if (*rd) return run_render(ckpt, cam, rgb_out, depth_out, panoptic_out, n_per_node);
    if (*ed) return run_edit(ckpt, out, commands, library);
    if (*inf) return run_info(ckpt);
    if (*sv) return run_serve(checkpoints, library, host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
