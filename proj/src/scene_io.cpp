// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/scene_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "compsim/image_io.hpp"
#include "compsim/parallel.hpp"
#include "json_util.hpp"

namespace compsim {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace json_util;

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'C', 'S', 'I', 'M', 'C', 'K', 'P', 'T'};
constexpr std::size_t kHeaderBytes = sizeof(kMagic) + 4 + 8;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  const auto* p = reinterpret_cast<const unsigned char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::vector<unsigned char>& in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

void put_floats(std::vector<unsigned char>& out, std::span<const float> values) {
  const auto* p = reinterpret_cast<const unsigned char*>(values.data());
  out.insert(out.end(), p, p + values.size_bytes());
}

std::uint32_t crc_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

const char* kind_name(NodeKind k) { return k == NodeKind::Background ? "background" : "object"; }

NodeKind parse_kind(const std::string& s) {
  if (s == "background") return NodeKind::Background;
  if (s == "object") return NodeKind::Object;
  throw CheckpointError("unknown node kind '" + s + "'");
}

struct VerifiedFile {
  std::vector<unsigned char> bytes;
  json metadata;
  std::size_t blob_offset = 0;
  std::size_t blob_end = 0;
};

VerifiedFile read_verified(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  VerifiedFile f;
  f.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  const auto& b = f.bytes;
  if (b.size() < sizeof(kMagic) || std::memcmp(b.data(), kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad magic: " + path.string() + " is not a compsim checkpoint");
  if (b.size() < kHeaderBytes + 4) throw CheckpointError("checksum mismatch: file is truncated");
  const auto stored = get<std::uint32_t>(b, b.size() - 4);
  if (crc_of(b.data(), b.size() - 4) != stored) throw CheckpointError("checksum mismatch in " + path.string());
  const auto version = get<std::uint32_t>(b, sizeof(kMagic));
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto meta_bytes = get<std::uint64_t>(b, sizeof(kMagic) + 4);
  if (meta_bytes > b.size() - kHeaderBytes - 4) throw CheckpointError("metadata length exceeds file size");
  try {
    f.metadata = json::parse(b.begin() + kHeaderBytes, b.begin() + static_cast<std::ptrdiff_t>(kHeaderBytes + meta_bytes));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed metadata: ") + e.what());
  }
  f.blob_offset = kHeaderBytes + meta_bytes;
  f.blob_end = b.size() - 4;
  return f;
}

}  // namespace

void save_scene(const Scene& scene, const fs::path& path, const std::string& info_json) {
  json info;
  try {
    info = json::parse(info_json);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("info is not valid JSON: ") + e.what());
  }
  if (!info.is_object()) throw CheckpointError("info must be a JSON object");

  json meta;
  meta["name"] = scene.name();
  meta["next_id"] = scene.next_id();
  meta["info"] = info;
  json nodes = json::array();
  for (const SceneNode& n : scene.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"kind", kind_name(n.kind)},
                     {"name", n.name},
                     {"bbox", box(n.bbox)},
                     {"gain", vec(n.appearance.gain)},
                     {"bias", vec(n.appearance.bias)},
                     {"selected", n.selected},
                     {"resolution", resolution(n.field().resolution())}});
  }
  meta["nodes"] = nodes;
  const std::string meta_text = meta.dump();

  std::vector<unsigned char> out;
  out.insert(out.end(), kMagic, kMagic + sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, meta_text.size());
  out.insert(out.end(), meta_text.begin(), meta_text.end());
  for (const SceneNode& n : scene.nodes()) {
    put_floats(out, n.embedding);
    put_floats(out, n.field().density_raw());
    put_floats(out, n.field().color_raw());
  }
  put<std::uint32_t>(out, crc_of(out.data(), out.size()));

  // Write beside the target and rename so readers never see a partial file.
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const fs::path& path) {
  VerifiedFile f = read_verified(path);
  std::size_t offset = f.blob_offset;
  auto read_floats = [&](std::span<float> dst) {
    if (offset + dst.size_bytes() > f.blob_end) throw CheckpointError("parameter blobs are shorter than declared");
    std::memcpy(dst.data(), f.bytes.data() + offset, dst.size_bytes());
    offset += dst.size_bytes();
  };

  try {
    const json& meta = f.metadata;
    std::vector<SceneNode> nodes;
    for (const json& j : meta.at("nodes")) {
      const Resolution res = to_resolution(j.at("resolution"));
      VoxelField field(res, 0.0, 0.0);
      SceneNode node(parse_kind(j.at("kind").get<std::string>()), to_box(j.at("bbox")), VoxelField(Resolution{2, 2, 2}));
      node.id = j.at("id").get<int>();
      node.name = j.at("name").get<std::string>();
      node.appearance.gain = to_vec(j.at("gain"));
      node.appearance.bias = to_vec(j.at("bias"));
      node.selected = j.value("selected", false);
      read_floats(node.embedding);
      read_floats(field.density_raw());
      read_floats(field.color_raw());
      node.set_field(std::move(field));
      nodes.push_back(std::move(node));
    }
    if (offset != f.blob_end) throw CheckpointError("trailing bytes after parameter blobs");
    if (nodes.empty() || !nodes.front().is_background())
      throw CheckpointError("first node must be the background");

    Checkpoint ck{Scene(meta.at("name").get<std::string>(), std::move(nodes.front())), "{}"};
    for (std::size_t i = 1; i < nodes.size(); ++i) ck.scene.restore_node(std::move(nodes[i]));
    ck.scene.reserve_ids(meta.value("next_id", ck.scene.next_id()));
    if (meta.contains("info")) ck.info_json = meta.at("info").dump();
    return ck;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

Scene load_scene(const fs::path& path) { return load_checkpoint(path).scene; }

std::vector<LibraryEntry> list_library(const fs::path& dir) {
  std::vector<LibraryEntry> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csim") continue;
    try {
      const VerifiedFile f = read_verified(entry.path());
      LibraryEntry e;
      e.path = entry.path();
      e.scene_name = f.metadata.at("name").get<std::string>();
      for (const json& n : f.metadata.at("nodes")) {
        if (n.at("kind").get<std::string>() != "object") continue;
        e.object_ids.push_back(n.at("id").get<int>());
        e.object_names.push_back(n.at("name").get<std::string>());
      }
      out.push_back(std::move(e));
    } catch (const std::exception&) {
      // Not a usable checkpoint; leave it out of the listing.
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path.filename() < b.path.filename(); });
  return out;
}

// ---------------------------------------------------------------------------
// Analytic primitives

namespace {

OrientedBox primitive_box(const Primitive& p) {
  OrientedBox b;
  b.pose.translation = p.center;
  b.pose.rotation = p.shape == PrimitiveShape::Box ? p.rotation : Mat3::identity();
  b.half_extents = p.shape == PrimitiveShape::Box ? p.half_extents : Vec3{p.radius, p.radius, p.radius};
  return b;
}

Vec3 to_local(const OrientedBox& b, Vec3 p) { return b.pose.rotation.transposed() * (p - b.pose.translation); }

// Closest point of an oriented box to `p`, in world coordinates.
Vec3 closest_point(const OrientedBox& b, Vec3 p) {
  Vec3 q = to_local(b, p);
  for (int i = 0; i < 3; ++i) q[i] = std::clamp(q[i], -b.half_extents[i], b.half_extents[i]);
  return b.pose.rotation * q + b.pose.translation;
}

// Separating-axis test for two oriented boxes; touching faces do not overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  std::vector<Vec3> axes;
  for (int i = 0; i < 3; ++i) axes.push_back(a.pose.rotation.col(i));
  for (int i = 0; i < 3; ++i) axes.push_back(b.pose.rotation.col(i));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 c = cross(a.pose.rotation.col(i), b.pose.rotation.col(j));
      if (length(c) > 1e-9) axes.push_back(normalize(c));
    }
  const Vec3 d = b.pose.translation - a.pose.translation;
  auto radius = [](const OrientedBox& box, Vec3 axis) {
    double r = 0.0;
    for (int i = 0; i < 3; ++i) r += box.half_extents[i] * std::abs(dot(box.pose.rotation.col(i), axis));
    return r;
  };
  for (const Vec3& axis : axes)
    if (std::abs(dot(d, axis)) >= radius(a, axis) + radius(b, axis) - 1e-12) return false;
  return true;
}

bool primitives_overlap(const Primitive& a, const Primitive& b) {
  const bool sa = a.shape == PrimitiveShape::Sphere;
  const bool sb = b.shape == PrimitiveShape::Sphere;
  if (sa && sb) return length(a.center - b.center) < a.radius + b.radius;
  if (sa) return length(closest_point(primitive_box(b), a.center) - a.center) < a.radius;
  if (sb) return length(closest_point(primitive_box(a), b.center) - b.center) < b.radius;
  return boxes_overlap(primitive_box(a), primitive_box(b));
}

bool primitive_inside(const Primitive& p, const OrientedBox& box) {
  constexpr double kTol = 1e-9;
  if (p.shape == PrimitiveShape::Sphere) {
    const Vec3 c = to_local(box, p.center);
    for (int i = 0; i < 3; ++i)
      if (std::abs(c[i]) + p.radius > box.half_extents[i] + kTol) return false;
    return true;
  }
  const OrientedBox pb = primitive_box(p);
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 s{corner & 1 ? 1.0 : -1.0, corner & 2 ? 1.0 : -1.0, corner & 4 ? 1.0 : -1.0};
    const Vec3 w = pb.pose.apply(hadamard(s, pb.half_extents));
    const Vec3 q = to_local(box, w);
    for (int i = 0; i < 3; ++i)
      if (std::abs(q[i]) > box.half_extents[i] + kTol) return false;
  }
  return true;
}

OrientedBox padded_bbox(const SyntheticObject& obj, double padding) {
  if (obj.bbox) return *obj.bbox;
  OrientedBox b = primitive_box(obj.primitive);
  b.half_extents = b.half_extents * padding;
  return b;
}

json primitive_json(const Primitive& p) {
  json j{{"shape", p.shape == PrimitiveShape::Sphere ? "sphere" : "box"},
         {"center", vec(p.center)},
         {"density", p.density},
         {"color", vec(p.color)},
         {"color_gradient", vec(p.color_gradient)}};
  if (p.shape == PrimitiveShape::Sphere) {
    j["radius"] = p.radius;
  } else {
    j["half_extents"] = vec(p.half_extents);
    j["rotation"] = mat(p.rotation);
  }
  return j;
}

Primitive primitive_from_json(const json& j) {
  Primitive p;
  const std::string shape = j.at("shape").get<std::string>();
  if (shape == "sphere")
    p.shape = PrimitiveShape::Sphere;
  else if (shape == "box")
    p.shape = PrimitiveShape::Box;
  else
    throw std::invalid_argument("unknown primitive shape '" + shape + "'");
  p.center = to_vec(j.at("center"));
  p.density = j.at("density").get<double>();
  p.color = to_vec(j.at("color"));
  if (j.contains("color_gradient")) p.color_gradient = to_vec(j.at("color_gradient"));
  if (p.shape == PrimitiveShape::Sphere) {
    p.radius = j.at("radius").get<double>();
  } else {
    p.half_extents = to_vec(j.at("half_extents"));
    if (j.contains("rotation")) p.rotation = to_mat(j.at("rotation"));
  }
  return p;
}

}  // namespace

bool Primitive::contains(Vec3 p) const {
  if (shape == PrimitiveShape::Sphere) return dot(p - center, p - center) <= radius * radius;
  return primitive_box(*this).contains(p);
}

Rgb Primitive::color_at(Vec3 p) const {
  const Vec3 c = color + hadamard(color_gradient, p - center);
  return {std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
}

std::optional<Interval> Primitive::intersect(const Ray& ray) const {
  if (shape == PrimitiveShape::Box) return ray_box_intersect(ray, primitive_box(*this));
  const Vec3 oc = ray.origin - center;
  const double a = dot(ray.direction, ray.direction);
  const double half_b = dot(oc, ray.direction);
  const double c = dot(oc, oc) - radius * radius;
  const double disc = half_b * half_b - a * c;
  if (a <= 0.0 || disc <= 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  const double t0 = std::max((-half_b - root) / a, ray.t_near);
  const double t1 = std::min((-half_b + root) / a, ray.t_far);
  if (t1 <= t0) return std::nullopt;
  return Interval{t0, t1};
}

// ---------------------------------------------------------------------------
// Synthetic specs

SyntheticSpec two_sphere_spec() {
  SyntheticSpec s;
  s.name = "two-sphere";
  s.width = 64;
  s.height = 64;
  s.focal = 110.0;
  s.views = 20;
  s.held_out_every = 5;
  s.orbit_target = {0, 0, 1.5};
  s.orbit_radius = 28.0;
  s.elevation_deg = 25.0;
  s.elevation_alt_deg = 40.0;
  s.scene_bounds.pose.translation = {0, 0, 0};
  s.scene_bounds.half_extents = {13, 13, 2};

  Primitive floor;
  floor.shape = PrimitiveShape::Box;
  floor.center = {0, 0, -1};
  floor.half_extents = {12, 12, 1};
  floor.density = 3.0;
  floor.color = {0.55, 0.5, 0.4};
  floor.color_gradient = {0.015, -0.012, 0.0};
  s.background.push_back(floor);

  SyntheticObject red;
  red.id = 1;
  red.name = "red ball";
  red.primitive.center = {-4, 1, 3.05};
  red.primitive.radius = 3.0;
  red.primitive.density = 4.0;
  red.primitive.color = {0.85, 0.2, 0.15};
  red.primitive.color_gradient = {0.03, 0.02, 0.04};
  s.objects.push_back(red);

  SyntheticObject blue;
  blue.id = 2;
  blue.name = "blue ball";
  blue.primitive.center = {4, -1.5, 2.55};
  blue.primitive.radius = 2.5;
  blue.primitive.density = 4.0;
  blue.primitive.color = {0.15, 0.3, 0.8};
  blue.primitive.color_gradient = {0.02, 0.04, -0.03};
  s.objects.push_back(blue);

  s.supersample = 4;
  // Generous boxes reach well into the floor, so object nodes can soak up
  // floor density unless the mask losses say otherwise.
  s.bbox_padding = 1.4;
  s.background_resolution = Resolution{64, 64, 64};
  s.object_resolution = Resolution{32, 32, 32};
  return s;
}

std::string to_json(const SyntheticSpec& s) {
  json j;
  j["name"] = s.name;
  j["width"] = s.width;
  j["height"] = s.height;
  j["focal"] = s.focal;
  j["views"] = s.views;
  j["held_out_every"] = s.held_out_every;
  j["orbit_target"] = vec(s.orbit_target);
  j["orbit_radius"] = s.orbit_radius;
  j["elevation_deg"] = s.elevation_deg;
  j["elevation_alt_deg"] = s.elevation_alt_deg;
  j["scene_bounds"] = box(s.scene_bounds);
  j["bbox_padding"] = s.bbox_padding;
  j["quadrature_step"] = s.quadrature_step;
  j["supersample"] = s.supersample;
  json bg = json::array();
  for (const auto& p : s.background) bg.push_back(primitive_json(p));
  j["background"] = bg;
  json objs = json::array();
  for (const auto& o : s.objects) {
    json jo{{"id", o.id}, {"name", o.name}, {"primitive", primitive_json(o.primitive)}};
    if (o.bbox) jo["bbox"] = box(*o.bbox);
    objs.push_back(jo);
  }
  j["objects"] = objs;
  if (s.background_resolution) j["background_resolution"] = resolution(*s.background_resolution);
  if (s.object_resolution) j["object_resolution"] = resolution(*s.object_resolution);
  return j.dump(2);
}

SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  try {
    SyntheticSpec s;
    s.name = j.value("name", s.name);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.focal = j.value("focal", s.focal);
    s.views = j.value("views", s.views);
    s.held_out_every = j.value("held_out_every", s.held_out_every);
    if (j.contains("orbit_target")) s.orbit_target = to_vec(j.at("orbit_target"));
    s.orbit_radius = j.value("orbit_radius", s.orbit_radius);
    s.elevation_deg = j.value("elevation_deg", s.elevation_deg);
    s.elevation_alt_deg = j.value("elevation_alt_deg", s.elevation_deg);
    s.scene_bounds = to_box(j.at("scene_bounds"));
    s.bbox_padding = j.value("bbox_padding", s.bbox_padding);
    s.quadrature_step = j.value("quadrature_step", s.quadrature_step);
    s.supersample = j.value("supersample", s.supersample);
    for (const json& p : j.value("background", json::array())) s.background.push_back(primitive_from_json(p));
    for (const json& o : j.value("objects", json::array())) {
      SyntheticObject obj;
      obj.id = o.at("id").get<int>();
      obj.name = o.value("name", "object " + std::to_string(obj.id));
      obj.primitive = primitive_from_json(o.at("primitive"));
      if (o.contains("bbox")) obj.bbox = to_box(o.at("bbox"));
      s.objects.push_back(std::move(obj));
    }
    if (j.contains("background_resolution")) s.background_resolution = to_resolution(j.at("background_resolution"));
    if (j.contains("object_resolution")) s.object_resolution = to_resolution(j.at("object_resolution"));
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synthetic spec: ") + e.what());
  }
}

void validate(const SyntheticSpec& s) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("synthetic spec: " + msg); };
  if (s.width <= 0 || s.height <= 0) fail("image size must be positive");
  if (!(s.focal > 0)) fail("focal length must be positive");
  if (s.views <= 0) fail("need at least one view");
  if (s.held_out_every < 0) fail("held_out_every must be non-negative");
  if (!(s.orbit_radius > 0)) fail("orbit radius must be positive");
  if (!(s.quadrature_step > 0)) fail("quadrature step must be positive");
  if (s.supersample < 1 || s.supersample > 16) fail("supersample must lie in [1, 16]");
  if (!(s.bbox_padding >= 1.0)) fail("bbox padding must be at least 1");
  if (!is_rotation(s.scene_bounds.pose.rotation, 1e-9)) fail("scene bounds rotation is not a rotation");

  std::vector<const Primitive*> all;
  auto check_primitive = [&](const Primitive& p, const std::string& what) {
    if (!(p.density >= 0) || !std::isfinite(p.density)) fail(what + ": density must be finite and non-negative");
    for (int i = 0; i < 3; ++i)
      if (!(p.color[i] >= 0.0 && p.color[i] <= 1.0)) fail(what + ": color channels must lie in [0, 1]");
    if (p.shape == PrimitiveShape::Sphere && !(p.radius > 0)) fail(what + ": radius must be positive");
    if (p.shape == PrimitiveShape::Box) {
      if (!(p.half_extents.x > 0 && p.half_extents.y > 0 && p.half_extents.z > 0))
        fail(what + ": half extents must be positive");
      if (!is_rotation(p.rotation, 1e-9)) fail(what + ": rotation is not a rotation");
    }
    all.push_back(&p);
  };
  for (std::size_t i = 0; i < s.background.size(); ++i) {
    const std::string what = "background primitive " + std::to_string(i);
    check_primitive(s.background[i], what);
    if (!primitive_inside(s.background[i], s.scene_bounds)) fail(what + " extends outside the scene bounds");
  }
  std::vector<int> ids;
  for (const SyntheticObject& o : s.objects) {
    const std::string what = "object " + std::to_string(o.id);
    if (o.id <= kBackgroundId || o.id >= kMaskUndefinedStored) fail(what + ": id must lie in [1, 65534]");
    if (std::find(ids.begin(), ids.end(), o.id) != ids.end()) fail("duplicate object id " + std::to_string(o.id));
    ids.push_back(o.id);
    check_primitive(o.primitive, what);
    const OrientedBox b = padded_bbox(o, s.bbox_padding);
    if (!is_rotation(b.pose.rotation, 1e-9)) fail(what + ": bbox rotation is not a rotation");
    if (!primitive_inside(o.primitive, b)) fail(what + " extends outside its bounding box");
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t k = i + 1; k < all.size(); ++k)
      if (primitives_overlap(*all[i], *all[k]))
        fail("primitives " + std::to_string(i) + " and " + std::to_string(k) + " overlap");
}

// ---------------------------------------------------------------------------
// Ground truth

GroundTruthSample ground_truth_ray(const SyntheticSpec& spec, const Ray& ray, bool include_objects, double step) {
  if (step <= 0.0) step = spec.quadrature_step;
  struct Span {
    Interval interval;
    const Primitive* primitive;
    int id;
  };
  std::vector<Span> spans;
  for (const Primitive& p : spec.background)
    if (auto iv = p.intersect(ray)) spans.push_back({*iv, &p, kBackgroundId});
  if (include_objects)
    for (const SyntheticObject& o : spec.objects)
      if (auto iv = o.primitive.intersect(ray)) spans.push_back({*iv, &o.primitive, o.id});
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.interval.t_in < b.interval.t_in; });

  GroundTruthSample gt;
  if (!spans.empty()) gt.first_hit = spans.front().id;
  double transmittance = 1.0;
  for (const Span& s : spans) {
    const double len = s.interval.t_out - s.interval.t_in;
    const auto n = static_cast<long>(std::max(1.0, std::ceil(len / step)));
    const double h = len / static_cast<double>(n);
    const double attenuation = std::exp(-s.primitive->density * h);
    for (long i = 0; i < n && transmittance > 1e-12; ++i) {
      const double t = s.interval.t_in + (static_cast<double>(i) + 0.5) * h;
      const double w = transmittance * (1.0 - attenuation);
      gt.rgb += s.primitive->color_at(ray.at(t)) * w;
      gt.depth += w * t;
      gt.opacity += w;
      transmittance *= attenuation;
    }
  }
  return gt;
}

std::vector<Camera> synthetic_cameras(const SyntheticSpec& spec) {
  std::vector<Camera> cams;
  for (int i = 0; i < spec.views; ++i) {
    const double az = 2.0 * std::numbers::pi * i / spec.views;
    const double el = (i % 2 == 0 ? spec.elevation_deg : spec.elevation_alt_deg) * std::numbers::pi / 180.0;
    const Vec3 eye = spec.orbit_target +
                     Vec3{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)} * spec.orbit_radius;
    Camera c;
    c.pose = look_at(eye, spec.orbit_target);
    c.fx = c.fy = spec.focal;
    c.cx = spec.width / 2.0;
    c.cy = spec.height / 2.0;
    c.width = spec.width;
    c.height = spec.height;
    cams.push_back(c);
  }
  return cams;
}

namespace {

constexpr double kDepthScale = 0.001;  // meters per stored depth unit

std::string frame_file(const char* dir, int i) {
  char name[32];
  std::snprintf(name, sizeof(name), "%s/%03d.png", dir, i);
  return name;
}

}  // namespace

void write_manifest(const SceneDataset& ds, const fs::path& root) {
  json j;
  j["format"] = "compsim-dataset";
  j["version"] = 1;
  j["name"] = ds.name;
  j["scene_bounds"] = box(ds.scene_bounds);
  j["depth_scale"] = kDepthScale;
  if (ds.background_resolution) j["background_resolution"] = resolution(*ds.background_resolution);
  if (ds.object_resolution) j["object_resolution"] = resolution(*ds.object_resolution);
  json instances = json::array();
  for (const InstanceInfo& inst : ds.instances) {
    instances.push_back({{"id", inst.id},
                         {"name", inst.name},
                         {"bbox", box(inst.bbox)},
                         {"embedding", std::vector<float>(inst.embedding.begin(), inst.embedding.end())}});
  }
  j["instances"] = instances;
  json frames = json::array();
  for (const Frame& f : ds.frames) {
    json jf{{"image", f.image_path}, {"camera", camera(f.camera)}, {"held_out", f.held_out}};
    if (!f.mask_path.empty()) jf["mask"] = f.mask_path;
    if (!f.inpaint_rgb_path.empty()) jf["inpaint_rgb"] = f.inpaint_rgb_path;
    if (!f.inpaint_depth_path.empty()) jf["inpaint_depth"] = f.inpaint_depth_path;
    frames.push_back(std::move(jf));
  }
  j["frames"] = frames;
  std::ofstream out(root / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (root / "manifest.json").string());
  out << j.dump(2) << '\n';
}

void make_synthetic_scene(const SyntheticSpec& spec, const fs::path& out_dir) {
  validate(spec);
  for (const char* sub : {"images", "masks", "inpaint_rgb", "inpaint_depth"}) fs::create_directories(out_dir / sub);

  SceneDataset ds;
  ds.name = spec.name;
  ds.root = out_dir;
  ds.scene_bounds = spec.scene_bounds;
  ds.background_resolution = spec.background_resolution;
  ds.object_resolution = spec.object_resolution;
  for (const SyntheticObject& o : spec.objects)
    ds.instances.push_back({o.id, o.name, embedding_from_name(o.name), padded_bbox(o, spec.bbox_padding)});

  const std::vector<Camera> cams = synthetic_cameras(spec);
  const std::size_t pixels = static_cast<std::size_t>(spec.width) * spec.height;
  for (int i = 0; i < spec.views; ++i) {
    ImageRgb8 rgb{spec.width, spec.height, std::vector<std::uint8_t>(3 * pixels)};
    ImageRgb8 inpaint{spec.width, spec.height, std::vector<std::uint8_t>(3 * pixels)};
    ImageGray16 mask{spec.width, spec.height, std::vector<std::uint16_t>(pixels)};
    ImageGray16 depth{spec.width, spec.height, std::vector<std::uint16_t>(pixels)};
    parallel_for(0, static_cast<std::size_t>(spec.height), [&](std::size_t y) {
      for (int x = 0; x < spec.width; ++x) {
        const std::size_t p = y * spec.width + x;
        const int ss = spec.supersample;
        Rgb full_rgb, bg_rgb;
        double bg_depth = 0.0;
        for (int sy = 0; sy < ss; ++sy)
          for (int sx = 0; sx < ss; ++sx) {
            const Ray r = pixel_ray(cams[i], x + (sx + 0.5) / ss, static_cast<double>(y) + (sy + 0.5) / ss);
            full_rgb += ground_truth_ray(spec, r, true).rgb;
            const GroundTruthSample bg = ground_truth_ray(spec, r, false);
            bg_rgb += bg.rgb;
            bg_depth += bg.depth;
          }
        const double inv = 1.0 / (ss * ss);
        for (int c = 0; c < 3; ++c) {
          rgb.data[3 * p + c] = to_u8(full_rgb[c] * inv);
          inpaint.data[3 * p + c] = to_u8(bg_rgb[c] * inv);
        }
        const Ray center = pixel_ray(cams[i], x + 0.5, static_cast<double>(y) + 0.5);
        const GroundTruthSample full = ground_truth_ray(spec, center, true);
        mask.data[p] = static_cast<std::uint16_t>(full.first_hit);
        depth.data[p] = static_cast<std::uint16_t>(std::clamp(std::lround(bg_depth * inv / kDepthScale), 0L, 65535L));
      }
    }, 1);

    Frame f;
    f.image_path = frame_file("images", i);
    f.mask_path = frame_file("masks", i);
    f.inpaint_rgb_path = frame_file("inpaint_rgb", i);
    f.inpaint_depth_path = frame_file("inpaint_depth", i);
    f.camera = cams[i];
    f.held_out = spec.held_out_every > 0 && (i + 1) % spec.held_out_every == 0;
    write_png(out_dir / f.image_path, rgb);
    write_png(out_dir / f.mask_path, mask);
    write_png(out_dir / f.inpaint_rgb_path, inpaint);
    write_png(out_dir / f.inpaint_depth_path, depth);
    ds.frames.push_back(std::move(f));
  }
  write_manifest(ds, out_dir);
  std::ofstream(out_dir / "synthetic_spec.json") << to_json(spec) << '\n';
}

}  // namespace compsim
