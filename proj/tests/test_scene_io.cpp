// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <json.hpp>
#include <unistd.h>
#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <set>

#include "compsim/dataset.hpp"
#include "compsim/image_io.hpp"
#include "compsim/render.hpp"
#include "compsim/scene_io.hpp"
#include "test_util.hpp"

namespace compsim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::box_at;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("compsim_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

SyntheticSpec small_spec() {
  SyntheticSpec s = two_sphere_spec();
  s.width = s.height = 16;
  s.focal = 20.0;
  return s;
}

// Generated once per process: the full toy dataset and a 16x16 variant.
class GeneratedData : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    toy_dir_ = new fs::path(fresh_dir("toy"));
    make_synthetic_scene(two_sphere_spec(), *toy_dir_);
    small_dir_ = new fs::path(fresh_dir("small"));
    make_synthetic_scene(small_spec(), *small_dir_);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*toy_dir_);
    fs::remove_all(*small_dir_);
    delete toy_dir_;
    delete small_dir_;
  }

  // A writable copy of the small dataset.
  static fs::path copy_small(const std::string& name) {
    const fs::path dst = fresh_dir(name);
    fs::copy(*small_dir_, dst, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    return dst;
  }

  static fs::path* toy_dir_;
  static fs::path* small_dir_;
};
fs::path* GeneratedData::toy_dir_ = nullptr;
fs::path* GeneratedData::small_dir_ = nullptr;

std::string load_error(const fs::path& root) {
  try {
    load_dataset(root);
  } catch (const DatasetError& e) {
    return e.what();
  }
  return {};
}

TEST_F(GeneratedData, ToyDatasetHasTwentyFramesAndTwoInstances) {
  const SceneDataset ds = load_dataset(*toy_dir_);
  ASSERT_EQ(ds.frames.size(), 20u);
  ASSERT_EQ(ds.instances.size(), 2u);
  EXPECT_EQ(ds.instances[0].id, 1);
  EXPECT_EQ(ds.instances[1].id, 2);
  EXPECT_EQ(ds.instances[0].name, "red ball");
  std::vector<int> held;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    const Frame& f = ds.frames[i];
    EXPECT_EQ(f.rgb.width, 64);
    EXPECT_EQ(f.rgb.height, 64);
    EXPECT_EQ(f.mask.size(), 64u * 64u);
    EXPECT_EQ(f.inpaint_depth.size(), 64u * 64u);
    if (f.held_out) held.push_back(static_cast<int>(i));
  }
  EXPECT_EQ(held, (std::vector<int>{4, 9, 14, 19}));
}

TEST_F(GeneratedData, MasksContainBothObjectsAndNothingElse) {
  const SceneDataset ds = load_dataset(*toy_dir_);
  std::set<int> seen;
  for (const Frame& f : ds.frames) seen.insert(f.mask.begin(), f.mask.end());
  EXPECT_EQ(seen, (std::set<int>{0, 1, 2}));
}

TEST_F(GeneratedData, LoadIsDeterministic) {
  const SceneDataset a = load_dataset(*small_dir_);
  const SceneDataset b = load_dataset(*small_dir_);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].rgb.data, b.frames[i].rgb.data);
    EXPECT_EQ(a.frames[i].mask, b.frames[i].mask);
    EXPECT_EQ(a.frames[i].image_path, b.frames[i].image_path);
  }
}

TEST_F(GeneratedData, MissingMaskIsNamed) {
  const fs::path root = copy_small("missing_mask");
  fs::remove(root / "masks/003.png");
  const std::string err = load_error(root);
  EXPECT_NE(err.find("masks/003.png"), std::string::npos) << err;
  fs::remove_all(root);
}

TEST_F(GeneratedData, ImproperRotationIsReportedWithFrameIndex) {
  const fs::path root = copy_small("improper");
  json m = read_json(root / "manifest.json");
  auto& rot = m["frames"][2]["camera"]["rotation"];
  for (auto& v : rot[0]) v = -v.get<double>();  // determinant -1
  write_json(root / "manifest.json", m);
  const std::string err = load_error(root);
  EXPECT_NE(err.find("improper rotation, frame 2"), std::string::npos) << err;
  fs::remove_all(root);
}

TEST_F(GeneratedData, AllIssuesAreCollected) {
  const fs::path root = copy_small("many_issues");
  json m = read_json(root / "manifest.json");
  for (auto& v : m["frames"][1]["camera"]["rotation"][0]) v = -v.get<double>();
  m["instances"][1]["id"] = 1;
  write_json(root / "manifest.json", m);
  fs::remove(root / "inpaint_rgb/007.png");
  try {
    load_dataset(root);
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    const std::string all = e.what();
    EXPECT_GE(e.issues().size(), 3u);
    EXPECT_NE(all.find("improper rotation, frame 1"), std::string::npos) << all;
    EXPECT_NE(all.find("duplicate instance id 1"), std::string::npos) << all;
    EXPECT_NE(all.find("inpaint_rgb/007.png"), std::string::npos) << all;
    // Mask pixels of the now-unlisted object 2 are flagged too.
    EXPECT_NE(all.find("unknown mask id 2"), std::string::npos) << all;
  }
  fs::remove_all(root);
}

TEST_F(GeneratedData, SizeMismatchIsReported) {
  const fs::path root = copy_small("size");
  json m = read_json(root / "manifest.json");
  m["frames"][0]["camera"]["width"] = 17;
  write_json(root / "manifest.json", m);
  const std::string err = load_error(root);
  EXPECT_NE(err.find("images/000.png is 16x16, camera expects 17x16"), std::string::npos) << err;
  fs::remove_all(root);
}

TEST(Dataset, MissingManifest) {
  const fs::path root = fresh_dir("empty");
  EXPECT_THROW(load_dataset(root), DatasetError);
  fs::remove_all(root);
}

TEST_F(GeneratedData, ManifestValuesRoundTrip) {
  const SceneDataset ds = load_dataset(*small_dir_);
  const std::vector<Camera> cams = synthetic_cameras(small_spec());
  ASSERT_EQ(cams.size(), ds.frames.size());
  for (std::size_t i = 0; i < cams.size(); ++i) {
    EXPECT_EQ(ds.frames[i].camera.pose.rotation.m, cams[i].pose.rotation.m);
    EXPECT_EQ(ds.frames[i].camera.pose.translation.x, cams[i].pose.translation.x);
    EXPECT_EQ(ds.frames[i].camera.fx, cams[i].fx);
  }
  EXPECT_EQ(ds.instances[0].embedding, embedding_from_name("red ball"));
  ASSERT_TRUE(ds.background_resolution.has_value());
  EXPECT_EQ(*ds.background_resolution, (Resolution{64, 64, 64}));
}

TEST_F(GeneratedData, InpaintDepthMatchesGroundTruth) {
  const SceneDataset ds = load_dataset(*small_dir_);
  const SyntheticSpec spec = small_spec();
  const Frame& f = ds.frames[3];
  const int ss = spec.supersample;
  for (int p : {0, 40, 100, 136, 200, 255}) {
    double depth = 0.0;
    for (int i = 0; i < ss * ss; ++i) {
      const Ray r = pixel_ray(f.camera, p % 16 + (i % ss + 0.5) / ss, p / 16 + (i / ss + 0.5) / ss);
      depth += ground_truth_ray(spec, r, false).depth / (ss * ss);
    }
    // Stored as whole millimeters.
    EXPECT_NEAR(f.inpaint_depth[p], depth, 0.0005 + 1e-5);
  }
}

TEST_F(GeneratedData, SceneFromDatasetUsesIdsNamesAndResolutions) {
  const SceneDataset ds = load_dataset(*small_dir_);
  const Scene s = scene_from_dataset(ds);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_TRUE(s.nodes()[0].is_background());
  EXPECT_EQ(s.nodes()[0].field().resolution(), (Resolution{64, 64, 64}));
  EXPECT_EQ(s.at(1).name, "red ball");
  EXPECT_EQ(s.at(2).field().resolution(), (Resolution{32, 32, 32}));
  EXPECT_EQ(s.at(2).bbox.half_extents.x, ds.instances[1].bbox.half_extents.x);
  EXPECT_EQ(s.next_id(), 3);

  SceneInitOptions opts;
  opts.object_resolution = Resolution{4, 5, 6};
  EXPECT_EQ(scene_from_dataset(ds, opts).at(1).field().resolution(), (Resolution{4, 5, 6}));
}

// --- synthetic generator -------------------------------------------------

TEST(Synthetic, ObjectFreeSpecGivesZeroMasksAndIdenticalInpaint) {
  SyntheticSpec spec = small_spec();
  spec.objects.clear();
  spec.views = 3;
  const fs::path root = fresh_dir("object_free");
  make_synthetic_scene(spec, root);
  const SceneDataset ds = load_dataset(root);
  for (const Frame& f : ds.frames) {
    for (int id : f.mask) EXPECT_EQ(id, 0);
    EXPECT_EQ(f.rgb.data, f.inpaint_rgb.data);
  }
  fs::remove_all(root);
}

TEST(Synthetic, SphereMatchesClosedForm) {
  // Constant density and color: opacity = 1 - exp(-sigma * chord).
  SyntheticSpec spec;
  spec.scene_bounds = box_at({0, 0, 0}, {5, 5, 5});
  SyntheticObject o;
  o.id = 1;
  o.primitive.center = {0.3, -0.2, 0.1};
  o.primitive.radius = 1.7;
  o.primitive.density = 2.5;
  o.primitive.color = {0.2, 0.6, 0.9};
  spec.objects.push_back(o);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    Ray r;
    r.origin = testing::random_vec(rng, -1, 1) + Vec3{0, 0, 8};
    r.direction = normalize(Vec3{0, 0, -1} + testing::random_vec(rng, -0.2, 0.2));
    const Vec3 oc = r.origin - o.primitive.center;
    const double b = dot(oc, r.direction);
    const double disc = b * b - (dot(oc, oc) - o.primitive.radius * o.primitive.radius);
    const double chord = disc > 0 ? 2 * std::sqrt(disc) : 0.0;
    const double opacity = 1.0 - std::exp(-o.primitive.density * chord);
    const GroundTruthSample gt = ground_truth_ray(spec, r, true);
    EXPECT_NEAR(gt.opacity, opacity, 1e-12);
    EXPECT_NEAR(gt.rgb.y, 0.6 * opacity, 1e-12);
    EXPECT_EQ(gt.first_hit, chord > 0 ? 1 : 0);
  }
}

TEST(Synthetic, QuadratureConverges) {
  const SyntheticSpec spec = two_sphere_spec();
  const std::vector<Camera> cams = synthetic_cameras(spec);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 64.0);
  for (int i = 0; i < 60; ++i) {
    const Ray r = pixel_ray(cams[i % cams.size()], u(rng), u(rng));
    const GroundTruthSample coarse = ground_truth_ray(spec, r, true);
    const GroundTruthSample fine = ground_truth_ray(spec, r, true, spec.quadrature_step / 10);
    EXPECT_LT(max_abs_diff(coarse.rgb, fine.rgb), 1e-4);
    EXPECT_NEAR(coarse.opacity, fine.opacity, 1e-9);
    EXPECT_NEAR(coarse.depth, fine.depth, 1e-3);
    EXPECT_EQ(coarse.first_hit, fine.first_hit);
  }
}

TEST(Synthetic, CamerasOrbitTheTarget) {
  const SyntheticSpec spec = two_sphere_spec();
  const auto cams = synthetic_cameras(spec);
  ASSERT_EQ(cams.size(), 20u);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    EXPECT_NEAR(length(cams[i].position() - spec.orbit_target), spec.orbit_radius, 1e-9);
    const Vec3 to_target = normalize(spec.orbit_target - cams[i].position());
    EXPECT_NEAR(dot(cams[i].forward(), to_target), 1.0, 1e-12);
    const double el = std::asin((cams[i].position().z - spec.orbit_target.z) / spec.orbit_radius) * 180 / M_PI;
    EXPECT_NEAR(el, i % 2 == 0 ? 25.0 : 40.0, 1e-9);
  }
}

TEST(Synthetic, SpecJsonRoundTrip) {
  const SyntheticSpec a = two_sphere_spec();
  const SyntheticSpec b = synthetic_spec_from_json(to_json(a));
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(b.objects.size(), 2u);
  EXPECT_EQ(b.objects[1].primitive.radius, 2.5);
  EXPECT_THROW(synthetic_spec_from_json("{"), std::invalid_argument);
}

TEST(Synthetic, ValidationRejectsBadSpecs) {
  EXPECT_NO_THROW(validate(two_sphere_spec()));
  {
    SyntheticSpec s = two_sphere_spec();
    s.objects[1].primitive.center = s.objects[0].primitive.center + Vec3{1, 0, 0};
    EXPECT_THROW(validate(s), std::invalid_argument);  // spheres overlap
  }
  {
    SyntheticSpec s = two_sphere_spec();
    s.objects[0].primitive.center.z = 1.0;  // sinks into the floor
    EXPECT_THROW(validate(s), std::invalid_argument);
  }
  {
    SyntheticSpec s = two_sphere_spec();
    s.objects[1].id = 1;
    EXPECT_THROW(validate(s), std::invalid_argument);
  }
  {
    SyntheticSpec s = two_sphere_spec();
    s.objects[0].bbox = box_at(s.objects[0].primitive.center, {1, 1, 1});
    EXPECT_THROW(validate(s), std::invalid_argument);  // sphere exceeds its box
  }
  {
    SyntheticSpec s = two_sphere_spec();
    s.objects[0].primitive.color.x = 1.5;
    EXPECT_THROW(validate(s), std::invalid_argument);
  }
  {
    SyntheticSpec s = two_sphere_spec();
    s.background[0].half_extents.x = 20;  // floor leaves the scene bounds
    EXPECT_THROW(validate(s), std::invalid_argument);
  }
}

TEST(Synthetic, RotatedBoxesOverlapTest) {
  SyntheticSpec s;
  s.scene_bounds = box_at({0, 0, 0}, {10, 10, 10});
  Primitive a;
  a.shape = PrimitiveShape::Box;
  a.half_extents = {1, 1, 1};
  Primitive b = a;
  b.center = {2.2, 0, 0};
  s.background = {a, b};
  EXPECT_NO_THROW(validate(s));
  // Rotating b by 45 degrees about z puts a corner 2.2 - sqrt(2) < 1 from a.
  s.background[1].rotation = rotation_about(Axis::Z, M_PI / 4);
  EXPECT_THROW(validate(s), std::invalid_argument);
}

// --- checkpoints ---------------------------------------------------------

Scene random_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SceneNode bg(NodeKind::Background, box_at({0, 0, 0}, {3, 3, 3}), VoxelField(Resolution{6, 5, 4}));
  testing::fill_random(bg.mutable_field(), rng, -4, 2);
  Scene s("checkpoint scene", bg);
  for (int k = 0; k < 3; ++k) {
    SceneNode n(NodeKind::Object, box_at(testing::random_vec(rng, -1, 1), {0.5, 0.6, 0.7}, testing::random_rotation(rng)),
                VoxelField(Resolution{4, 4, 3}));
    testing::fill_random(n.mutable_field(), rng, -2, 3);
    n.name = "obj " + std::to_string(k);
    n.embedding = embedding_from_name(n.name);
    n.appearance.gain = testing::random_vec(rng, 0.5, 1.5);
    n.appearance.bias = testing::random_vec(rng, -0.1, 0.1);
    s.add_node(n);
  }
  s.at(2).selected = true;
  s.remove_node(3);  // retired id 3 must stay retired
  return s;
}

void expect_same_scene(const Scene& a, const Scene& b) {
  EXPECT_EQ(a.name(), b.name());
  EXPECT_EQ(a.next_id(), b.next_id());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const SceneNode& x = a.nodes()[i];
    const SceneNode& y = b.nodes()[i];
    EXPECT_EQ(x.id, y.id);
    EXPECT_EQ(x.kind, y.kind);
    EXPECT_EQ(x.name, y.name);
    EXPECT_EQ(x.embedding, y.embedding);
    EXPECT_EQ(x.bbox.pose.rotation.m, y.bbox.pose.rotation.m);
    EXPECT_EQ(std::memcmp(&x.bbox.pose.translation, &y.bbox.pose.translation, sizeof(Vec3)), 0);
    EXPECT_EQ(std::memcmp(&x.bbox.half_extents, &y.bbox.half_extents, sizeof(Vec3)), 0);
    EXPECT_EQ(x.appearance, y.appearance);
    EXPECT_EQ(x.selected, y.selected);
    EXPECT_TRUE(x.field().bitwise_equal(y.field()));
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const fs::path dir = fresh_dir("ckpt");
  const Scene s = random_scene(5);
  save_scene(s, dir / "a.csim", R"({"psnr": 31.5})");
  const Checkpoint ck = load_checkpoint(dir / "a.csim");
  expect_same_scene(s, ck.scene);
  EXPECT_EQ(json::parse(ck.info_json)["psnr"].get<double>(), 31.5);

  RenderSettings rs;
  rs.channels = kChannelRgb | kChannelDepth | kChannelPanoptic;
  rs.sampling.n_per_node = 16;
  const Camera cam = testing::test_camera(12, 10);
  const RenderedImage r1 = render_image(s, cam, rs);
  const RenderedImage r2 = render_image(ck.scene, cam, rs);
  EXPECT_EQ(std::memcmp(r1.rgb.data(), r2.rgb.data(), r1.rgb.size() * sizeof(double)), 0);
  EXPECT_EQ(r1.depth, r2.depth);
  EXPECT_EQ(r1.panoptic, r2.panoptic);

  // Saving the loaded scene again produces the same bytes.
  save_scene(ck.scene, dir / "b.csim", ck.info_json);
  EXPECT_EQ(read_bytes(dir / "a.csim"), read_bytes(dir / "b.csim"));
  fs::remove_all(dir);
}

std::string checkpoint_error(const fs::path& p) {
  try {
    load_checkpoint(p);
  } catch (const CheckpointError& e) {
    return e.what();
  }
  return {};
}

TEST(Checkpoint, CorruptionIsDetected) {
  const fs::path dir = fresh_dir("corrupt");
  save_scene(random_scene(6), dir / "s.csim");
  const auto bytes = read_bytes(dir / "s.csim");

  auto truncated = bytes;
  truncated.resize(bytes.size() - 37);
  write_bytes(dir / "t.csim", truncated);
  EXPECT_NE(checkpoint_error(dir / "t.csim").find("checksum"), std::string::npos);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  write_bytes(dir / "f.csim", flipped);
  EXPECT_NE(checkpoint_error(dir / "f.csim").find("checksum"), std::string::npos);

  auto magic = bytes;
  magic[0] = 'X';
  write_bytes(dir / "m.csim", magic);
  EXPECT_NE(checkpoint_error(dir / "m.csim").find("magic"), std::string::npos);

  // Future version with a valid checksum.
  auto version = bytes;
  version[8] = 9;
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), version.data(), static_cast<uInt>(version.size() - 4)));
  std::memcpy(version.data() + version.size() - 4, &crc, 4);
  write_bytes(dir / "v.csim", version);
  EXPECT_NE(checkpoint_error(dir / "v.csim").find("version 9"), std::string::npos);

  EXPECT_NE(checkpoint_error(dir / "absent.csim").find("cannot open"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Checkpoint, RejectsNonObjectInfo) {
  const fs::path dir = fresh_dir("info");
  EXPECT_THROW(save_scene(random_scene(1), dir / "x.csim", "[1, 2]"), CheckpointError);
  EXPECT_THROW(save_scene(random_scene(1), dir / "x.csim", "{"), CheckpointError);
  EXPECT_FALSE(fs::exists(dir / "x.csim"));
  fs::remove_all(dir);
}

TEST(Library, ListsValidCheckpointsSorted) {
  const fs::path dir = fresh_dir("library");
  Scene a = random_scene(2);
  a.set_name("zeta");
  Scene b = random_scene(3);
  b.set_name("alpha");
  save_scene(a, dir / "b_scene.csim");
  save_scene(b, dir / "a_scene.csim");
  write_bytes(dir / "junk.csim", {1, 2, 3});
  write_bytes(dir / "notes.txt", {1, 2, 3});
  const auto lib = list_library(dir);
  ASSERT_EQ(lib.size(), 2u);
  EXPECT_EQ(lib[0].path.filename(), "a_scene.csim");
  EXPECT_EQ(lib[0].scene_name, "alpha");
  EXPECT_EQ(lib[1].scene_name, "zeta");
  EXPECT_EQ(lib[1].object_ids, (std::vector<int>{1, 2}));
  EXPECT_EQ(lib[1].object_names, (std::vector<std::string>{"obj 0", "obj 1"}));
  EXPECT_TRUE(list_library(dir / "nope").empty());
  fs::remove_all(dir);
}

}  // namespace
}  // namespace compsim
