#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "mvrecon/mesh.hpp"
#include "mvrecon/scene.hpp"
#include "mvrecon/winding.hpp"

using namespace mvr;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Small, fast default for rig-geometry tests: flat-shaded icosahedron at 32px.
SceneConfig tiny_config() {
  SceneConfig cfg;
  cfg.shape = SceneShape::icosahedron;
  cfg.texture = SceneTexture::checker;
  cfg.train_views = 8;
  cfg.test_views = 4;
  cfg.resolution = 32;
  return cfg;
}

double azimuth_about(const Vec3& center, const Vec3& target) {
  return std::atan2(center.y() - target.y(), center.x() - target.x());
}

fs::path temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / tag;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE_BEGIN("scene");

TEST_CASE("shape and texture names round-trip") {
  for (const char* name : {"sphere", "cube", "torus", "icosahedron", "blend"})
    CHECK(to_string(shape_from_string(name)) == name);
  for (const char* name : {"checker", "gradient", "noise"})
    CHECK(to_string(texture_from_string(name)) == name);
  CHECK_THROWS_AS(shape_from_string("teapot"), Error);
  CHECK_THROWS_AS(texture_from_string("marble"), Error);
}

TEST_CASE("procedural textures are deterministic and bounded") {
  const Vec3 p(0.31, -0.12, 0.57);
  for (SceneTexture tex : {SceneTexture::checker, SceneTexture::gradient, SceneTexture::noise}) {
    const Vec3 a = texture_color(tex, p, 42);
    const Vec3 b = texture_color(tex, p, 42);
    CHECK(a == b);
    for (int c = 0; c < 3; ++c) {
      CHECK(a[c] >= 0.0);
      CHECK(a[c] <= 1.0);
    }
  }

  SUBCASE("checker uses exactly two colors and alternates across a cell") {
    std::set<std::array<double, 3>> seen;
    for (int i = 0; i < 64; ++i) {
      const Vec3 q(0.11 * i - 3.0, 0.07 * i, -0.05 * i + 1.0);
      const Vec3 c = texture_color(SceneTexture::checker, q, 0);
      seen.insert({c.x(), c.y(), c.z()});
    }
    CHECK(seen.size() == 2);
    const Vec3 base = texture_color(SceneTexture::checker, {0.1, 0.1, 0.1}, 0);
    const Vec3 step = texture_color(SceneTexture::checker, {0.3, 0.1, 0.1}, 0);
    CHECK(base != step);
  }

  SUBCASE("gradient is affine in position and clamped") {
    CHECK((texture_color(SceneTexture::gradient, Vec3::Zero(), 0) - Vec3(0.5, 0.5, 0.5)).norm() ==
          0.0);
    CHECK(texture_color(SceneTexture::gradient, {2.0, -2.0, 0.25}, 0) ==
          Vec3(1.0, 0.0, 0.65));
  }

  SUBCASE("noise responds to the seed and varies smoothly") {
    const Vec3 a = texture_color(SceneTexture::noise, p, 1);
    const Vec3 b = texture_color(SceneTexture::noise, p, 2);
    CHECK(a != b);
    const Vec3 nearby = texture_color(SceneTexture::noise, p + Vec3(1e-5, 0, 0), 1);
    CHECK((a - nearby).norm() < 1e-3);
  }
}

TEST_CASE("scene shapes are watertight with the advertised topology") {
  for (SceneShape shape : {SceneShape::sphere, SceneShape::cube, SceneShape::torus,
                           SceneShape::icosahedron, SceneShape::blend}) {
    CAPTURE(to_string(shape));
    const TriangleMesh mesh = make_scene_shape(shape);
    const MeshStats stats = mesh_stats(mesh);
    CHECK(stats.watertight);
    CHECK(stats.connected_components == 1);
    REQUIRE(stats.genus.has_value());
    CHECK(*stats.genus == (shape == SceneShape::torus ? 1 : 0));
    // everything fits well inside the default 2.5-radius camera rig
    CHECK(mesh.bounds().diagonal() < 2.8);
    CHECK(mesh.bounds().center().norm() < 0.3);
  }
}

TEST_CASE("camera rig looks at the object from the configured ring") {
  SceneConfig cfg = tiny_config();
  const SyntheticScene scene = generate_scene(cfg);
  REQUIRE(static_cast<int>(scene.cameras.size()) == cfg.train_views + cfg.test_views);
  REQUIRE(scene.images.size() == scene.cameras.size());
  REQUIRE(scene.masks.size() == scene.cameras.size());

  const Vec3 target = scene.gt_mesh.bounds().center();
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const Camera& cam = scene.cameras[i];
    CHECK(cam.split == (i < static_cast<std::size_t>(cfg.train_views) ? "train" : "test"));
    CHECK(cam.width == cfg.resolution);
    CHECK(cam.height == cfg.resolution);

    const Vec3 center = cam.center();
    CHECK(std::abs((center - target).norm() - cfg.rig_radius) < 1e-12);
    // optical axis through the centroid
    CHECK((cam.forward() - (target - center).normalized()).norm() < 1e-12);
    // elevation inside the sampled band
    const double elevation = std::asin((center.z() - target.z()) / cfg.rig_radius);
    CHECK(elevation >= -1e-12);
    CHECK(elevation <= 15.0 * kPi / 180.0 + 1e-12);
  }

  SUBCASE("train azimuths are 45 degrees apart on the full circle") {
    for (int i = 0; i + 1 < cfg.train_views; ++i) {
      double gap = azimuth_about(scene.cameras[i + 1].center(), target) -
                   azimuth_about(scene.cameras[i].center(), target);
      if (gap < 0.0) gap += 2.0 * kPi;
      CHECK(gap == doctest::Approx(kPi / 4.0).epsilon(1e-12));
    }
  }

  SUBCASE("images are color renders and masks are binary coverage") {
    const Image& img = scene.images[0];
    CHECK(img.channels == 3);
    const Image& mask = scene.masks[0];
    CHECK(mask.channels == 1);
    double mask_sum = 0.0;
    for (double v : mask.data) {
      CHECK((v == 0.0 || v == 1.0));
      mask_sum += v;
    }
    // the object covers part of the frame but never reaches the border
    CHECK(mask_sum > 0.0);
    CHECK(mask_sum < mask.data.size());
    CHECK(mask.at(0, 0, 0) == 0.0);
    // background pixels keep the constant fill
    CHECK(img.at(0, 0, 0) == 1.0);
  }
}

TEST_CASE("narrow rigs separate two cameras by the requested angle") {
  for (double span : {30.0, 90.0}) {
    SceneConfig cfg = tiny_config();
    cfg.train_views = 2;
    cfg.test_views = 1;
    cfg.azimuth_span_deg = span;
    cfg.elevation_max_deg = 0.0;  // keep the pair on the equator
    const SyntheticScene scene = generate_scene(cfg);
    const Vec3 target = scene.gt_mesh.bounds().center();
    const Vec3 d0 = (scene.cameras[0].center() - target).normalized();
    const Vec3 d1 = (scene.cameras[1].center() - target).normalized();
    const double angle = std::acos(std::clamp(d0.dot(d1), -1.0, 1.0)) * 180.0 / kPi;
    CHECK(angle == doctest::Approx(span).epsilon(1e-9));
  }
}

TEST_CASE("same seed reproduces the scene bitwise, different seed does not") {
  SceneConfig cfg = tiny_config();
  cfg.texture = SceneTexture::noise;
  cfg.seed = 99;
  const SyntheticScene a = generate_scene(cfg);
  const SyntheticScene b = generate_scene(cfg);
  CHECK(a.gt_mesh.vertices == b.gt_mesh.vertices);
  CHECK(a.gt_mesh.colors == b.gt_mesh.colors);
  for (std::size_t i = 0; i < a.cameras.size(); ++i) {
    CHECK(a.cameras[i].rotation == b.cameras[i].rotation);
    CHECK(a.cameras[i].translation == b.cameras[i].translation);
    CHECK(a.images[i].data == b.images[i].data);
  }

  cfg.seed = 100;
  const SyntheticScene c = generate_scene(cfg);
  CHECK(a.gt_mesh.colors != c.gt_mesh.colors);           // noise texture reseeded
  CHECK(a.cameras[1].translation != c.cameras[1].translation);  // elevations resampled
}

TEST_CASE("backdrop surrounds the rig and shows up behind the object") {
  SceneConfig cfg = tiny_config();
  cfg.test_views = 0;
  cfg.with_backdrop = true;
  const SyntheticScene scene = generate_scene(cfg);
  REQUIRE(scene.backdrop.face_count() > 0);

  const Aabb box = scene.backdrop.bounds();
  CHECK(box.extent().x() == doctest::Approx(3.0 * cfg.rig_radius));
  // faces point inward: winding from inside is -1 for a reversed shell
  CHECK(winding_number(scene.backdrop, Vec3::Zero()) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(scene.backdrop.has_colors());

  // a border pixel now sees the textured box instead of the constant fill
  const Image& img = scene.images[0];
  const Vec3 corner(img.at(0, 0, 0), img.at(0, 0, 1), img.at(0, 0, 2));
  CHECK(corner != Vec3(1.0, 1.0, 1.0));

  SceneConfig plain = cfg;
  plain.with_backdrop = false;
  const SyntheticScene bare = generate_scene(plain);
  CHECK(bare.backdrop.face_count() == 0);
  CHECK(bare.images[0].at(0, 0, 0) == 1.0);
  // the object itself renders identically with and without the backdrop
  const Image& mask = bare.masks[0];
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y, 0) == 1.0)
        for (int ch = 0; ch < 3; ++ch)
          CHECK(scene.images[0].at(x, y, ch) == doctest::Approx(bare.images[0].at(x, y, ch))
                                                    .epsilon(1e-12));
}

TEST_CASE("scene directories round-trip through save and load") {
  SceneConfig cfg = tiny_config();
  cfg.train_views = 2;
  cfg.test_views = 1;
  cfg.resolution = 16;
  const SyntheticScene scene = generate_scene(cfg);
  const fs::path dir = temp_dir("mvrecon_scene_roundtrip");
  save_scene(dir, scene);

  const LoadedScene loaded = load_scene(dir);
  REQUIRE(loaded.cameras.size() == scene.cameras.size());
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    CHECK(loaded.cameras[i].rotation == scene.cameras[i].rotation);
    CHECK(loaded.cameras[i].translation == scene.cameras[i].translation);
    CHECK(loaded.cameras[i].fx == scene.cameras[i].fx);
    CHECK(loaded.cameras[i].split == scene.cameras[i].split);
  }
  REQUIRE(loaded.images.size() == scene.images.size());
  for (std::size_t i = 0; i < scene.images.size(); ++i) {
    REQUIRE(loaded.images[i].same_shape(scene.images[i]));
    for (std::size_t k = 0; k < scene.images[i].data.size(); ++k)
      CHECK(std::abs(loaded.images[i].data[k] - scene.images[i].data[k]) <= 0.5 / 255.0 + 1e-12);
  }
  REQUIRE(loaded.masks.size() == scene.masks.size());
  CHECK(loaded.masks[0].data == scene.masks[0].data);  // binary masks survive 8-bit exactly
  REQUIRE(loaded.gt_mesh.has_value());
  CHECK(loaded.gt_mesh->vertices == scene.gt_mesh.vertices);
  CHECK(loaded.gt_mesh->colors == scene.gt_mesh.colors);
  CHECK_FALSE(loaded.backdrop.has_value());

  SUBCASE("masks are optional but must cover every view") {
    fs::remove_all(dir / "masks");
    CHECK(load_scene(dir).masks.empty());
    fs::create_directories(dir / "masks");
    save_png(dir / "masks" / "view_000.png", scene.masks[0]);
    CHECK_THROWS_WITH_AS(load_scene(dir), doctest::Contains("masks for only some views"), Error);
  }

  fs::remove_all(dir);
}

TEST_CASE("backdrop meshes are saved and loaded alongside the object") {
  SceneConfig cfg = tiny_config();
  cfg.train_views = 1;
  cfg.test_views = 0;
  cfg.resolution = 16;
  cfg.with_backdrop = true;
  const SyntheticScene scene = generate_scene(cfg);
  const fs::path dir = temp_dir("mvrecon_scene_backdrop");
  save_scene(dir, scene);
  const LoadedScene loaded = load_scene(dir);
  REQUIRE(loaded.backdrop.has_value());
  CHECK(loaded.backdrop->vertices == scene.backdrop.vertices);
  CHECK(loaded.backdrop->faces == scene.backdrop.faces);
  fs::remove_all(dir);
}

TEST_CASE("configuration limits are enforced") {
  const SceneConfig good = tiny_config();
  auto expect_throw = [](SceneConfig cfg) { CHECK_THROWS_AS(generate_scene(cfg), Error); };
  SceneConfig cfg = good;
  cfg.train_views = 0;
  expect_throw(cfg);
  cfg = good;
  cfg.test_views = -1;
  expect_throw(cfg);
  cfg = good;
  cfg.resolution = 4;
  expect_throw(cfg);
  cfg = good;
  cfg.rig_radius = 0.0;
  expect_throw(cfg);
  cfg = good;
  cfg.azimuth_span_deg = 0.0;
  expect_throw(cfg);
  cfg = good;
  cfg.azimuth_span_deg = 400.0;
  expect_throw(cfg);
  cfg = good;
  cfg.elevation_min_deg = 20.0;
  cfg.elevation_max_deg = 10.0;
  expect_throw(cfg);
}

TEST_SUITE_END();
