#include "mvrecon/scene.hpp"

#include <cmath>
#include <cstdio>

#include "mvrecon/isosurface.hpp"
#include "mvrecon/mesh_io.hpp"
#include "mvrecon/rasterizer.hpp"

namespace mvr {
namespace {

constexpr double kPi = 3.14159265358979323846;

/// One canonical double in [0, 1) from a hash.
double canonical(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Smooth trilinear value noise in [0, 1] at unit lattice scale.
double value_noise(const Vec3& p, std::uint64_t seed) {
  const Eigen::Array3d cell = p.array().floor();
  const Eigen::Array3d frac = p.array() - cell;
  const Eigen::Array3d s = frac * frac * (3.0 - 2.0 * frac);  // smoothstep
  double out = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    std::uint64_t h = seed;
    double weight = 1.0;
    for (int axis = 0; axis < 3; ++axis) {
      const int step = (corner >> axis) & 1;
      const auto coord = static_cast<std::int64_t>(cell[axis]) + step;
      h = mix_seed(h, static_cast<std::uint64_t>(coord) + 0x100000000ULL * (axis + 1));
      weight *= step ? s[axis] : 1.0 - s[axis];
    }
    out += weight * canonical(h);
  }
  return out;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

TriangleMesh reversed(TriangleMesh mesh) {
  for (Face& f : mesh.faces) std::swap(f[1], f[2]);
  return mesh;
}

void color_with(TriangleMesh& mesh, SceneTexture texture, std::uint64_t seed, double scale = 1.0) {
  mesh.colors.resize(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    mesh.colors[v] = texture_color(texture, scale * mesh.vertices[v], seed);
}

TriangleMesh merged_with_colors(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh out = a;
  const int off = a.vertex_count();
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  out.colors.insert(out.colors.end(), b.colors.begin(), b.colors.end());
  for (const Face& f : b.faces) out.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  return out;
}

std::filesystem::path view_path(const std::filesystem::path& dir, const char* sub, int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "view_%03d.png", index);
  return dir / sub / name;
}

}  // namespace

SceneShape shape_from_string(const std::string& name) {
  if (name == "sphere") return SceneShape::sphere;
  if (name == "cube") return SceneShape::cube;
  if (name == "torus") return SceneShape::torus;
  if (name == "icosahedron") return SceneShape::icosahedron;
  if (name == "blend") return SceneShape::blend;
  throw config_error("unknown scene shape '" + name +
                     "' (expected sphere|cube|torus|icosahedron|blend)");
}

SceneTexture texture_from_string(const std::string& name) {
  if (name == "checker") return SceneTexture::checker;
  if (name == "gradient") return SceneTexture::gradient;
  if (name == "noise") return SceneTexture::noise;
  throw config_error("unknown scene texture '" + name + "' (expected checker|gradient|noise)");
}

std::string to_string(SceneShape shape) {
  switch (shape) {
    case SceneShape::sphere: return "sphere";
    case SceneShape::cube: return "cube";
    case SceneShape::torus: return "torus";
    case SceneShape::icosahedron: return "icosahedron";
    case SceneShape::blend: return "blend";
  }
  throw config_error("invalid scene shape value");
}

std::string to_string(SceneTexture texture) {
  switch (texture) {
    case SceneTexture::checker: return "checker";
    case SceneTexture::gradient: return "gradient";
    case SceneTexture::noise: return "noise";
  }
  throw config_error("invalid scene texture value");
}

void SceneConfig::validate() const {
  if (train_views < 1) throw config_error("scene: train_views must be >= 1");
  if (test_views < 0) throw config_error("scene: test_views must be >= 0");
  if (resolution < 8) throw config_error("scene: resolution must be at least 8");
  if (!(rig_radius > 0.0) || !std::isfinite(rig_radius))
    throw config_error("scene: rig_radius must be positive");
  if (!(azimuth_span_deg > 0.0 && azimuth_span_deg <= 360.0))
    throw config_error("scene: azimuth_span_deg must lie in (0, 360]");
  if (!(elevation_min_deg >= -80.0 && elevation_min_deg <= elevation_max_deg &&
        elevation_max_deg <= 80.0))
    throw config_error("scene: elevation range must satisfy -80 <= min <= max <= 80 degrees");
}

Vec3 texture_color(SceneTexture texture, const Vec3& point, std::uint64_t seed) {
  switch (texture) {
    case SceneTexture::checker: {
      const double cell = 0.2;
      const auto parity = static_cast<std::int64_t>(std::floor(point.x() / cell)) +
                          static_cast<std::int64_t>(std::floor(point.y() / cell)) +
                          static_cast<std::int64_t>(std::floor(point.z() / cell));
      return (parity & 1) ? Vec3(0.92, 0.92, 0.92) : Vec3(0.12, 0.15, 0.5);
    }
    case SceneTexture::gradient:
      return {clamp01(0.5 + 0.6 * point.x()), clamp01(0.5 + 0.6 * point.y()),
              clamp01(0.5 + 0.6 * point.z())};
    case SceneTexture::noise: {
      const Vec3 q = 4.0 * point;
      return {0.1 + 0.8 * value_noise(q, mix_seed(seed, 101)),
              0.1 + 0.8 * value_noise(q, mix_seed(seed, 202)),
              0.1 + 0.8 * value_noise(q, mix_seed(seed, 303))};
    }
  }
  throw config_error("invalid scene texture value");
}

TriangleMesh make_scene_shape(SceneShape shape) {
  switch (shape) {
    case SceneShape::sphere: return make_icosphere(0.6, 4);
    case SceneShape::cube: return make_cuboid(Vec3::Zero(), {0.5, 0.5, 0.5}, 12);
    case SceneShape::torus: return make_torus(0.55, 0.22, 48, 24);
    case SceneShape::icosahedron: return make_icosphere(0.7, 0);
    case SceneShape::blend: {
      // sphere poking out of a box; the union of the two winding fields is
      // re-extracted so the result is one watertight surface
      TriangleMesh ball = make_icosphere(0.45, 3);
      for (Vec3& v : ball.vertices) v += Vec3(-0.25, 0.0, 0.1);
      const TriangleMesh box = make_cuboid({0.2, 0.0, -0.05}, {0.42, 0.42, 0.38}, 4);
      return winding_isosurface(merged_with_colors(ball, box), 96, 0.5, 0.05, 2);
    }
  }
  throw config_error("invalid scene shape value");
}

SyntheticScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  SyntheticScene scene;
  scene.gt_mesh = make_scene_shape(cfg.shape);
  color_with(scene.gt_mesh, cfg.texture, mix_seed(cfg.seed, 7));
  if (cfg.with_backdrop) {
    const double half = 1.5 * cfg.rig_radius;
    scene.backdrop = reversed(make_cuboid(Vec3::Zero(), {half, half, half}, 12));
    // coordinates scaled down so the texture varies smoothly across the box
    color_with(scene.backdrop, cfg.texture, mix_seed(cfg.seed, 8), 0.35 / half);
  }

  const Vec3 target = scene.gt_mesh.bounds().center();
  const double fx = 1.1 * cfg.resolution;
  const double c = 0.5 * cfg.resolution;
  const int total = cfg.train_views + cfg.test_views;
  const TriangleMesh render_mesh = cfg.with_backdrop
                                       ? merged_with_colors(scene.gt_mesh, scene.backdrop)
                                       : scene.gt_mesh;
  const Vec3 background(1.0, 1.0, 1.0);

  // A full-circle span wraps (8 views land 45 degrees apart); a partial arc
  // includes both endpoints (2 views with a 30-degree span sit 30 apart).
  const double span = cfg.azimuth_span_deg * kPi / 180.0;
  const double train_step = (cfg.azimuth_span_deg >= 360.0 || cfg.train_views == 1)
                                ? span / cfg.train_views
                                : span / (cfg.train_views - 1);
  for (int i = 0; i < total; ++i) {
    const bool train = i < cfg.train_views;
    // test azimuths cover the full circle with a half-step offset so the two
    // sets never collide
    const double azimuth =
        train ? train_step * i
              : 2.0 * kPi * (i - cfg.train_views + 0.5) / std::max(cfg.test_views, 1);
    const double elevation =
        (cfg.elevation_min_deg +
         (cfg.elevation_max_deg - cfg.elevation_min_deg) *
             canonical(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i)))) *
        kPi / 180.0;
    const Vec3 eye = target + cfg.rig_radius * Vec3(std::cos(elevation) * std::cos(azimuth),
                                                    std::cos(elevation) * std::sin(azimuth),
                                                    std::sin(elevation));
    Camera cam = look_at_camera(eye, target, Vec3::UnitZ(), fx, fx, c, c, cfg.resolution,
                                cfg.resolution);
    cam.split = train ? "train" : "test";
    scene.images.push_back(render_hard(render_mesh, cam, background));
    scene.masks.push_back(render_mask(scene.gt_mesh, cam));
    scene.cameras.push_back(std::move(cam));
  }
  return scene;
}

void save_scene(const std::filesystem::path& dir, const SyntheticScene& scene) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  std::filesystem::create_directories(dir / "masks", ec);
  if (ec) throw io_error("cannot create scene directory " + dir.string());
  save_cameras(dir / "cameras.json", scene.cameras);
  save_ply(dir / "gt.ply", scene.gt_mesh);
  if (scene.backdrop.face_count() > 0) save_ply(dir / "backdrop.ply", scene.backdrop);
  for (std::size_t i = 0; i < scene.images.size(); ++i) {
    save_png(view_path(dir, "images", static_cast<int>(i)), scene.images[i]);
    if (i < scene.masks.size()) save_png(view_path(dir, "masks", static_cast<int>(i)),
                                         scene.masks[i]);
  }
}

LoadedScene load_scene(const std::filesystem::path& dir) {
  LoadedScene out;
  out.cameras = load_cameras(dir / "cameras.json");
  for (std::size_t i = 0; i < out.cameras.size(); ++i) {
    out.images.push_back(load_png(view_path(dir, "images", static_cast<int>(i))));
    const auto mask_file = view_path(dir, "masks", static_cast<int>(i));
    if (std::filesystem::exists(mask_file)) out.masks.push_back(load_png(mask_file));
  }
  if (!out.masks.empty() && out.masks.size() != out.cameras.size())
    throw io_error("scene at " + dir.string() + " has masks for only some views");
  if (std::filesystem::exists(dir / "gt.ply")) out.gt_mesh = load_ply(dir / "gt.ply");
  if (std::filesystem::exists(dir / "backdrop.ply")) out.backdrop = load_ply(dir / "backdrop.ply");
  return out;
}

}  // namespace mvr
