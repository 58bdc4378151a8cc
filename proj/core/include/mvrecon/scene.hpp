#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvrecon/camera.hpp"
#include "mvrecon/image.hpp"
#include "mvrecon/mesh.hpp"
#include "mvrecon/types.hpp"

namespace mvr {

enum class SceneShape { sphere, cube, torus, icosahedron, blend };
enum class SceneTexture { checker, gradient, noise };

/// Parsers accept the lower-case enum names and throw a config error on
/// anything else; to_string inverts them.
SceneShape shape_from_string(const std::string& name);
SceneTexture texture_from_string(const std::string& name);
std::string to_string(SceneShape shape);
std::string to_string(SceneTexture texture);

struct SceneConfig {
  SceneShape shape = SceneShape::sphere;
  SceneTexture texture = SceneTexture::checker;
  int train_views = 8;
  int test_views = 100;
  int resolution = 128;
  /// Distance from the object centroid to every camera.
  double rig_radius = 2.5;
  /// Train azimuths are spread uniformly over this span starting at 0. The
  /// full circle wraps (8 views sit 45 degrees apart); a partial arc includes
  /// both endpoints, so two views with a 30-degree span sit 30 degrees apart.
  double azimuth_span_deg = 360.0;
  double elevation_min_deg = 0.0;
  double elevation_max_deg = 15.0;
  /// Surround the object with an inward-facing textured box so renders have
  /// structured background instead of a constant fill.
  bool with_backdrop = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A ground-truth object, a camera rig around it, and reference renders.
/// Cameras hold train views first, then test views, and their `split` field
/// says which is which; images[i] and masks[i] belong to cameras[i].
struct SyntheticScene {
  TriangleMesh gt_mesh;   // per-vertex colored
  TriangleMesh backdrop;  // empty unless requested; faces point inward
  std::vector<Camera> cameras;
  std::vector<Image> images;  // 3-channel reference renders
  std::vector<Image> masks;   // 1-channel object coverage
};

/// Procedural vertex color at a point, in [0,1]^3. The checker alternates two
/// fixed colors on a 0.2-sized 3D grid, the gradient maps position linearly
/// to RGB, and the noise is seeded trilinear value noise (smooth, aperiodic).
Vec3 texture_color(SceneTexture texture, const Vec3& point, std::uint64_t seed);

/// Ground-truth geometry for a shape, uncolored: all shapes fit in a ball of
/// radius ~0.8 around the origin. `blend` is the watertight union of an
/// offset sphere and box, re-extracted from their joint winding field.
TriangleMesh make_scene_shape(SceneShape shape);

SyntheticScene generate_scene(const SceneConfig& cfg);

/// Writes dir/cameras.json, dir/gt.ply, dir/images/view_NNN.png,
/// dir/masks/view_NNN.png and, when present, dir/backdrop.ply. Existing
/// files are overwritten.
void save_scene(const std::filesystem::path& dir, const SyntheticScene& scene);

/// A scene directory read back: images come from 8-bit PNGs, so colors are
/// quantized relative to what generate_scene returned. Masks, the GT mesh,
/// and the backdrop are optional on disk.
struct LoadedScene {
  std::vector<Camera> cameras;
  std::vector<Image> images;
  std::vector<Image> masks;  // empty when the directory has none
  std::optional<TriangleMesh> gt_mesh;
  std::optional<TriangleMesh> backdrop;
};

LoadedScene load_scene(const std::filesystem::path& dir);

}  // namespace mvr
