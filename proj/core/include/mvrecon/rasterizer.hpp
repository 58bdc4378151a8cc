#pragma once

#include <vector>

#include "mvrecon/camera.hpp"
#include "mvrecon/image.hpp"
#include "mvrecon/mesh.hpp"

namespace mvr {

/// Soft rasterization settings. Coverage of a face at a pixel is
/// sigmoid(sign * d^2 / sigma) where d is the screen-space distance to the
/// projected triangle boundary and sign is +1 inside, -1 outside; per-pixel
/// colors mix a depth-softmax over covering faces (temperature `gamma`) with
/// the background through the union coverage alpha = 1 - prod(1 - D).
struct RasterSettings {
  /// Screen-space softness in squared pixels; <= 0 derives the default
  /// 1e-4 * (image diagonal in px)^2 from the target size.
  double sigma = 0.0;
  double gamma = 1e-4;
  /// Faces whose coverage at a pixel falls below this are dropped there.
  double cutoff = 1e-5;
  /// Closest faces kept per pixel after the cutoff.
  int max_faces_per_pixel = 8;
  Vec3 background = Vec3::Zero();
  /// Camera-space depth range used to normalize the softmax logits. The
  /// range is a constant of the render — no gradient flows through it — so
  /// trainers should pin it (e.g. to the current mesh bounds) rather than
  /// let every call re-derive it from the vertices. Left empty (max <= min)
  /// it is recomputed per call.
  double z_range_min = 0.0, z_range_max = 0.0;

  double effective_sigma(int width, int height) const;
  void validate() const;
};

/// One face contributing to one pixel, with everything the backward pass
/// needs to avoid re-deriving case decisions (inside/edge/corner) that must
/// match the forward pass exactly.
struct PixelFace {
  int face = -1;
  double d2 = 0.0;       // squared screen distance to the projected boundary
  double sign = 1.0;     // +1 pixel inside the projection, -1 outside
  int edge = 0;          // boundary edge attaining d2 (01, 12, 20)
  double h = 0.0;        // clamped parameter along that edge
  bool interior = false; // barycentrics came from area ratios, not the edge
  Vec3 bary = Vec3::Zero();
  double coverage = 0.0; // D in [0, 1]
  double depth = 0.0;    // affine camera-space z at the pixel
  double zbar = 0.0;     // normalized depth, 1 nearest
};

struct RasterCache {
  int width = 0, height = 0;
  double sigma = 0.0;
  double z_near_mesh = 0.0, z_far_mesh = 0.0;  // detached depth range
  MatX screen;                                 // |V| x 2 projected positions
  VecX cam_z;                                  // |V| camera-space depths
  std::vector<std::uint8_t> face_valid;        // all three vertices in front
  std::vector<std::vector<PixelFace>> pixels;  // row-major, width*height
};

/// Differentiable render. Meshes without per-vertex colors draw as white.
Image rasterize_soft(const TriangleMesh& mesh, const Camera& camera,
                     const RasterSettings& settings, RasterCache* cache = nullptr);

struct RasterGrads {
  MatX d_vertices;  // |V| x 3, dL/d(world position)
  MatX d_colors;    // |V| x 3, dL/d(vertex color)
};

/// Pulls dL/dpixels back to vertex positions and colors through the cache
/// recorded by `rasterize_soft` for the same mesh/camera/settings.
RasterGrads rasterize_backward(const TriangleMesh& mesh, const Camera& camera,
                               const RasterSettings& settings, const RasterCache& cache,
                               const Image& dpixels);

/// Hard z-buffer reference: a pixel takes the closest face whose projection
/// contains the pixel centre (ties: smaller depth, then smaller face id).
Image render_hard(const TriangleMesh& mesh, const Camera& camera, const Vec3& background);

/// Same pass but returning the binary coverage mask (1 where any face won).
Image render_mask(const TriangleMesh& mesh, const Camera& camera);

}  // namespace mvr
