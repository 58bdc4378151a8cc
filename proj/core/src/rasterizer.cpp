#include "mvrecon/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "mvrecon/parallel.hpp"

namespace mvr {

double RasterSettings::effective_sigma(int width, int height) const {
  if (sigma > 0.0) return sigma;
  const double diag2 = static_cast<double>(width) * width + static_cast<double>(height) * height;
  return 1e-4 * diag2;
}

void RasterSettings::validate() const {
  if (gamma <= 0.0) throw config_error("rasterizer gamma must be positive");
  if (cutoff <= 0.0 || cutoff >= 0.5)
    throw config_error("rasterizer coverage cutoff must lie in (0, 0.5)");
  if (max_faces_per_pixel < 1) throw config_error("rasterizer needs at least one face per pixel");
}

namespace {

constexpr int kTile = 16;

inline double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct ScreenTriangle {
  Vec2 a, b, c;
  const Vec2& operator[](int i) const { return i == 0 ? a : (i == 1 ? b : c); }
};

// Squared distance from p to the triangle boundary: the closest of the three
// edges with its clamped segment parameter. Ties keep the first edge so the
// backward pass differentiates the same segment the forward pass measured.
struct BoundaryHit {
  double d2 = 0.0;
  int edge = 0;
  double h = 0.0;
};

BoundaryHit boundary_distance2(const ScreenTriangle& tri, const Vec2& p) {
  BoundaryHit best{std::numeric_limits<double>::infinity(), 0, 0.0};
  for (int e = 0; e < 3; ++e) {
    const Vec2& a = tri[e];
    const Vec2& b = tri[(e + 1) % 3];
    const Vec2 seg = b - a;
    const double len2 = seg.squaredNorm();
    double h = 0.0;
    if (len2 > 0.0) h = std::clamp((p - a).dot(seg) / len2, 0.0, 1.0);
    const double d2 = (p - (a + h * seg)).squaredNorm();
    if (d2 < best.d2) best = {d2, e, h};
  }
  return best;
}

// Fills the geometric part of a PixelFace (everything except coverage and
// normalized depth). Returns the affine area-ratio barycentrics when the
// pixel is interior; otherwise projects onto the closest boundary edge.
void classify_pixel(const ScreenTriangle& tri, const Vec2& p, PixelFace& out) {
  const double den = cross2(tri.b - tri.a, tri.c - tri.a);
  bool interior = false;
  Vec3 bary = Vec3::Zero();
  if (den != 0.0) {
    const double lb = cross2(p - tri.a, tri.c - tri.a) / den;
    const double lc = cross2(tri.b - tri.a, p - tri.a) / den;
    const double la = 1.0 - lb - lc;
    if (la >= 0.0 && lb >= 0.0 && lc >= 0.0) {
      interior = true;
      bary = {la, lb, lc};
    }
  }
  const BoundaryHit hit = boundary_distance2(tri, p);
  out.d2 = hit.d2;
  out.edge = hit.edge;
  out.h = hit.h;
  out.sign = interior ? 1.0 : -1.0;
  out.interior = interior;
  if (!interior) {
    bary = Vec3::Zero();
    bary[hit.edge] = 1.0 - hit.h;
    bary[(hit.edge + 1) % 3] = hit.h;
  }
  out.bary = bary;
}

struct Binning {
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int>> faces;  // face ids per tile, ascending
};

Binning bin_faces(const RasterCache& cache, const std::vector<Face>& faces, double inflate) {
  Binning bins;
  bins.tiles_x = (cache.width + kTile - 1) / kTile;
  bins.tiles_y = (cache.height + kTile - 1) / kTile;
  bins.faces.resize(static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (!cache.face_valid[f]) continue;
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (int k = 0; k < 3; ++k) {
      const Vec2 s = cache.screen.row(faces[f][k]).transpose();
      lo = lo.cwiseMin(s);
      hi = hi.cwiseMax(s);
    }
    lo.array() -= inflate;
    hi.array() += inflate;
    const int tx0 = std::clamp(static_cast<int>(std::floor(lo.x() / kTile)), 0, bins.tiles_x - 1);
    const int ty0 = std::clamp(static_cast<int>(std::floor(lo.y() / kTile)), 0, bins.tiles_y - 1);
    const int tx1 = std::clamp(static_cast<int>(std::floor(hi.x() / kTile)), 0, bins.tiles_x - 1);
    const int ty1 = std::clamp(static_cast<int>(std::floor(hi.y() / kTile)), 0, bins.tiles_y - 1);
    if (hi.x() < 0.0 || hi.y() < 0.0 || lo.x() > cache.width || lo.y() > cache.height) continue;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        bins.faces[static_cast<std::size_t>(ty) * bins.tiles_x + tx].push_back(static_cast<int>(f));
  }
  return bins;
}

// Projects every vertex and records which faces sit fully in front of the
// near plane; also the detached depth range used to normalize z.
void prepare_cache(const TriangleMesh& mesh, const Camera& camera, RasterCache& cache) {
  const int nv = mesh.vertex_count();
  cache.screen.resize(nv, 2);
  cache.cam_z.resize(nv);
  std::vector<std::uint8_t> vertex_front(nv, 0);
  double z_near = std::numeric_limits<double>::max();
  double z_far = std::numeric_limits<double>::lowest();
  for (int v = 0; v < nv; ++v) {
    const Vec3 cam = camera.to_camera(mesh.vertices[v]);
    cache.cam_z[v] = cam.z();
    bool behind = false;
    const Vec2 pix = camera.project(mesh.vertices[v], &behind);
    cache.screen.row(v) = pix.transpose();
    vertex_front[v] = behind ? 0 : 1;
    if (!behind) {
      z_near = std::min(z_near, cam.z());
      z_far = std::max(z_far, cam.z());
    }
  }
  cache.face_valid.assign(mesh.faces.size(), 0);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    cache.face_valid[f] =
        vertex_front[face[0]] && vertex_front[face[1]] && vertex_front[face[2]];
  }
  if (z_far < z_near) {  // nothing in front
    z_near = kNearPlane;
    z_far = kNearPlane;
  }
  cache.z_near_mesh = z_near;
  cache.z_far_mesh = z_far;
}

inline Vec3 vertex_color(const TriangleMesh& mesh, int v) {
  return mesh.has_colors() ? mesh.colors[v] : Vec3::Ones();
}

inline Vec3 face_color_at(const TriangleMesh& mesh, const Face& face, const Vec3& bary) {
  return bary[0] * vertex_color(mesh, face[0]) + bary[1] * vertex_color(mesh, face[1]) +
         bary[2] * vertex_color(mesh, face[2]);
}

}  // namespace

Image rasterize_soft(const TriangleMesh& mesh, const Camera& camera,
                     const RasterSettings& settings, RasterCache* cache_out) {
  settings.validate();
  camera.validate();
  mesh.validate();
  RasterCache local;
  RasterCache& cache = cache_out ? *cache_out : local;
  cache.width = camera.width;
  cache.height = camera.height;
  cache.sigma = settings.effective_sigma(camera.width, camera.height);
  prepare_cache(mesh, camera, cache);
  if (settings.z_range_max > settings.z_range_min) {
    cache.z_near_mesh = settings.z_range_min;
    cache.z_far_mesh = settings.z_range_max;
  }
  cache.pixels.assign(static_cast<std::size_t>(cache.width) * cache.height, {});

  const double influence = std::sqrt(cache.sigma * std::log(1.0 / settings.cutoff));
  const Binning bins = bin_faces(cache, mesh.faces, influence);
  const double depth_span = std::max(cache.z_far_mesh - cache.z_near_mesh, 1e-12);

  Image out(cache.width, cache.height, 3);
  parallel_chunks(cache.height, 8, [&](std::int64_t row_begin, std::int64_t row_end, std::int64_t) {
    std::vector<PixelFace> entries;
    for (int y = static_cast<int>(row_begin); y < static_cast<int>(row_end); ++y) {
      for (int x = 0; x < cache.width; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const auto& tile =
            bins.faces[static_cast<std::size_t>(y / kTile) * bins.tiles_x + x / kTile];
        entries.clear();
        for (const int f : tile) {
          const Face& face = mesh.faces[f];
          const ScreenTriangle tri{cache.screen.row(face[0]).transpose(),
                                   cache.screen.row(face[1]).transpose(),
                                   cache.screen.row(face[2]).transpose()};
          PixelFace entry;
          entry.face = f;
          classify_pixel(tri, p, entry);
          entry.coverage = sigmoid(entry.sign * entry.d2 / cache.sigma);
          if (entry.coverage < settings.cutoff) continue;
          entry.depth = entry.bary[0] * cache.cam_z[face[0]] +
                        entry.bary[1] * cache.cam_z[face[1]] +
                        entry.bary[2] * cache.cam_z[face[2]];
          entry.zbar = (cache.z_far_mesh - entry.depth) / depth_span;
          entries.push_back(entry);
        }
        std::sort(entries.begin(), entries.end(), [](const PixelFace& a, const PixelFace& b) {
          return a.depth != b.depth ? a.depth < b.depth : a.face < b.face;
        });
        if (static_cast<int>(entries.size()) > settings.max_faces_per_pixel)
          entries.resize(settings.max_faces_per_pixel);

        Vec3 pixel = settings.background;
        if (!entries.empty()) {
          double m = std::numeric_limits<double>::lowest();
          for (const PixelFace& e : entries) m = std::max(m, e.zbar);
          double total = 0.0, miss = 1.0;
          Vec3 color_sum = Vec3::Zero();
          for (const PixelFace& e : entries) {
            const double w = e.coverage * std::exp((e.zbar - m) / settings.gamma);
            total += w;
            color_sum += w * face_color_at(mesh, mesh.faces[e.face], e.bary);
            miss *= 1.0 - e.coverage;
          }
          const double alpha = 1.0 - miss;
          pixel = alpha * (color_sum / total) + (1.0 - alpha) * settings.background;
        }
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = pixel[c];
        cache.pixels[static_cast<std::size_t>(y) * cache.width + x] = entries;
      }
    }
  });
  return out;
}

RasterGrads rasterize_backward(const TriangleMesh& mesh, const Camera& camera,
                               const RasterSettings& settings, const RasterCache& cache,
                               const Image& dpixels) {
  if (dpixels.width != cache.width || dpixels.height != cache.height || dpixels.channels != 3)
    throw numeric_error("pixel cotangent shape does not match the rendered image");
  if (cache.screen.rows() != mesh.vertex_count())
    throw numeric_error("raster cache was built for a different mesh");

  RasterGrads grads;
  grads.d_vertices = MatX::Zero(mesh.vertex_count(), 3);
  grads.d_colors = MatX::Zero(mesh.vertex_count(), 3);
  MatX d_screen = MatX::Zero(mesh.vertex_count(), 2);
  VecX d_cam_z = VecX::Zero(mesh.vertex_count());

  const double sigma = cache.sigma;
  const double depth_span = std::max(cache.z_far_mesh - cache.z_near_mesh, 1e-12);

  for (int y = 0; y < cache.height; ++y) {
    for (int x = 0; x < cache.width; ++x) {
      const auto& entries = cache.pixels[static_cast<std::size_t>(y) * cache.width + x];
      if (entries.empty()) continue;
      Vec3 g;
      for (int c = 0; c < 3; ++c) g[c] = dpixels.at(x, y, c);
      if (g.isZero(0.0)) continue;
      const Vec2 p(x + 0.5, y + 0.5);

      // recompute the aggregation exactly as the forward pass did
      const int n = static_cast<int>(entries.size());
      double m = std::numeric_limits<double>::lowest();
      for (const PixelFace& e : entries) m = std::max(m, e.zbar);
      std::vector<double> w(n);
      std::vector<Vec3> col(n);
      double total = 0.0;
      for (int j = 0; j < n; ++j) {
        w[j] = entries[j].coverage * std::exp((entries[j].zbar - m) / settings.gamma);
        col[j] = face_color_at(mesh, mesh.faces[entries[j].face], entries[j].bary);
        total += w[j];
      }
      Vec3 color_mix = Vec3::Zero();
      for (int j = 0; j < n; ++j) color_mix += (w[j] / total) * col[j];

      // alpha = 1 - prod(1 - D): prefix/suffix products give d(alpha)/dD_j
      std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
      for (int j = 0; j < n; ++j) prefix[j + 1] = prefix[j] * (1.0 - entries[j].coverage);
      for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] * (1.0 - entries[j].coverage);
      const double alpha = 1.0 - prefix[n];
      const double d_alpha = g.dot(color_mix - settings.background);

      for (int j = 0; j < n; ++j) {
        const PixelFace& e = entries[j];
        const Face& face = mesh.faces[e.face];
        const ScreenTriangle tri{cache.screen.row(face[0]).transpose(),
                                 cache.screen.row(face[1]).transpose(),
                                 cache.screen.row(face[2]).transpose()};

        const double d_w = alpha * g.dot(col[j] - color_mix) / total;
        const Vec3 d_col = alpha * (w[j] / total) * g;
        const double d_cov =
            d_w * std::exp((e.zbar - m) / settings.gamma) + d_alpha * prefix[j] * suffix[j + 1];
        const double d_zbar = d_w * w[j] / settings.gamma;
        const double d_depth = -d_zbar / depth_span;
        const double d_d2 = d_cov * e.coverage * (1.0 - e.coverage) * e.sign / sigma;

        // boundary distance: envelope over the recorded closest edge
        {
          const int ea = e.edge, eb = (e.edge + 1) % 3;
          const Vec2 seg = tri[eb] - tri[ea];
          const Vec2 diff = p - (tri[ea] + e.h * seg);
          d_screen.row(face[ea]) += d_d2 * (-2.0 * (1.0 - e.h)) * diff.transpose();
          d_screen.row(face[eb]) += d_d2 * (-2.0 * e.h) * diff.transpose();
        }

        // interpolation: color (3 channels) and depth share the bary weights
        Eigen::Vector4d d_values;  // dL/d(c_r, c_g, c_b, z) at the pixel
        d_values << d_col, d_depth;
        if (e.interior) {
          for (int k = 0; k < 3; ++k) {
            grads.d_colors.row(face[k]) += e.bary[k] * d_col.transpose();
            d_cam_z[face[k]] += e.bary[k] * d_depth;
          }
          // dF/dV_k = -bary_k * grad_p(F) for affine interpolation
          const double den = cross2(tri.b - tri.a, tri.c - tri.a);
          const Vec2 grad_lb = -perp(tri.c - tri.a) / den;
          const Vec2 grad_lc = perp(tri.b - tri.a) / den;
          const Vec2 grad_la = -grad_lb - grad_lc;
          for (int ch = 0; ch < 4; ++ch) {
            const double fa = ch < 3 ? vertex_color(mesh, face[0])[ch] : cache.cam_z[face[0]];
            const double fb = ch < 3 ? vertex_color(mesh, face[1])[ch] : cache.cam_z[face[1]];
            const double fc = ch < 3 ? vertex_color(mesh, face[2])[ch] : cache.cam_z[face[2]];
            const Vec2 grad_p = fa * grad_la + fb * grad_lb + fc * grad_lc;
            for (int k = 0; k < 3; ++k)
              d_screen.row(face[k]) += d_values[ch] * (-e.bary[k]) * grad_p.transpose();
          }
        } else {
          const int va = face[e.edge], vb = face[(e.edge + 1) % 3];
          grads.d_colors.row(va) += (1.0 - e.h) * d_col.transpose();
          grads.d_colors.row(vb) += e.h * d_col.transpose();
          d_cam_z[va] += (1.0 - e.h) * d_depth;
          d_cam_z[vb] += e.h * d_depth;
          if (e.h > 0.0 && e.h < 1.0) {
            const Vec2 a = tri[e.edge], b = tri[(e.edge + 1) % 3];
            const Vec2 seg = b - a;
            const double len2 = seg.squaredNorm();
            double d_h = 0.0;
            for (int ch = 0; ch < 3; ++ch)
              d_h += d_col[ch] * (vertex_color(mesh, vb)[ch] - vertex_color(mesh, va)[ch]);
            d_h += d_depth * (cache.cam_z[vb] - cache.cam_z[va]);
            const Vec2 dh_da = (-seg - (p - a) + 2.0 * e.h * seg) / len2;
            const Vec2 dh_db = ((p - a) - 2.0 * e.h * seg) / len2;
            d_screen.row(va) += d_h * dh_da.transpose();
            d_screen.row(vb) += d_h * dh_db.transpose();
          }
        }
      }
    }
  }

  // pull screen-space and depth cotangents back to world space
  const Vec3 view_axis = camera.rotation.row(2).transpose();
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec2 ds = d_screen.row(v).transpose();
    const double dz = d_cam_z[v];
    if (ds.isZero(0.0) && dz == 0.0) continue;
    const auto jac = camera.project_jacobian(mesh.vertices[v]);
    grads.d_vertices.row(v) += (jac.transpose() * ds + dz * view_axis).transpose();
  }
  return grads;
}

namespace {

Image render_reference(const TriangleMesh& mesh, const Camera& camera, const Vec3& background,
                       bool mask_only) {
  camera.validate();
  mesh.validate();
  RasterCache cache;
  cache.width = camera.width;
  cache.height = camera.height;
  prepare_cache(mesh, camera, cache);
  const Binning bins = bin_faces(cache, mesh.faces, 0.0);

  Image out(cache.width, cache.height, mask_only ? 1 : 3);
  parallel_chunks(cache.height, 8, [&](std::int64_t row_begin, std::int64_t row_end, std::int64_t) {
    for (int y = static_cast<int>(row_begin); y < static_cast<int>(row_end); ++y) {
      for (int x = 0; x < cache.width; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        const auto& tile =
            bins.faces[static_cast<std::size_t>(y / kTile) * bins.tiles_x + x / kTile];
        double best_depth = std::numeric_limits<double>::max();
        int best_face = -1;
        Vec3 best_bary = Vec3::Zero();
        for (const int f : tile) {
          const Face& face = mesh.faces[f];
          const ScreenTriangle tri{cache.screen.row(face[0]).transpose(),
                                   cache.screen.row(face[1]).transpose(),
                                   cache.screen.row(face[2]).transpose()};
          const double den = cross2(tri.b - tri.a, tri.c - tri.a);
          if (den == 0.0) continue;
          const double lb = cross2(p - tri.a, tri.c - tri.a) / den;
          const double lc = cross2(tri.b - tri.a, p - tri.a) / den;
          const double la = 1.0 - lb - lc;
          if (la < 0.0 || lb < 0.0 || lc < 0.0) continue;
          const double depth = la * cache.cam_z[face[0]] + lb * cache.cam_z[face[1]] +
                               lc * cache.cam_z[face[2]];
          if (depth < best_depth || (depth == best_depth && f < best_face)) {
            best_depth = depth;
            best_face = f;
            best_bary = {la, lb, lc};
          }
        }
        if (mask_only) {
          out.at(x, y, 0) = best_face >= 0 ? 1.0 : 0.0;
        } else {
          Vec3 pixel = background;
          if (best_face >= 0) pixel = face_color_at(mesh, mesh.faces[best_face], best_bary);
          for (int c = 0; c < 3; ++c) out.at(x, y, c) = pixel[c];
        }
      }
    }
  });
  return out;
}

}  // namespace

Image render_hard(const TriangleMesh& mesh, const Camera& camera, const Vec3& background) {
  return render_reference(mesh, camera, background, false);
}

Image render_mask(const TriangleMesh& mesh, const Camera& camera) {
  return render_reference(mesh, camera, Vec3::Zero(), true);
}

}  // namespace mvr
