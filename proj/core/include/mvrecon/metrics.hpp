#pragma once

#include <string>
#include <vector>

#include "mvrecon/image.hpp"
#include "mvrecon/mesh.hpp"
#include "mvrecon/types.hpp"

namespace mvr {

/// Surface samples with the normal of the face each point came from.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  int size() const { return static_cast<int>(points.size()); }
};

/// Area-weighted uniform surface sampling, deterministic under the seed and
/// independent of thread count. n = 0 gives an empty cloud.
PointCloud sample_surface_points(const TriangleMesh& mesh, int n, std::uint64_t seed);

/// Symmetric Chamfer distance between point sets: the average over both
/// directions of mean nearest-neighbor distance (order 1) or squared
/// distance (order 2). Empty clouds are a config error.
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b, int order);

/// Symmetric mean of |cos| between each point's normal and its nearest
/// neighbor's normal in the other cloud; 1 for identical clouds, unaffected
/// by flipping any normal.
double normal_consistency(const PointCloud& a, const PointCloud& b);

/// Harmonic mean of precision (fraction of `a` within tau of `b`) and recall
/// (the converse), scaled to [0, 100]. Zero when nothing is within tau.
double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double tau);

struct ImageMetrics {
  double mse = 0.0;
  double psnr = 0.0;  // dB, capped at 99 for identical images
  double ssim = 0.0;
};

/// MSE/PSNR over all samples plus mean SSIM (11x11 Gaussian window,
/// sigma 1.5, K1=0.01, K2=0.03, dynamic range 1). Images smaller than the
/// window fall back to one uniform window across the whole image. Shapes
/// must match; SSIM and MSE are symmetric in the arguments.
ImageMetrics image_metrics(const Image& reference, const Image& rendered);

/// Geometry scores between two meshes plus whatever per-view image scores
/// the caller appends. tau records the absolute F-score threshold used.
struct MetricsReport {
  double chamfer_l1 = 0.0;
  double chamfer_l2 = 0.0;
  double normal_cons = 0.0;
  double fscore = 0.0;
  double tau = 0.0;
  int point_samples = 0;
  std::vector<ImageMetrics> per_view;

  double mean_mse() const;
  double mean_psnr() const;
  double mean_ssim() const;

  /// Flat key=value lines, one metric per line.
  std::string to_text() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

/// Samples n_points from each mesh and fills the geometry metrics; tau for
/// the F-score is tau_fraction of the ground-truth bounding-box diagonal.
MetricsReport mesh_metrics(const TriangleMesh& ground_truth, const TriangleMesh& predicted,
                           int n_points = 10000, double tau_fraction = 0.01,
                           std::uint64_t seed = 0);

}  // namespace mvr
