#pragma once

#include "mvrecon/image.hpp"
#include "mvrecon/mesh.hpp"

namespace mvr {

struct LossConfig {
  /// Weight of the mesh smoothness term.
  double lambda_laplacian = 0.0;
  /// Depth of the multi-scale image term; 0 disables it. This term stands in
  /// for a perceptual loss without needing a pretrained feature network.
  int pyramid_levels = 3;
  double pyramid_weight = 0.5;
  double image_weight = 1.0;

  void validate() const;
};

/// Mean absolute per-channel difference. The cotangent image (when asked
/// for) holds dL/d(rendered): sign(rendered - captured) / count, zero at
/// exact ties. A one-channel mask restricts the mean to pixels where the
/// mask is nonzero; fully masked-out pairs contribute zero loss.
double l1_image_loss(const Image& rendered, const Image& captured, Image* d_rendered = nullptr,
                     const Image* mask = nullptr);

/// Sum of mean-absolute differences over 2x box-downsampled copies, `levels`
/// deep (the original resolution is not included; level 0 returns 0).
double pyramid_l1(const Image& rendered, const Image& captured, int levels,
                  Image* d_rendered = nullptr);

/// Mean Euclidean norm of the uniform Laplacian over all vertices. The
/// cotangents (|V| x 3) flow to every vertex position, including across
/// rings. Norm subgradient at a Laplacian-flat vertex is zero.
double laplacian_loss(const TriangleMesh& mesh, const Adjacency& adjacency,
                      MatX* d_positions = nullptr);

struct LossParts {
  double images = 0.0;
  double pyramid = 0.0;
  double laplacian = 0.0;
};

/// image_weight * images + pyramid_weight * pyramid + lambda * laplacian.
double total_loss(const LossConfig& config, const LossParts& parts);

}  // namespace mvr
