#include "mvrecon/loss.hpp"

#include <cmath>

namespace mvr {

void LossConfig::validate() const {
  if (lambda_laplacian < 0.0) throw config_error("laplacian weight must be >= 0");
  if (pyramid_levels < 0) throw config_error("pyramid level count must be >= 0");
  if (pyramid_weight < 0.0 || image_weight < 0.0) throw config_error("loss weights must be >= 0");
}

double l1_image_loss(const Image& rendered, const Image& captured, Image* d_rendered,
                     const Image* mask) {
  if (!rendered.same_shape(captured)) throw numeric_error("image loss on mismatched shapes");
  if (mask && (mask->width != rendered.width || mask->height != rendered.height ||
               mask->channels != 1))
    throw numeric_error("loss mask must be one-channel and match the image size");
  if (d_rendered) *d_rendered = Image(rendered.width, rendered.height, rendered.channels, 0.0);

  // count kept samples first so the cotangents can use the final normalizer
  std::size_t kept = 0;
  if (mask) {
    for (int y = 0; y < rendered.height; ++y)
      for (int x = 0; x < rendered.width; ++x)
        if (mask->at(x, y, 0) != 0.0) kept += rendered.channels;
  } else {
    kept = rendered.data.size();
  }
  if (kept == 0) return 0.0;

  double sum = 0.0;
  for (int y = 0; y < rendered.height; ++y) {
    for (int x = 0; x < rendered.width; ++x) {
      if (mask && mask->at(x, y, 0) == 0.0) continue;
      for (int c = 0; c < rendered.channels; ++c) {
        const double diff = rendered.at(x, y, c) - captured.at(x, y, c);
        sum += std::abs(diff);
        if (d_rendered && diff != 0.0)
          d_rendered->at(x, y, c) = (diff > 0.0 ? 1.0 : -1.0) / static_cast<double>(kept);
      }
    }
  }
  return sum / static_cast<double>(kept);
}

namespace {

// adjoint of downsample2: spread each coarse cotangent equally over its block
Image downsample2_adjoint(const Image& d_coarse, int fine_w, int fine_h) {
  Image d_fine(fine_w, fine_h, d_coarse.channels, 0.0);
  for (int y = 0; y < d_coarse.height; ++y) {
    for (int x = 0; x < d_coarse.width; ++x) {
      const int x1 = std::min(2 * x + 1, fine_w - 1);
      const int y1 = std::min(2 * y + 1, fine_h - 1);
      const int count = (x1 - 2 * x + 1) * (y1 - 2 * y + 1);
      for (int c = 0; c < d_coarse.channels; ++c) {
        const double share = d_coarse.at(x, y, c) / count;
        for (int yy = 2 * y; yy <= y1; ++yy)
          for (int xx = 2 * x; xx <= x1; ++xx) d_fine.at(xx, yy, c) += share;
      }
    }
  }
  return d_fine;
}

}  // namespace

double pyramid_l1(const Image& rendered, const Image& captured, int levels, Image* d_rendered) {
  if (!rendered.same_shape(captured)) throw numeric_error("pyramid loss on mismatched shapes");
  if (d_rendered) *d_rendered = Image(rendered.width, rendered.height, rendered.channels, 0.0);
  if (levels <= 0) return 0.0;

  std::vector<Image> r_pyr{rendered}, c_pyr{captured};
  for (int l = 0; l < levels; ++l) {
    r_pyr.push_back(downsample2(r_pyr.back()));
    c_pyr.push_back(downsample2(c_pyr.back()));
  }

  double total = 0.0;
  Image carry;  // cotangent at the current level, walked back up to level 0
  for (int l = levels; l >= 1; --l) {
    Image d_level;
    total += l1_image_loss(r_pyr[l], c_pyr[l], d_rendered ? &d_level : nullptr);
    if (!d_rendered) continue;
    if (carry.data.empty()) {
      carry = d_level;
    } else {
      for (std::size_t i = 0; i < carry.data.size(); ++i) carry.data[i] += d_level.data[i];
    }
    carry = downsample2_adjoint(carry, r_pyr[l - 1].width, r_pyr[l - 1].height);
  }
  if (d_rendered && !carry.data.empty()) *d_rendered = carry;
  return total;
}

double laplacian_loss(const TriangleMesh& mesh, const Adjacency& adjacency, MatX* d_positions) {
  const int n = mesh.vertex_count();
  if (n == 0) throw numeric_error("laplacian loss of an empty mesh");
  const std::vector<Vec3> lap = uniform_laplacian(mesh, adjacency);
  if (d_positions) *d_positions = MatX::Zero(n, 3);

  double sum = 0.0;
  for (int v = 0; v < n; ++v) {
    const double norm = lap[v].norm();
    sum += norm;
    if (!d_positions || norm == 0.0) continue;
    // d||L_v|| = u_v . dL_v with u_v the unit Laplacian; L_v depends on v and
    // its ring: dL_v/dv = -I, dL_v/du = I/deg(v) for ring members u
    const Vec3 u = lap[v] / (norm * n);
    d_positions->row(v) -= u.transpose();
    const auto& ring = adjacency.vertex_ring[v];
    const double inv_deg = 1.0 / static_cast<double>(ring.size());
    for (const int nb : ring) d_positions->row(nb) += inv_deg * u.transpose();
  }
  return sum / n;
}

double total_loss(const LossConfig& config, const LossParts& parts) {
  config.validate();
  return config.image_weight * parts.images + config.pyramid_weight * parts.pyramid +
         config.lambda_laplacian * parts.laplacian;
}

}  // namespace mvr
