#pragma once

#include <vector>

#include "mvrecon/bvh.hpp"
#include "mvrecon/mesh.hpp"

namespace mvr {

/// Per-vertex ray samples for one optimization stage. Sample positions are
/// constants of the iteration: they come from the current (already stale)
/// mesh, so no gradient ever flows through them — only through the densities
/// the network predicts at them.
struct RaySampleSet {
  enum class Stage { radial, normal };
  Stage stage = Stage::radial;
  int samples_per_vertex = 0;      // K
  std::vector<Vec3> origins;       // the vertex each ray belongs to
  std::vector<Vec3> directions;    // unit ray direction per vertex
  std::vector<Vec3> points;        // vertex-major: K consecutive samples

  int vertex_count() const { return static_cast<int>(origins.size()); }
  const Vec3* samples_of(int vertex) const {
    return points.data() + static_cast<std::size_t>(vertex) * samples_per_vertex;
  }
};

/// Radial-stage samples: for a template vertex at radius rho from `origin`,
/// K points at radii rho*j/K, j = 1..K, along origin->vertex. The update can
/// therefore only slide each vertex radially.
RaySampleSet radial_samples(const std::vector<Vec3>& vertices, const Vec3& origin, int K);

/// Safe travel distances along +/- normal before crossing the surface again.
struct RangeFactors {
  double t_in = 0.0;
  double t_out = 0.0;
  double cap = 0.0;
};

/// First surface crossing along each normal direction, shortened by the
/// safety factor beta and clipped to `cap`; crossings closer than eps_self
/// are the vertex's own surface patch and are ignored. No crossing -> cap.
RangeFactors range_factors(const TriangleBvh& bvh, const Vec3& vertex, const Vec3& normal,
                           double cap, double eps_self, double beta = 0.9);

/// Batch version; eps_self defaults to 1e-4 x the mesh bounding-box diagonal.
std::vector<RangeFactors> range_factors_all(const TriangleMesh& mesh, const TriangleBvh& bvh,
                                            const std::vector<Vec3>& normals, double cap);

/// Normal-ray samples with the shared-endpoint convention: k_in points cover
/// [V - t_in*N, V] inclusive of both ends, k_out points cover (V, V + t_out*N]
/// starting one spacing step beyond V — so the vertex itself appears once and
/// the total per vertex is exactly k_in + k_out. A zero-length segment hands
/// its samples to the other side.
RaySampleSet normal_ray_samples(const std::vector<Vec3>& vertices,
                                const std::vector<Vec3>& normals,
                                const std::vector<RangeFactors>& factors, int k_in, int k_out);

/// Density-weighted sample average (softmax over densities, max-subtracted)
/// and its K x 3 Jacobian d(position)/d(density_k) = w_k (X_k - position).
struct VertexUpdate {
  Vec3 position = Vec3::Zero();
  MatX jacobian;  // K x 3
};
VertexUpdate vertex_update(const MatX& samples, const VecX& densities);

}  // namespace mvr
