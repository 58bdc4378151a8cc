#include "mvrecon/sampling.hpp"

#include <cmath>

namespace mvr {

RaySampleSet radial_samples(const std::vector<Vec3>& vertices, const Vec3& origin, int K) {
  if (K < 1) throw config_error("radial sampling needs K >= 1");
  RaySampleSet set;
  set.stage = RaySampleSet::Stage::radial;
  set.samples_per_vertex = K;
  set.origins = vertices;
  set.directions.reserve(vertices.size());
  set.points.reserve(vertices.size() * K);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3 offset = vertices[i] - origin;
    const double rho = offset.norm();
    if (rho < 1e-12)
      throw numeric_error("template vertex " + std::to_string(i) + " coincides with the origin");
    const Vec3 dir = offset / rho;
    set.directions.push_back(dir);
    for (int j = 1; j <= K; ++j)
      set.points.push_back(origin + (rho * j / K) * dir);
  }
  return set;
}

RangeFactors range_factors(const TriangleBvh& bvh, const Vec3& vertex, const Vec3& normal,
                           double cap, double eps_self, double beta) {
  if (cap <= 0.0) throw config_error("range cap must be positive");
  RangeFactors out;
  out.cap = cap;
  const auto limit = [&](const Vec3& dir) {
    Ray ray;
    ray.origin = vertex;
    ray.dir = dir;  // unit, so t is a distance
    const auto hit = bvh.closest_hit(ray, eps_self);
    if (!hit) return cap;
    return std::min(cap, beta * hit->t);
  };
  out.t_out = limit(normal);
  out.t_in = limit(-normal);
  return out;
}

std::vector<RangeFactors> range_factors_all(const TriangleMesh& mesh, const TriangleBvh& bvh,
                                            const std::vector<Vec3>& normals, double cap) {
  if (normals.size() != mesh.vertices.size())
    throw numeric_error("one normal per vertex required");
  const double eps_self = 1e-4 * mesh.bounds().diagonal();
  std::vector<RangeFactors> out(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    out[v] = range_factors(bvh, mesh.vertices[v], normals[v], cap, eps_self);
  return out;
}

RaySampleSet normal_ray_samples(const std::vector<Vec3>& vertices,
                                const std::vector<Vec3>& normals,
                                const std::vector<RangeFactors>& factors, int k_in, int k_out) {
  if (vertices.size() != normals.size() || vertices.size() != factors.size())
    throw numeric_error("vertices, normals, and range factors must align");
  if (k_in < 0 || k_out < 0 || k_in + k_out < 1)
    throw config_error("normal-ray sampling needs a positive total sample count");

  const int K = k_in + k_out;
  RaySampleSet set;
  set.stage = RaySampleSet::Stage::normal;
  set.samples_per_vertex = K;
  set.origins = vertices;
  set.directions = normals;
  set.points.reserve(vertices.size() * K);
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3& v = vertices[i];
    const Vec3& n = normals[i];
    // a collapsed segment donates its budget to the other side
    int inward = k_in, outward = k_out;
    if (factors[i].t_in <= 0.0) {
      outward += inward;
      inward = 0;
    }
    if (factors[i].t_out <= 0.0 && outward > 0) {
      inward += outward;
      outward = 0;
      if (factors[i].t_in <= 0.0) inward = 0;  // both collapsed: sample V alone
    }
    if (inward == 0 && outward == 0) {
      for (int j = 0; j < K; ++j) set.points.push_back(v);
      continue;
    }
    for (int j = 0; j < inward; ++j) {
      // inward==1 puts the sole sample at the vertex itself
      const double frac = inward > 1 ? static_cast<double>(j) / (inward - 1) : 1.0;
      set.points.push_back(v - (1.0 - frac) * factors[i].t_in * n);
    }
    for (int j = 1; j <= outward; ++j)
      set.points.push_back(v + (factors[i].t_out * j / outward) * n);
  }
  return set;
}

VertexUpdate vertex_update(const MatX& samples, const VecX& densities) {
  const auto K = samples.rows();
  if (K < 1 || samples.cols() != 3) throw numeric_error("vertex update needs K x 3 samples");
  if (densities.size() != K) throw numeric_error("one density per sample required");
  if (!densities.allFinite()) throw numeric_error("non-finite density in vertex update");

  const double m = densities.maxCoeff();
  VecX w = (densities.array() - m).exp();
  w /= w.sum();

  VertexUpdate out;
  out.position = (samples.array().colwise() * w.array()).colwise().sum().transpose();
  out.jacobian.resize(K, 3);
  for (Eigen::Index k = 0; k < K; ++k)
    out.jacobian.row(k) = w[k] * (samples.row(k) - out.position.transpose());
  return out;
}

}  // namespace mvr
