#include "mvrecon/winding.hpp"

#include <cmath>
#include <numbers>

#include "mvrecon/parallel.hpp"

namespace mvr {

double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = a.norm();
  const double lb = b.norm();
  const double lc = c.norm();
  const double numer = a.dot(b.cross(c));
  const double denom =
      la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
  // atan2(0, 0) == 0 covers query points that coincide with a corner
  return 2.0 * std::atan2(numer, denom);
}

double winding_number(const TriangleMesh& mesh, const Vec3& point) {
  double sum = 0.0;
  for (const Face& f : mesh.faces) {
    sum += triangle_solid_angle(mesh.vertices[f[0]] - point, mesh.vertices[f[1]] - point,
                                mesh.vertices[f[2]] - point);
  }
  return sum / (4.0 * std::numbers::pi);
}

std::vector<double> winding_numbers(const TriangleMesh& mesh, const std::vector<Vec3>& points) {
  std::vector<double> result(points.size());
  parallel_chunks(static_cast<std::int64_t>(points.size()), 64,
                  [&](std::int64_t begin, std::int64_t end, std::int64_t) {
                    for (std::int64_t i = begin; i < end; ++i)
                      result[i] = winding_number(mesh, points[i]);
                  });
  return result;
}

}  // namespace mvr
