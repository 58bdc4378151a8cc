#pragma once

#include <optional>
#include <vector>

#include "mvrecon/mesh.hpp"
#include "mvrecon/types.hpp"

namespace mvr {

struct RayHit {
  double t = 0.0;
  int face = -1;
  double u = 0.0, v = 0.0;  // barycentrics of corners 1 and 2
  Vec3 point(const Ray& ray) const { return ray.origin + t * ray.dir; }
};

/// Median-split bounding volume hierarchy over mesh triangles. The build is
/// deterministic (splits sort by centroid with face-id tie-break) and the
/// queries resolve equal-distance hits toward the smaller face index.
class TriangleBvh {
 public:
  TriangleBvh() = default;
  explicit TriangleBvh(const TriangleMesh& mesh);

  std::optional<RayHit> closest_hit(const Ray& ray, double t_min = 0.0,
                                    double t_max = std::numeric_limits<double>::infinity()) const;
  bool any_hit(const Ray& ray, double t_min, double t_max) const;
  /// Number of triangle crossings with t in (t_min, t_max]. Odd parity from
  /// a generic ray means the origin-side endpoint is inside.
  int count_hits(const Ray& ray, double t_min = 0.0,
                 double t_max = std::numeric_limits<double>::infinity()) const;

  bool empty() const { return nodes_.empty(); }
  const Aabb& root_bounds() const { return nodes_.front().box; }

 private:
  struct Node {
    Aabb box;
    int left = -1;    // internal: child node ids
    int right = -1;
    int begin = 0;    // leaf: range into prims_
    int count = 0;    // 0 for internal nodes
  };
  struct Triangle {
    Vec3 v0, e1, e2;
    int face;
  };

  int build(std::vector<int>& prim_ids, int begin, int end,
            const std::vector<Vec3>& centroids);

  std::vector<Node> nodes_;
  std::vector<Triangle> prims_;  // leaf order
  const std::vector<Triangle>* tris_source_ = nullptr;  // build-time scratch
};

/// Intersects a single triangle; exact barycentric bounds (no welding slack).
std::optional<RayHit> intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1,
                                         const Vec3& v2, double t_min, double t_max);

}  // namespace mvr
