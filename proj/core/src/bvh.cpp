#include "mvrecon/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace mvr {

std::optional<RayHit> intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1,
                                         const Vec3& v2, double t_min, double t_max) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = ray.dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-300) return std::nullopt;  // ray parallel to plane
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t < t_min || t > t_max) return std::nullopt;
  RayHit hit;
  hit.t = t;
  hit.u = u;
  hit.v = v;
  return hit;
}

namespace {

// Slab test; dir components may be zero (the inf arithmetic below is fine as
// long as the origin is not exactly on a slab plane, which the nudge avoids).
bool hit_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max,
             double& enter) {
  double t0 = t_min;
  double t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double near = (box.min[a] - origin[a]) * inv_dir[a];
    double far = (box.max[a] - origin[a]) * inv_dir[a];
    if (inv_dir[a] < 0.0) std::swap(near, far);
    if (std::isnan(near) || std::isnan(far)) continue;  // origin on a degenerate slab
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  enter = t0;
  return true;
}

constexpr int kLeafSize = 4;

}  // namespace

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) {
  const int n = mesh.face_count();
  if (n == 0) return;
  std::vector<Vec3> centroids(n);
  std::vector<Triangle> tris(n);
  for (int f = 0; f < n; ++f) {
    const Vec3& a = mesh.vertices[mesh.faces[f][0]];
    const Vec3& b = mesh.vertices[mesh.faces[f][1]];
    const Vec3& c = mesh.vertices[mesh.faces[f][2]];
    centroids[f] = (a + b + c) / 3.0;
    tris[f] = {a, b - a, c - a, f};
  }
  std::vector<int> prim_ids(n);
  std::iota(prim_ids.begin(), prim_ids.end(), 0);
  nodes_.reserve(2 * n);
  prims_.reserve(n);
  // prims_ fills up in leaf order during the recursive build
  std::vector<Triangle> source = std::move(tris);
  tris_source_ = &source;
  build(prim_ids, 0, n, centroids);
  tris_source_ = nullptr;
}

int TriangleBvh::build(std::vector<int>& prim_ids, int begin, int end,
                       const std::vector<Vec3>& centroids) {
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  for (int i = begin; i < end; ++i) {
    const Triangle& t = (*tris_source_)[prim_ids[i]];
    box.expand(t.v0);
    box.expand(t.v0 + t.e1);
    box.expand(t.v0 + t.e2);
  }
  nodes_[node_id].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[node_id].begin = static_cast<int>(prims_.size());
    nodes_[node_id].count = end - begin;
    for (int i = begin; i < end; ++i) prims_.push_back((*tris_source_)[prim_ids[i]]);
    return node_id;
  }
  // split at the centroid median of the widest axis
  Aabb cbox;
  for (int i = begin; i < end; ++i) cbox.expand(centroids[prim_ids[i]]);
  const Vec3 ext = cbox.extent();
  int axis = 0;
  if (ext[1] > ext[axis]) axis = 1;
  if (ext[2] > ext[axis]) axis = 2;
  const int mid = (begin + end) / 2;
  std::nth_element(prim_ids.begin() + begin, prim_ids.begin() + mid, prim_ids.begin() + end,
                   [&](int a, int b) {
                     if (centroids[a][axis] != centroids[b][axis])
                       return centroids[a][axis] < centroids[b][axis];
                     return a < b;
                   });
  const int left = build(prim_ids, begin, mid, centroids);
  const int right = build(prim_ids, mid, end, centroids);
  nodes_[node_id].left = left;
  nodes_[node_id].right = right;
  return node_id;
}

std::optional<RayHit> TriangleBvh::closest_hit(const Ray& ray, double t_min, double t_max) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = ray.dir.cwiseInverse();
  RayHit best;
  best.t = t_max;
  bool found = false;
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double enter;
    if (!hit_box(node.box, ray.origin, inv_dir, t_min, best.t, enter)) continue;
    if (enter > best.t) continue;
    if (node.count > 0) {
      for (int i = node.begin; i < node.begin + node.count; ++i) {
        const Triangle& tri = prims_[i];
        auto hit = intersect_triangle(ray, tri.v0, tri.v0 + tri.e1, tri.v0 + tri.e2, t_min, best.t);
        if (hit && (!found || hit->t < best.t || (hit->t == best.t && tri.face < best.face))) {
          best = *hit;
          best.face = tri.face;
          found = true;
        }
      }
    } else {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

bool TriangleBvh::any_hit(const Ray& ray, double t_min, double t_max) const {
  if (nodes_.empty()) return false;
  const Vec3 inv_dir = ray.dir.cwiseInverse();
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double enter;
    if (!hit_box(node.box, ray.origin, inv_dir, t_min, t_max, enter)) continue;
    if (node.count > 0) {
      for (int i = node.begin; i < node.begin + node.count; ++i) {
        const Triangle& tri = prims_[i];
        if (intersect_triangle(ray, tri.v0, tri.v0 + tri.e1, tri.v0 + tri.e2, t_min, t_max))
          return true;
      }
    } else {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
  }
  return false;
}

int TriangleBvh::count_hits(const Ray& ray, double t_min, double t_max) const {
  if (nodes_.empty()) return 0;
  const Vec3 inv_dir = ray.dir.cwiseInverse();
  int count = 0;
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    double enter;
    if (!hit_box(node.box, ray.origin, inv_dir, t_min, t_max, enter)) continue;
    if (node.count > 0) {
      for (int i = node.begin; i < node.begin + node.count; ++i) {
        const Triangle& tri = prims_[i];
        auto hit = intersect_triangle(ray, tri.v0, tri.v0 + tri.e1, tri.v0 + tri.e2, t_min, t_max);
        if (hit && hit->t > t_min) ++count;
      }
    } else {
      stack[top++] = node.right;
      stack[top++] = node.left;
    }
  }
  return count;
}

}  // namespace mvr
