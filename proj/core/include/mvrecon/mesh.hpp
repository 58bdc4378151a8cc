#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mvrecon/types.hpp"

namespace mvr {

/// Indexed triangle mesh. Faces wind counter-clockwise seen from outside.
/// Treated as an immutable value after construction: every operation that
/// changes geometry or topology returns a new mesh.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> colors;  // empty, or one RGB in [0,1] per vertex

  bool has_colors() const { return !colors.empty(); }
  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  Aabb bounds() const;

  /// Throws if any face index is out of range, a face repeats a vertex, or
  /// the color array length mismatches.
  void validate() const;
};

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

/// Undirected-edge incidence: up to two faces per manifold edge, more are
/// recorded in `extra` (non-manifold input).
struct EdgeFaces {
  int f0 = -1;
  int f1 = -1;
  int count() const { return f0 < 0 ? 0 : (f1 < 0 ? 1 : 2); }
};

struct Adjacency {
  std::vector<std::vector<int>> vertex_faces;  // sorted face ids per vertex
  std::vector<std::vector<int>> vertex_ring;   // sorted 1-ring vertex ids
  std::unordered_map<std::uint64_t, EdgeFaces> edge_faces;
  bool non_manifold_edges = false;  // some edge has >2 incident faces

  static Adjacency build(const TriangleMesh& mesh);

  /// Vertices at graph distance <= k from v, including v itself. Sorted.
  std::vector<int> k_ring(int v, int k) const;
};

Vec3 face_normal(const TriangleMesh& mesh, int face);         // unit, zero if degenerate
Vec3 face_normal_scaled(const TriangleMesh& mesh, int face);  // cross product / 2 (area-weighted)
double face_area(const TriangleMesh& mesh, int face);

/// Geodesic icosphere: subdivided icosahedron projected to radius.
TriangleMesh make_icosphere(double radius, int subdivisions);

/// Axis-aligned box; each of the six faces is an n x n grid of quads split
/// into triangles, so per-vertex colors can carry texture.
TriangleMesh make_cuboid(const Vec3& center, const Vec3& half_extents, int subdivisions_per_face);

/// Parametric torus around the z axis.
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments);

struct NormalOptions {
  int ring_order = 2;          // faces within the ring_order-neighborhood
  bool area_weighted = false;  // off per default: plain mean of face normals
};

/// Per-vertex normals averaged over the faces incident to the (ring_order-1)
/// ring of the vertex, i.e. all faces lying within its ring_order-th order
/// neighborhood. Degenerate averages fall back to the 1-ring and then to any
/// incident face normal; fallback vertex ids are reported via `flagged`.
/// Throws "orphan vertex" if a vertex has no incident face.
std::vector<Vec3> vertex_normals(const TriangleMesh& mesh, const Adjacency& adj,
                                 const NormalOptions& opts = {},
                                 std::vector<int>* flagged = nullptr);

/// Uniform graph Laplacian: mean of 1-ring neighbor positions minus the
/// vertex. Throws on orphan vertices.
std::vector<Vec3> uniform_laplacian(const TriangleMesh& mesh, const Adjacency& adj);

struct MeshStats {
  int vertex_count = 0;
  int edge_count = 0;
  int face_count = 0;
  int euler_characteristic = 0;
  int connected_components = 0;
  std::optional<int> genus;  // set only when the mesh is closed
  double min_edge_length = 0.0;
  double max_edge_length = 0.0;
  double mean_edge_length = 0.0;
  bool watertight = false;  // every edge has exactly two faces, opposite orientation
};

MeshStats mesh_stats(const TriangleMesh& mesh);

/// One round of Loop subdivision (closed meshes). Colors, if present, are
/// subdivided with the same masks.
TriangleMesh loop_subdivide(const TriangleMesh& mesh);

}  // namespace mvr
