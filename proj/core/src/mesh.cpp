#include "mvrecon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace mvr {

Aabb TriangleMesh::bounds() const {
  Aabb box;
  for (const Vec3& v : vertices) box.expand(v);
  return box;
}

void TriangleMesh::validate() const {
  const int nv = vertex_count();
  for (int f = 0; f < face_count(); ++f) {
    const Face& face = faces[f];
    for (int c = 0; c < 3; ++c) {
      if (face[c] < 0 || face[c] >= nv)
        throw numeric_error("face " + std::to_string(f) + " references vertex " +
                            std::to_string(face[c]) + " outside [0, " + std::to_string(nv) + ")");
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw numeric_error("face " + std::to_string(f) + " repeats a vertex");
  }
  if (!colors.empty() && static_cast<int>(colors.size()) != nv)
    throw numeric_error("color count " + std::to_string(colors.size()) +
                        " does not match vertex count " + std::to_string(nv));
}

Adjacency Adjacency::build(const TriangleMesh& mesh) {
  Adjacency adj;
  const int nv = mesh.vertex_count();
  adj.vertex_faces.resize(nv);
  adj.vertex_ring.resize(nv);
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Face& face = mesh.faces[f];
    for (int c = 0; c < 3; ++c) {
      const int a = face[c];
      const int b = face[(c + 1) % 3];
      adj.vertex_faces[a].push_back(f);
      adj.vertex_ring[a].push_back(b);
      adj.vertex_ring[b].push_back(a);
      EdgeFaces& ef = adj.edge_faces[edge_key(a, b)];
      if (ef.f0 < 0)
        ef.f0 = f;
      else if (ef.f1 < 0)
        ef.f1 = f;
      else
        adj.non_manifold_edges = true;
    }
  }
  for (int v = 0; v < nv; ++v) {
    auto& ring = adj.vertex_ring[v];
    std::sort(ring.begin(), ring.end());
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
  }
  return adj;
}

std::vector<int> Adjacency::k_ring(int v, int k) const {
  std::vector<int> result{v};
  if (k <= 0) return result;
  std::vector<int> frontier{v};
  std::unordered_map<int, bool> seen;
  seen[v] = true;
  for (int step = 0; step < k && !frontier.empty(); ++step) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int w : vertex_ring[u]) {
        if (!seen[w]) {
          seen[w] = true;
          next.push_back(w);
          result.push_back(w);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(result.begin(), result.end());
  return result;
}

Vec3 face_normal_scaled(const TriangleMesh& mesh, int face) {
  const Face& f = mesh.faces[face];
  const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
  const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
  return 0.5 * e1.cross(e2);
}

Vec3 face_normal(const TriangleMesh& mesh, int face) {
  const Vec3 n = face_normal_scaled(mesh, face);
  const double len = n.norm();
  if (len < 1e-300) return Vec3::Zero();
  return n / len;
}

double face_area(const TriangleMesh& mesh, int face) {
  return face_normal_scaled(mesh, face).norm();
}

namespace {

// Midpoint cache for subdivision: one new vertex per undirected edge.
int midpoint(std::unordered_map<std::uint64_t, int>& cache, std::vector<Vec3>& vertices, int a,
             int b) {
  const std::uint64_t key = edge_key(a, b);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const int idx = static_cast<int>(vertices.size());
  vertices.push_back(0.5 * (vertices[a] + vertices[b]));
  cache.emplace(key, idx);
  return idx;
}

}  // namespace

TriangleMesh make_icosphere(double radius, int subdivisions) {
  if (radius <= 0.0) throw config_error("icosphere radius must be positive");
  if (subdivisions < 0) throw config_error("icosphere subdivisions must be >= 0");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  mesh.vertices = {
      {-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi},  {0, 1, phi},
      {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},  {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
  };
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
  };
  for (int iter = 0; iter < subdivisions; ++iter) {
    std::unordered_map<std::uint64_t, int> cache;
    std::vector<Face> next;
    next.reserve(mesh.faces.size() * 4);
    for (const Face& f : mesh.faces) {
      const int ab = midpoint(cache, mesh.vertices, f[0], f[1]);
      const int bc = midpoint(cache, mesh.vertices, f[1], f[2]);
      const int ca = midpoint(cache, mesh.vertices, f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.faces = std::move(next);
  }
  for (Vec3& v : mesh.vertices) v = radius * v.normalized();
  return mesh;
}

TriangleMesh make_cuboid(const Vec3& center, const Vec3& half_extents, int subdivisions_per_face) {
  if ((half_extents.array() <= 0.0).any()) throw config_error("cuboid half extents must be positive");
  const int n = std::max(1, subdivisions_per_face);
  // Each cube face is an n x n quad grid; shared edges are welded through the
  // integer lattice point they occupy on the [0, n]^3 surface lattice.
  struct FaceSpec {
    int fixed_axis;
    int fixed_value;  // 0 or n
    int u_axis, u_dir;
    int v_axis, v_dir;
  };
  // u x v points outward for every face, so quads wind counter-clockwise.
  const FaceSpec specs[6] = {
      {0, 1, 1, +1, 2, +1},  // +x
      {0, 0, 2, +1, 1, +1},  // -x
      {1, 1, 2, +1, 0, +1},  // +y
      {1, 0, 0, +1, 2, +1},  // -y
      {2, 1, 0, +1, 1, +1},  // +z
      {2, 0, 1, +1, 0, +1},  // -z
  };
  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> lattice;  // packed (x,y,z) -> vertex id
  const auto pack = [n](int x, int y, int z) {
    const std::uint64_t m = static_cast<std::uint64_t>(n) + 1;
    return (static_cast<std::uint64_t>(x) * m + y) * m + z;
  };
  const auto vertex_at = [&](std::array<int, 3> l) {
    const std::uint64_t key = pack(l[0], l[1], l[2]);
    auto it = lattice.find(key);
    if (it != lattice.end()) return it->second;
    Vec3 p;
    for (int a = 0; a < 3; ++a)
      p[a] = center[a] - half_extents[a] + 2.0 * half_extents[a] * l[a] / n;
    const int idx = mesh.vertex_count();
    mesh.vertices.push_back(p);
    lattice.emplace(key, idx);
    return idx;
  };
  for (const FaceSpec& s : specs) {
    const auto lattice_point = [&](int i, int j) {
      std::array<int, 3> l{};
      l[s.fixed_axis] = s.fixed_value == 0 ? 0 : n;
      l[s.u_axis] = s.u_dir > 0 ? i : n - i;
      l[s.v_axis] = s.v_dir > 0 ? j : n - j;
      return l;
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int v00 = vertex_at(lattice_point(i, j));
        const int v10 = vertex_at(lattice_point(i + 1, j));
        const int v11 = vertex_at(lattice_point(i + 1, j + 1));
        const int v01 = vertex_at(lattice_point(i, j + 1));
        mesh.faces.push_back({v00, v10, v11});
        mesh.faces.push_back({v00, v11, v01});
      }
    }
  }
  return mesh;
}

TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments) {
  if (major_radius <= 0.0 || minor_radius <= 0.0 || minor_radius >= major_radius)
    throw config_error("torus radii must satisfy 0 < minor < major");
  if (major_segments < 3 || minor_segments < 3)
    throw config_error("torus needs at least 3 segments per ring");
  TriangleMesh mesh;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < major_segments; ++i) {
    const double theta = two_pi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double phi = two_pi * j / minor_segments;
      const double ring = major_radius + minor_radius * std::cos(phi);
      mesh.vertices.emplace_back(ring * std::cos(theta), ring * std::sin(theta),
                                 minor_radius * std::sin(phi));
    }
  }
  const auto id = [&](int i, int j) {
    return (i % major_segments) * minor_segments + (j % minor_segments);
  };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      const int v00 = id(i, j);
      const int v10 = id(i + 1, j);
      const int v11 = id(i + 1, j + 1);
      const int v01 = id(i, j + 1);
      mesh.faces.push_back({v00, v10, v11});
      mesh.faces.push_back({v00, v11, v01});
    }
  }
  return mesh;
}

namespace {

Vec3 mean_face_normal(const TriangleMesh& mesh, const std::vector<int>& face_set,
                      bool area_weighted) {
  Vec3 sum = Vec3::Zero();
  int used = 0;
  for (int f : face_set) {
    const Vec3 n = area_weighted ? face_normal_scaled(mesh, f) : face_normal(mesh, f);
    if (n.squaredNorm() > 0.0) {
      sum += n;
      ++used;
    }
  }
  return used > 0 ? Vec3(sum / used) : Vec3::Zero();
}

}  // namespace

std::vector<Vec3> vertex_normals(const TriangleMesh& mesh, const Adjacency& adj,
                                 const NormalOptions& opts, std::vector<int>* flagged) {
  const int nv = mesh.vertex_count();
  std::vector<Vec3> normals(nv, Vec3::Zero());
  if (flagged) flagged->clear();
  const int order = std::max(1, opts.ring_order);
  for (int v = 0; v < nv; ++v) {
    if (adj.vertex_faces[v].empty())
      throw numeric_error("orphan vertex " + std::to_string(v) + " has no incident face");
    // Face set: every face incident to a vertex within graph distance
    // order-1 of v (order 1 means just the faces touching v itself).
    std::vector<int> face_set;
    if (order == 1) {
      face_set = adj.vertex_faces[v];
    } else {
      for (int u : adj.k_ring(v, order - 1))
        face_set.insert(face_set.end(), adj.vertex_faces[u].begin(), adj.vertex_faces[u].end());
      std::sort(face_set.begin(), face_set.end());
      face_set.erase(std::unique(face_set.begin(), face_set.end()), face_set.end());
    }
    Vec3 n = mean_face_normal(mesh, face_set, opts.area_weighted);
    bool fell_back = false;
    if (n.norm() < 1e-12 && order > 1) {
      n = mean_face_normal(mesh, adj.vertex_faces[v], opts.area_weighted);
      fell_back = true;
    }
    if (n.norm() < 1e-12) {
      // Averages cancelled out; keep any well-defined incident face normal.
      for (int f : adj.vertex_faces[v]) {
        const Vec3 fn = face_normal(mesh, f);
        if (fn.squaredNorm() > 0.0) {
          n = fn;
          break;
        }
      }
      fell_back = true;
    }
    if (fell_back && flagged) flagged->push_back(v);
    const double len = n.norm();
    normals[v] = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  }
  return normals;
}

std::vector<Vec3> uniform_laplacian(const TriangleMesh& mesh, const Adjacency& adj) {
  const int nv = mesh.vertex_count();
  std::vector<Vec3> lap(nv);
  for (int v = 0; v < nv; ++v) {
    const auto& ring = adj.vertex_ring[v];
    if (ring.empty())
      throw numeric_error("orphan vertex " + std::to_string(v) + " has no neighbors");
    Vec3 mean = Vec3::Zero();
    for (int u : ring) mean += mesh.vertices[u];
    lap[v] = mean / static_cast<double>(ring.size()) - mesh.vertices[v];
  }
  return lap;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

MeshStats mesh_stats(const TriangleMesh& mesh) {
  MeshStats stats;
  stats.vertex_count = mesh.vertex_count();
  stats.face_count = mesh.face_count();

  std::unordered_map<std::uint64_t, int> undirected;
  std::unordered_map<std::uint64_t, int> directed;
  UnionFind uf(stats.vertex_count);
  double min_len = std::numeric_limits<double>::infinity();
  double max_len = 0.0;
  double sum_len = 0.0;
  for (const Face& f : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      const int a = f[c];
      const int b = f[(c + 1) % 3];
      ++directed[(static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
                 static_cast<std::uint32_t>(b)];
      const std::uint64_t key = edge_key(a, b);
      if (++undirected[key] == 1) {
        const double len = (mesh.vertices[a] - mesh.vertices[b]).norm();
        min_len = std::min(min_len, len);
        max_len = std::max(max_len, len);
        sum_len += len;
      }
      uf.unite(a, b);
    }
  }
  stats.edge_count = static_cast<int>(undirected.size());
  stats.euler_characteristic = stats.vertex_count - stats.edge_count + stats.face_count;
  if (stats.edge_count > 0) {
    stats.min_edge_length = min_len;
    stats.max_edge_length = max_len;
    stats.mean_edge_length = sum_len / stats.edge_count;
  }

  std::vector<char> root_seen(std::max(1, stats.vertex_count), 0);
  for (int v = 0; v < stats.vertex_count; ++v) {
    const int r = uf.find(v);
    if (!root_seen[r]) {
      root_seen[r] = 1;
      ++stats.connected_components;
    }
  }

  // Watertight: every undirected edge borders exactly two faces with
  // opposite orientation, i.e. both directed half-edges occur exactly once.
  stats.watertight = stats.face_count > 0;
  for (const auto& [key, count] : undirected) {
    if (count != 2) {
      stats.watertight = false;
      break;
    }
  }
  if (stats.watertight) {
    for (const auto& [key, count] : directed) {
      if (count != 1) {
        stats.watertight = false;
        break;
      }
    }
  }
  if (stats.watertight) {
    // chi = sum over components of (2 - 2 g_i); report the total genus.
    const int total = stats.connected_components - stats.euler_characteristic / 2;
    if (stats.euler_characteristic % 2 == 0 && total >= 0) stats.genus = total;
  }
  return stats;
}

TriangleMesh loop_subdivide(const TriangleMesh& mesh) {
  const Adjacency adj = Adjacency::build(mesh);
  const int nv = mesh.vertex_count();
  const bool with_colors = mesh.has_colors();
  TriangleMesh out;
  out.vertices.resize(nv);
  if (with_colors) out.colors.resize(nv);

  // Even (existing) vertices: Loop's beta weights over the 1-ring.
  for (int v = 0; v < nv; ++v) {
    const auto& ring = adj.vertex_ring[v];
    const int n = static_cast<int>(ring.size());
    if (n == 0)
      throw numeric_error("orphan vertex " + std::to_string(v) + " cannot be subdivided");
    const double c = 3.0 / 8.0 + 0.25 * std::cos(2.0 * std::numbers::pi / n);
    const double beta = (5.0 / 8.0 - c * c) / n;
    Vec3 pos = (1.0 - n * beta) * mesh.vertices[v];
    Vec3 col = with_colors ? Vec3((1.0 - n * beta) * mesh.colors[v]) : Vec3::Zero();
    for (int u : ring) {
      pos += beta * mesh.vertices[u];
      if (with_colors) col += beta * mesh.colors[u];
    }
    out.vertices[v] = pos;
    if (with_colors) out.colors[v] = col;
  }

  // Odd (edge) vertices: 3/8 endpoints + 1/8 opposite vertices when the edge
  // is interior, plain midpoint otherwise.
  std::unordered_map<std::uint64_t, int> edge_vertex;
  const auto opposite = [&mesh](int face, int a, int b) {
    for (int c = 0; c < 3; ++c) {
      const int v = mesh.faces[face][c];
      if (v != a && v != b) return v;
    }
    return -1;
  };
  const auto edge_point = [&](int a, int b) {
    const std::uint64_t key = edge_key(a, b);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const EdgeFaces ef = adj.edge_faces.at(key);
    Vec3 pos;
    Vec3 col = Vec3::Zero();
    if (ef.count() == 2) {
      const int c = opposite(ef.f0, a, b);
      const int d = opposite(ef.f1, a, b);
      pos = 0.375 * (mesh.vertices[a] + mesh.vertices[b]) +
            0.125 * (mesh.vertices[c] + mesh.vertices[d]);
      if (with_colors)
        col = 0.375 * (mesh.colors[a] + mesh.colors[b]) + 0.125 * (mesh.colors[c] + mesh.colors[d]);
    } else {
      pos = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
      if (with_colors) col = 0.5 * (mesh.colors[a] + mesh.colors[b]);
    }
    const int idx = static_cast<int>(out.vertices.size());
    out.vertices.push_back(pos);
    if (with_colors) out.colors.push_back(col);
    edge_vertex.emplace(key, idx);
    return idx;
  };

  out.faces.reserve(mesh.faces.size() * 4);
  for (const Face& f : mesh.faces) {
    const int ab = edge_point(f[0], f[1]);
    const int bc = edge_point(f[1], f[2]);
    const int ca = edge_point(f[2], f[0]);
    out.faces.push_back({f[0], ab, ca});
    out.faces.push_back({f[1], bc, ab});
    out.faces.push_back({f[2], ca, bc});
    out.faces.push_back({ab, bc, ca});
  }
  return out;
}

}  // namespace mvr
