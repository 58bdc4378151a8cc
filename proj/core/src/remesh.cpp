#include "mvrecon/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mvrecon/isosurface.hpp"
#include "mvrecon/winding.hpp"

namespace mvr {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFeatureDihedralDeg = 60.0;
constexpr double kSplitTolerance = 4.0 / 3.0;
constexpr double kCollapseRatio = 4.0 / 5.0;
constexpr int kExtractSmoothing = 2;

/// Mutable mesh for surgery: faces are tombstoned in place ({-1,-1,-1}) and
/// per-vertex incidence lists are kept current, so edge queries stay local.
struct EditMesh {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::vector<std::vector<int>> vfaces;  // live face ids per vertex
  int live = 0;

  explicit EditMesh(const TriangleMesh& m) : verts(m.vertices), faces(m.faces) {
    vfaces.resize(verts.size());
    for (int f = 0; f < static_cast<int>(faces.size()); ++f)
      for (int corner : faces[f]) vfaces[corner].push_back(f);
    live = static_cast<int>(faces.size());
  }

  bool alive(int f) const { return faces[f][0] >= 0; }

  void kill(int f) {
    for (int corner : faces[f]) {
      auto& list = vfaces[corner];
      list.erase(std::remove(list.begin(), list.end(), f), list.end());
    }
    faces[f] = {-1, -1, -1};
    --live;
  }

  int add_face(int a, int b, int c) {
    const int f = static_cast<int>(faces.size());
    faces.push_back({a, b, c});
    vfaces[a].push_back(f);
    vfaces[b].push_back(f);
    vfaces[c].push_back(f);
    ++live;
    return f;
  }

  int add_vertex(const Vec3& p) {
    verts.push_back(p);
    vfaces.emplace_back();
    return static_cast<int>(verts.size()) - 1;
  }

  Vec3 scaled_normal(int f) const {
    const Face& t = faces[f];
    return (verts[t[1]] - verts[t[0]]).cross(verts[t[2]] - verts[t[0]]);
  }
  double area(int f) const { return 0.5 * scaled_normal(f).norm(); }

  bool face_has(int f, int v) const {
    const Face& t = faces[f];
    return t[0] == v || t[1] == v || t[2] == v;
  }

  /// Live faces containing both endpoints of the undirected edge (a, b).
  std::vector<int> edge_live_faces(int a, int b) const {
    const auto& shorter = vfaces[a].size() <= vfaces[b].size() ? vfaces[a] : vfaces[b];
    const int other = vfaces[a].size() <= vfaces[b].size() ? b : a;
    std::vector<int> out;
    for (int f : shorter)
      if (face_has(f, other)) out.push_back(f);
    return out;
  }

  bool edge_exists(int a, int b) const {
    for (int f : vfaces[a])
      if (face_has(f, b)) return true;
    return false;
  }

  std::vector<int> ring_of(int v) const {
    std::vector<int> r;
    for (int f : vfaces[v])
      for (int corner : faces[f])
        if (corner != v) r.push_back(corner);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
  }

  TriangleMesh finish() const {
    TriangleMesh out;
    out.vertices = verts;
    out.faces.reserve(live);
    for (const Face& f : faces)
      if (f[0] >= 0) out.faces.push_back(f);
    return out;
  }
};

int third_vertex(const Face& t, int a, int b) {
  for (int corner : t)
    if (corner != a && corner != b) return corner;
  return -1;
}

int sorted_intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  int count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

/// Collapse (a, b) -> a placed at `pos`. Refuses collapses that would break
/// the link condition, leave fewer than four faces, or flip/degenerate a
/// surviving face. Returns whether the surgery happened.
bool try_collapse(EditMesh& em, int a, int b, const Vec3& pos) {
  if (em.live <= 4) return false;
  const std::vector<int> dying = em.edge_live_faces(a, b);
  if (dying.size() != 2) return false;
  const int apex0 = third_vertex(em.faces[dying[0]], a, b);
  const int apex1 = third_vertex(em.faces[dying[1]], a, b);
  if (apex0 < 0 || apex1 < 0 || apex0 == apex1) return false;
  if (sorted_intersection_size(em.ring_of(a), em.ring_of(b)) != 2) return false;

  for (int v : {a, b}) {
    for (int f : em.vfaces[v]) {
      if (f == dying[0] || f == dying[1]) continue;
      const Face& t = em.faces[f];
      Vec3 p[3];
      for (int c = 0; c < 3; ++c) p[c] = (t[c] == a || t[c] == b) ? pos : em.verts[t[c]];
      const Vec3 before = em.scaled_normal(f);
      const Vec3 after = (p[1] - p[0]).cross(p[2] - p[0]);
      if (after.norm() == 0.0) return false;
      if (before.norm() > 0.0 && before.dot(after) <= 0.0) return false;
    }
  }

  em.kill(dying[0]);
  em.kill(dying[1]);
  em.verts[a] = pos;
  const std::vector<int> moved = em.vfaces[b];
  for (int f : moved) {
    for (int& corner : em.faces[f])
      if (corner == b) corner = a;
    em.vfaces[a].push_back(f);
  }
  em.vfaces[b].clear();
  return true;
}

/// Split the undirected edge (a, b) at point p; each incident live face is
/// replaced by two. Returns the new vertex id, or -1 if the edge is gone.
int split_edge(EditMesh& em, int a, int b, const Vec3& p) {
  const std::vector<int> incident = em.edge_live_faces(a, b);
  if (incident.empty()) return -1;
  const int w = em.add_vertex(p);
  for (int f : incident) {
    const Face t = em.faces[f];
    for (int i = 0; i < 3; ++i) {
      const int u = t[i];
      const int v = t[(i + 1) % 3];
      if ((u == a && v == b) || (u == b && v == a)) {
        const int c = t[(i + 2) % 3];
        em.kill(f);
        em.add_face(u, w, c);
        em.add_face(w, v, c);
        break;
      }
    }
  }
  return w;
}

struct FlipInfo {
  bool ok = false;
  int f1 = -1, f2 = -1;
  int u = -1, v = -1, c = -1, d = -1;  // f1 = (u, v, c), f2 = (v, u, d)
};

/// Geometry/topology checks for flipping the undirected edge (a, b) into the
/// opposite diagonal (c, d). Quality gating is the caller's business.
FlipInfo flip_info(const EditMesh& em, int a, int b) {
  FlipInfo info;
  const std::vector<int> fs = em.edge_live_faces(a, b);
  if (fs.size() != 2) return info;

  // orient: f1 is the face traversing the edge u -> v
  for (int i = 0; i < 3; ++i) {
    const Face& t = em.faces[fs[0]];
    const int u = t[i];
    const int v = t[(i + 1) % 3];
    if ((u == a && v == b) || (u == b && v == a)) {
      info.f1 = fs[0];
      info.f2 = fs[1];
      info.u = u;
      info.v = v;
      info.c = t[(i + 2) % 3];
      break;
    }
  }
  if (info.f1 < 0 || info.f2 < 0) return info;
  info.d = third_vertex(em.faces[info.f2], a, b);
  if (info.c < 0 || info.d < 0 || info.c == info.d) return info;
  if (em.edge_exists(info.c, info.d)) return info;

  const Vec3& pu = em.verts[info.u];
  const Vec3& pv = em.verts[info.v];
  const Vec3& pc = em.verts[info.c];
  const Vec3& pd = em.verts[info.d];
  const Vec3 n_new1 = (pd - pu).cross(pc - pu);  // (u, d, c)
  const Vec3 n_new2 = (pv - pd).cross(pc - pd);  // (d, v, c)
  if (n_new1.norm() == 0.0 || n_new2.norm() == 0.0) return info;
  const Vec3 n_old = em.scaled_normal(info.f1) + em.scaled_normal(info.f2);
  if (n_old.norm() > 0.0 && (n_old.dot(n_new1) <= 0.0 || n_old.dot(n_new2) <= 0.0)) return info;

  info.ok = true;
  return info;
}

void do_flip(EditMesh& em, const FlipInfo& info) {
  em.kill(info.f1);
  em.kill(info.f2);
  em.add_face(info.u, info.d, info.c);
  em.add_face(info.d, info.v, info.c);
}

double corner_angle(const Vec3& at, const Vec3& to1, const Vec3& to2) {
  const Vec3 e1 = to1 - at;
  const Vec3 e2 = to2 - at;
  const double den = e1.norm() * e2.norm();
  if (den == 0.0) return 0.0;
  return std::acos(std::clamp(e1.dot(e2) / den, -1.0, 1.0));
}

double triangle_max_angle(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  return std::max({corner_angle(p0, p1, p2), corner_angle(p1, p2, p0), corner_angle(p2, p0, p1)});
}

/// Vertices touching an edge whose dihedral angle exceeds the feature
/// threshold; boundary and non-manifold edges count as features too.
std::vector<char> feature_vertices(const EditMesh& em) {
  std::vector<char> feature(em.verts.size(), 0);
  const double cos_limit = std::cos(kFeatureDihedralDeg * kPi / 180.0);
  std::unordered_map<std::uint64_t, std::array<int, 3>> edges;  // {f0, f1, count}
  for (int f = 0; f < static_cast<int>(em.faces.size()); ++f) {
    if (!em.alive(f)) continue;
    const Face& t = em.faces[f];
    for (int i = 0; i < 3; ++i) {
      auto& e = edges.try_emplace(edge_key(t[i], t[(i + 1) % 3]), std::array<int, 3>{-1, -1, 0})
                    .first->second;
      if (e[2] < 2) e[e[2]] = f;
      ++e[2];
    }
  }
  for (const auto& [key, e] : edges) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    bool sharp = e[2] != 2;
    if (!sharp) {
      const Vec3 n0 = em.scaled_normal(e[0]);
      const Vec3 n1 = em.scaled_normal(e[1]);
      const double den = n0.norm() * n1.norm();
      sharp = den > 0.0 && n0.dot(n1) / den < cos_limit;
    }
    if (sharp) feature[a] = feature[b] = 1;
  }
  return feature;
}

struct EdgeCandidate {
  double metric = 0.0;
  std::uint64_t key = 0;
  int a = 0;
  int b = 0;
};

/// All live edges matching `keep`, sorted by (metric, key) for determinism.
template <typename Metric, typename Keep>
std::vector<EdgeCandidate> collect_edges(const EditMesh& em, Metric metric, Keep keep) {
  std::vector<EdgeCandidate> out;
  std::unordered_set<std::uint64_t> seen;
  for (int f = 0; f < static_cast<int>(em.faces.size()); ++f) {
    if (!em.alive(f)) continue;
    const Face& t = em.faces[f];
    for (int i = 0; i < 3; ++i) {
      const int a = t[i];
      const int b = t[(i + 1) % 3];
      const std::uint64_t key = edge_key(a, b);
      if (!seen.insert(key).second) continue;
      const double m = metric(a, b);
      if (keep(m)) out.push_back({m, key, std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(out.begin(), out.end(), [](const EdgeCandidate& x, const EdgeCandidate& y) {
    return std::tie(x.metric, x.key) < std::tie(y.metric, y.key);
  });
  return out;
}

/// Drops unreferenced vertices, keeping the survivors in their original
/// relative order so a fully referenced mesh passes through unchanged.
TriangleMesh compact_vertices(const TriangleMesh& mesh) {
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const Face& f : mesh.faces)
    for (int corner : f) used[corner] = 1;
  std::vector<int> remap(mesh.vertices.size(), -1);
  TriangleMesh out;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (!used[v]) continue;
    remap[v] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[v]);
    if (mesh.has_colors()) out.colors.push_back(mesh.colors[v]);
  }
  out.faces.reserve(mesh.faces.size());
  for (const Face& f : mesh.faces)
    out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
  return out;
}

}  // namespace

void RemeshConfig::validate() const {
  if (!(target_edge_len >= 0.0) || !std::isfinite(target_edge_len))
    throw config_error("remesh: target_edge_len must be finite and >= 0");
  if (vertex_budget < 4) throw config_error("remesh: vertex_budget must be at least 4");
  if (!(short_edge_abs >= 0.0) || !std::isfinite(short_edge_abs))
    throw config_error("remesh: short_edge_abs must be finite and >= 0");
  for (double angle : {obtuse_max_angle_pass1, obtuse_max_angle_pass2})
    if (!(angle > 60.0 && angle < 180.0))
      throw config_error("remesh: obtuse angle thresholds must lie in (60, 180) degrees");
  if (obtuse_pass1_iters < 0 || obtuse_pass2_iters < 0)
    throw config_error("remesh: obtuse sweep counts must be >= 0");
  if (mc_resolution < 8) throw config_error("remesh: mc_resolution must be at least 8");
}

TriangleMesh remove_degenerated_triangles(const TriangleMesh& mesh) {
  mesh.validate();
  if (mesh.face_count() == 0) return mesh;
  const double diag = mesh.bounds().diagonal();
  const double eps_area = 1e-12 * diag * diag;

  EditMesh em(mesh);
  for (int pass = 0; pass < 32; ++pass) {
    bool changed = false;
    const int nf = static_cast<int>(em.faces.size());
    for (int f = 0; f < nf; ++f) {
      if (!em.alive(f) || em.area(f) >= eps_area) continue;
      const Face t = em.faces[f];
      double len[3];
      for (int i = 0; i < 3; ++i) len[i] = (em.verts[t[(i + 1) % 3]] - em.verts[t[i]]).norm();
      const int si = static_cast<int>(std::min_element(len, len + 3) - len);
      const int gi = static_cast<int>(std::max_element(len, len + 3) - len);

      if (len[si] < 1e-6 * len[gi]) {
        // needle: merge the two nearly coincident endpoints
        const int a = t[si];
        const int b = t[(si + 1) % 3];
        if (try_collapse(em, a, b, 0.5 * (em.verts[a] + em.verts[b]))) {
          changed = true;
          continue;
        }
      } else {
        // cap: the corner lies on the longest edge; flipping that edge turns
        // it into a proper corner of the neighbor across
        const int a = t[gi];
        const int b = t[(gi + 1) % 3];
        const FlipInfo info = flip_info(em, a, b);
        if (info.ok) {
          do_flip(em, info);
          changed = true;
          continue;
        }
        const std::vector<int> fs = em.edge_live_faces(a, b);
        if (fs.size() == 2 &&
            third_vertex(em.faces[fs[0]], a, b) == third_vertex(em.faces[fs[1]], a, b)) {
          em.kill(fs[0]);  // mirrored sheet: both halves are garbage
          em.kill(fs[1]);
          changed = true;
          continue;
        }
      }
      em.kill(f);  // unrepairable in place
      changed = true;
    }
    if (!changed) break;
  }
  return em.finish();
}

TriangleMesh split_long_edges(const TriangleMesh& mesh, double target_len) {
  if (!(target_len > 0.0) || !std::isfinite(target_len))
    throw config_error("split_long_edges: target length must be finite and > 0");
  mesh.validate();
  EditMesh em(mesh);
  const double limit = kSplitTolerance * target_len;
  for (int pass = 0; pass < 64; ++pass) {
    // midpoint splits at most halve a length, so a few passes settle it
    const auto longs = collect_edges(
        em, [&](int a, int b) { return -(em.verts[a] - em.verts[b]).norm(); },
        [&](double neg_len) { return -neg_len > limit; });
    if (longs.empty()) break;
    for (const EdgeCandidate& e : longs)
      split_edge(em, e.a, e.b, 0.5 * (em.verts[e.a] + em.verts[e.b]));
  }
  return em.finish();
}

TriangleMesh collapse_short_edges(const TriangleMesh& mesh, double min_len, bool preserve_feature,
                                  double max_new_len) {
  if (!(min_len >= 0.0) || !std::isfinite(min_len))
    throw config_error("collapse_short_edges: min length must be finite and >= 0");
  if (max_new_len < 0.0 || !std::isfinite(max_new_len))
    throw config_error("collapse_short_edges: max new length must be finite and >= 0");
  mesh.validate();
  EditMesh em(mesh);
  for (int pass = 0; pass < 10; ++pass) {
    std::vector<char> feature;
    if (preserve_feature) feature = feature_vertices(em);
    const auto shorts = collect_edges(
        em, [&](int a, int b) { return (em.verts[a] - em.verts[b]).norm(); },
        [&](double len) { return len < min_len; });
    bool changed = false;
    for (const EdgeCandidate& e : shorts) {
      // earlier collapses may have moved or merged the endpoints
      if ((em.verts[e.a] - em.verts[e.b]).norm() >= min_len) continue;
      int a = e.a;
      int b = e.b;
      Vec3 pos = 0.5 * (em.verts[a] + em.verts[b]);
      if (preserve_feature) {
        const bool fa = feature[a];
        const bool fb = feature[b];
        if (fa && fb) continue;   // would drag a crease either way
        if (fa) pos = em.verts[a];
        if (fb) {
          std::swap(a, b);  // collapse into the feature vertex
          pos = em.verts[a];
        }
      }
      if (max_new_len > 0.0) {
        // a collapse that manufactures an over-long edge would just be
        // re-split, so skip it to keep collapse and split from fighting
        bool too_long = false;
        for (int side : {a, b}) {
          for (int x : em.ring_of(side)) {
            if (x == a || x == b) continue;
            if ((pos - em.verts[x]).norm() > max_new_len) {
              too_long = true;
              break;
            }
          }
          if (too_long) break;
        }
        if (too_long) continue;
      }
      if (try_collapse(em, a, b, pos)) changed = true;
    }
    if (!changed) break;
  }
  return compact_vertices(em.finish());
}

TriangleMesh remove_obtuse_triangles(const TriangleMesh& mesh, double max_angle_deg,
                                     int max_iters) {
  if (!(max_angle_deg > 60.0 && max_angle_deg < 180.0))
    throw config_error("remove_obtuse_triangles: max angle must lie in (60, 180) degrees");
  if (max_iters < 0) throw config_error("remove_obtuse_triangles: max_iters must be >= 0");
  mesh.validate();
  EditMesh em(mesh);
  const double limit = max_angle_deg * kPi / 180.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    const int nf = static_cast<int>(em.faces.size());
    for (int f = 0; f < nf; ++f) {
      if (!em.alive(f)) continue;
      const Face t = em.faces[f];
      double angles[3];
      for (int i = 0; i < 3; ++i)
        angles[i] =
            corner_angle(em.verts[t[i]], em.verts[t[(i + 1) % 3]], em.verts[t[(i + 2) % 3]]);
      const int ci = static_cast<int>(std::max_element(angles, angles + 3) - angles);
      if (angles[ci] <= limit) continue;
      const int u = t[(ci + 1) % 3];  // edge opposite the obtuse corner, directed u -> v
      const int v = t[(ci + 2) % 3];
      const int c = t[ci];

      const FlipInfo info = flip_info(em, u, v);
      if (info.ok) {
        const double before = std::max(
            triangle_max_angle(em.verts[info.u], em.verts[info.v], em.verts[info.c]),
            triangle_max_angle(em.verts[info.v], em.verts[info.u], em.verts[info.d]));
        const double after = std::max(
            triangle_max_angle(em.verts[info.u], em.verts[info.d], em.verts[info.c]),
            triangle_max_angle(em.verts[info.d], em.verts[info.v], em.verts[info.c]));
        if (after < before - 1e-9) {
          do_flip(em, info);
          changed = true;
          continue;
        }
      }

      // split at the foot of the obtuse corner: both halves get a right angle
      // there, so the cap cannot survive the split
      const Vec3& pu = em.verts[u];
      const Vec3& pv = em.verts[v];
      const Vec3 dir = pv - pu;
      const double den = dir.squaredNorm();
      if (den == 0.0) continue;
      const double s = std::clamp((em.verts[c] - pu).dot(dir) / den, 0.02, 0.98);
      if (split_edge(em, u, v, pu + s * dir) >= 0) changed = true;
    }
    if (!changed) break;
  }
  return em.finish();
}

TriangleMesh extract_outer_surface(const TriangleMesh& mesh, int mc_resolution) {
  if (mc_resolution < 8) throw config_error("extract_outer_surface: resolution must be >= 8");
  mesh.validate();
  if (mesh.face_count() == 0 || mesh.bounds().empty())
    throw numeric_error("surface vanished: input mesh has no faces");
  TriangleMesh out = winding_isosurface(mesh, mc_resolution, 0.5, 0.05, kExtractSmoothing);
  if (out.face_count() == 0)
    throw numeric_error("surface vanished: the 0.5 winding-number level set is empty");
  return out;
}

TriangleMesh remove_duplicated_faces(const TriangleMesh& mesh) {
  mesh.validate();
  struct TripleHash {
    std::size_t operator()(const std::array<int, 3>& t) const {
      std::uint64_t h = 1469598103934665603ULL;
      for (int v : t) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_set<std::array<int, 3>, TripleHash> seen;
  TriangleMesh out;
  out.vertices = mesh.vertices;
  out.colors = mesh.colors;
  out.faces.reserve(mesh.faces.size());
  for (const Face& f : mesh.faces) {
    std::array<int, 3> key = {f[0], f[1], f[2]};
    std::sort(key.begin(), key.end());
    if (seen.insert(key).second) out.faces.push_back(f);
  }
  return out;
}

TriangleMesh remove_isolated_vertices(const TriangleMesh& mesh) {
  mesh.validate();
  return compact_vertices(mesh);
}

namespace {

double orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a);
}

/// Does the open segment (s0, s1) pass strictly through the triangle's
/// interior? Touching configurations (within eps) do not count.
bool segment_pierces(const Vec3& s0, const Vec3& s1, const Vec3& p, const Vec3& q, const Vec3& r,
                     double eps_vol) {
  const double v0 = orient3d(p, q, r, s0);
  const double v1 = orient3d(p, q, r, s1);
  if (!((v0 > eps_vol && v1 < -eps_vol) || (v0 < -eps_vol && v1 > eps_vol))) return false;
  const double w0 = orient3d(s0, s1, p, q);
  const double w1 = orient3d(s0, s1, q, r);
  const double w2 = orient3d(s0, s1, r, p);
  return (w0 > eps_vol && w1 > eps_vol && w2 > eps_vol) ||
         (w0 < -eps_vol && w1 < -eps_vol && w2 < -eps_vol);
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross_2d(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1,
                       double eps) {
  const double d1 = cross2(a1 - a0, b0 - a0);
  const double d2 = cross2(a1 - a0, b1 - a0);
  const double d3 = cross2(b1 - b0, a0 - b0);
  const double d4 = cross2(b1 - b0, a1 - b0);
  return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
         ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

bool point_strictly_inside_2d(const Vec2& p, const Vec2 t[3], double eps) {
  const double c0 = cross2(t[1] - t[0], p - t[0]);
  const double c1 = cross2(t[2] - t[1], p - t[1]);
  const double c2 = cross2(t[0] - t[2], p - t[2]);
  return (c0 > eps && c1 > eps && c2 > eps) || (c0 < -eps && c1 < -eps && c2 < -eps);
}

bool coplanar_overlap(const Vec3 a[3], const Vec3 b[3], const Vec3& normal, double eps_area) {
  int axis;
  normal.cwiseAbs().maxCoeff(&axis);
  const int x = (axis + 1) % 3;
  const int y = (axis + 2) % 3;
  Vec2 a2[3], b2[3];
  for (int i = 0; i < 3; ++i) {
    a2[i] = Vec2(a[i][x], a[i][y]);
    b2[i] = Vec2(b[i][x], b[i][y]);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (segments_cross_2d(a2[i], a2[(i + 1) % 3], b2[j], b2[(j + 1) % 3], eps_area)) return true;
  for (int i = 0; i < 3; ++i)
    if (point_strictly_inside_2d(a2[i], b2, eps_area) ||
        point_strictly_inside_2d(b2[i], a2, eps_area))
      return true;
  return false;
}

bool triangles_intersect(const Vec3 a[3], const Vec3 b[3]) {
  Aabb box;
  for (int i = 0; i < 3; ++i) {
    box.expand(a[i]);
    box.expand(b[i]);
  }
  const double scale = std::max(box.extent().maxCoeff(), 1e-30);
  const double eps_vol = 1e-14 * scale * scale * scale;
  const double eps_area = 1e-14 * scale * scale;

  const Vec3 nb = (b[1] - b[0]).cross(b[2] - b[0]);
  const Vec3 na = (a[1] - a[0]).cross(a[2] - a[0]);
  double da[3], db[3];
  for (int i = 0; i < 3; ++i) {
    da[i] = nb.dot(a[i] - b[0]);
    db[i] = na.dot(b[i] - a[0]);
  }
  if ((da[0] > eps_vol && da[1] > eps_vol && da[2] > eps_vol) ||
      (da[0] < -eps_vol && da[1] < -eps_vol && da[2] < -eps_vol))
    return false;
  if ((db[0] > eps_vol && db[1] > eps_vol && db[2] > eps_vol) ||
      (db[0] < -eps_vol && db[1] < -eps_vol && db[2] < -eps_vol))
    return false;

  const bool coplanar = std::max({std::abs(da[0]), std::abs(da[1]), std::abs(da[2])}) <= eps_vol &&
                        std::max({std::abs(db[0]), std::abs(db[1]), std::abs(db[2])}) <= eps_vol;
  if (coplanar) return coplanar_overlap(a, b, na.norm() > 0.0 ? na : nb, eps_area);

  for (int i = 0; i < 3; ++i) {
    if (segment_pierces(a[i], a[(i + 1) % 3], b[0], b[1], b[2], eps_vol)) return true;
    if (segment_pierces(b[i], b[(i + 1) % 3], a[0], a[1], a[2], eps_vol)) return true;
  }
  return false;
}

std::int64_t intersection_sweep(const TriangleMesh& mesh, bool stop_on_first) {
  const int nf = mesh.face_count();
  if (nf < 2) return 0;
  const Aabb box = mesh.bounds();
  const int res = std::clamp(static_cast<int>(std::cbrt(static_cast<double>(nf))) + 1, 1, 96);
  const Vec3 inv_cell = (res / box.extent().cwiseMax(1e-30).array()).matrix();

  std::vector<Aabb> fbox(nf);
  std::vector<std::array<int, 6>> range(nf);
  auto cell_of = [&](const Vec3& p, int axis) {
    return std::clamp(static_cast<int>((p[axis] - box.min[axis]) * inv_cell[axis]), 0, res - 1);
  };
  std::unordered_map<int, std::vector<int>> buckets;
  for (int f = 0; f < nf; ++f) {
    for (int corner : mesh.faces[f]) fbox[f].expand(mesh.vertices[corner]);
    for (int axis = 0; axis < 3; ++axis) {
      range[f][axis] = cell_of(fbox[f].min, axis);
      range[f][axis + 3] = cell_of(fbox[f].max, axis);
    }
    for (int ix = range[f][0]; ix <= range[f][3]; ++ix)
      for (int iy = range[f][1]; iy <= range[f][4]; ++iy)
        for (int iz = range[f][2]; iz <= range[f][5]; ++iz)
          buckets[(ix * res + iy) * res + iz].push_back(f);
  }

  std::int64_t count = 0;
  for (int f = 0; f < nf; ++f) {
    const Face& tf = mesh.faces[f];
    Vec3 pa[3] = {mesh.vertices[tf[0]], mesh.vertices[tf[1]], mesh.vertices[tf[2]]};
    for (int ix = range[f][0]; ix <= range[f][3]; ++ix)
      for (int iy = range[f][1]; iy <= range[f][4]; ++iy)
        for (int iz = range[f][2]; iz <= range[f][5]; ++iz) {
          for (int g : buckets[(ix * res + iy) * res + iz]) {
            if (g >= f) continue;
            // each pair is tested in the first cell both boxes overlap
            if (ix != std::max(range[f][0], range[g][0]) ||
                iy != std::max(range[f][1], range[g][1]) ||
                iz != std::max(range[f][2], range[g][2]))
              continue;
            const Face& tg = mesh.faces[g];
            bool adjacent = false;
            for (int i = 0; i < 3 && !adjacent; ++i)
              for (int j = 0; j < 3; ++j)
                if (tf[i] == tg[j]) {
                  adjacent = true;
                  break;
                }
            if (adjacent) continue;
            if ((fbox[f].min.array() > fbox[g].max.array()).any() ||
                (fbox[g].min.array() > fbox[f].max.array()).any())
              continue;
            Vec3 pb[3] = {mesh.vertices[tg[0]], mesh.vertices[tg[1]], mesh.vertices[tg[2]]};
            if (triangles_intersect(pa, pb)) {
              ++count;
              if (stop_on_first) return count;
            }
          }
        }
  }
  return count;
}

/// Union-find of faces over shared edges; returns one representative face id
/// per connected component.
std::vector<std::vector<int>> face_components(const TriangleMesh& mesh) {
  const int nf = mesh.face_count();
  std::vector<int> parent(nf);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::unordered_map<std::uint64_t, int> first_face;
  for (int f = 0; f < nf; ++f) {
    const Face& t = mesh.faces[f];
    for (int i = 0; i < 3; ++i) {
      auto [it, fresh] = first_face.try_emplace(edge_key(t[i], t[(i + 1) % 3]), f);
      if (!fresh) parent[find(f)] = find(it->second);
    }
  }
  std::unordered_map<int, int> slot;
  std::vector<std::vector<int>> comps;
  for (int f = 0; f < nf; ++f) {
    const int root = find(f);
    auto [it, fresh] = slot.try_emplace(root, static_cast<int>(comps.size()));
    if (fresh) comps.emplace_back();
    comps[it->second].push_back(f);
  }
  return comps;
}

/// True when some connected component sits strictly inside the others: such
/// interior shells are invisible from outside and must be dissolved by
/// re-extraction.
bool has_nested_components(const TriangleMesh& mesh) {
  const auto comps = face_components(mesh);
  if (comps.size() < 2) return false;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    TriangleMesh others;
    others.vertices = mesh.vertices;
    for (std::size_t j = 0; j < comps.size(); ++j) {
      if (j == k) continue;
      for (int f : comps[j]) others.faces.push_back(mesh.faces[f]);
    }
    const Vec3 probe = mesh.vertices[mesh.faces[comps[k][0]][0]];
    if (std::abs(winding_number(others, probe)) > 0.5) return true;
  }
  return false;
}

bool needs_rebuild(const TriangleMesh& mesh) {
  if (!mesh_stats(mesh).watertight) return true;
  if (has_self_intersections(mesh)) return true;
  return has_nested_components(mesh);
}

}  // namespace

std::int64_t count_self_intersections(const TriangleMesh& mesh) {
  mesh.validate();
  return intersection_sweep(mesh, false);
}

bool has_self_intersections(const TriangleMesh& mesh) {
  mesh.validate();
  return intersection_sweep(mesh, true) > 0;
}

TriangleMesh remesh(const TriangleMesh& mesh, const RemeshConfig& cfg) {
  cfg.validate();
  mesh.validate();
  if (mesh.face_count() == 0) throw numeric_error("surface vanished: remesh input has no faces");

  const double diag = mesh.bounds().diagonal();
  const double short_abs = cfg.short_edge_abs > 0.0 ? cfg.short_edge_abs : 1e-6 * diag;
  double target =
      cfg.target_edge_len > 0.0 ? cfg.target_edge_len : mesh_stats(mesh).mean_edge_length;
  if (!(target > 0.0))
    throw numeric_error("remesh: cannot derive a target edge length (all edges have length 0)");

  TriangleMesh m = mesh;
  m.colors.clear();  // colors are a function of position; the caller re-queries them
  for (int round = 0; round < 8; ++round) {
    m = remove_degenerated_triangles(m);
    m = split_long_edges(m, target);
    m = collapse_short_edges(m, short_abs, false);
    m = collapse_short_edges(m, kCollapseRatio * target, true, kSplitTolerance * target);
    m = remove_obtuse_triangles(m, cfg.obtuse_max_angle_pass1, cfg.obtuse_pass1_iters);
    bool rebuilt = false;
    if (needs_rebuild(m)) {
      m = extract_outer_surface(m, cfg.mc_resolution);
      rebuilt = true;
    }
    m = remove_duplicated_faces(m);
    m = remove_obtuse_triangles(m, cfg.obtuse_max_angle_pass2, cfg.obtuse_pass2_iters);
    m = remove_isolated_vertices(m);
    // a freshly extracted surface still carries grid-scale edges: run at
    // least one more isotropic round over it before stopping
    if (!rebuilt && m.vertex_count() <= cfg.vertex_budget) break;
    if (m.vertex_count() > cfg.vertex_budget) target *= 1.2;
  }
  return m;
}

}  // namespace mvr
