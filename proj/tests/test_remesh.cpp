#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "doctest.h"
#include "mvrecon/isosurface.hpp"
#include "mvrecon/remesh.hpp"
#include "mvrecon/winding.hpp"

using namespace mvr;

namespace {

double min_face_area(const TriangleMesh& m) {
  double out = std::numeric_limits<double>::max();
  for (int f = 0; f < m.face_count(); ++f) out = std::min(out, face_area(m, f));
  return out;
}

double corner_angle_deg(const Vec3& at, const Vec3& a, const Vec3& b) {
  const Vec3 e1 = a - at;
  const Vec3 e2 = b - at;
  const double den = e1.norm() * e2.norm();
  if (den == 0.0) return 0.0;
  return std::acos(std::clamp(e1.dot(e2) / den, -1.0, 1.0)) * 180.0 / 3.14159265358979323846;
}

double max_interior_angle_deg(const TriangleMesh& m) {
  double out = 0.0;
  for (const Face& t : m.faces) {
    const Vec3& p0 = m.vertices[t[0]];
    const Vec3& p1 = m.vertices[t[1]];
    const Vec3& p2 = m.vertices[t[2]];
    out = std::max({out, corner_angle_deg(p0, p1, p2), corner_angle_deg(p1, p2, p0),
                    corner_angle_deg(p2, p0, p1)});
  }
  return out;
}

std::vector<double> edge_lengths(const TriangleMesh& m) {
  std::unordered_set<std::uint64_t> seen;
  std::vector<double> out;
  for (const Face& t : m.faces)
    for (int i = 0; i < 3; ++i) {
      const int a = t[i];
      const int b = t[(i + 1) % 3];
      if (seen.insert(edge_key(a, b)).second)
        out.push_back((m.vertices[a] - m.vertices[b]).norm());
    }
  return out;
}

TriangleMesh merge_meshes(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh out;
  out.vertices = a.vertices;
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  out.faces = a.faces;
  const int off = a.vertex_count();
  for (const Face& f : b.faces) out.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  return out;
}

TriangleMesh translated(TriangleMesh m, const Vec3& d) {
  for (Vec3& v : m.vertices) v += d;
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("remesh");

TEST_CASE("cap and needle degeneracies are repaired in place") {
  const TriangleMesh clean = make_icosphere(1.0, 2);
  const double eps_area = 1e-12 * clean.bounds().diagonal() * clean.bounds().diagonal();

  SUBCASE("clean input is untouched") {
    const TriangleMesh out = remove_degenerated_triangles(clean);
    CHECK(out.face_count() == clean.face_count());
    CHECK(out.vertex_count() == clean.vertex_count());
  }

  SUBCASE("collinear cap becomes a flipped proper corner") {
    TriangleMesh m = clean;
    const Face f0 = m.faces[0];
    m.vertices[f0[2]] = 0.5 * (m.vertices[f0[0]] + m.vertices[f0[1]]);
    REQUIRE(min_face_area(m) < eps_area);
    const TriangleMesh out = remove_degenerated_triangles(m);
    CHECK(min_face_area(out) >= eps_area);
    CHECK(out.face_count() == m.face_count());
    CHECK(mesh_stats(out).watertight);
  }

  SUBCASE("needle collapses back onto its base vertex") {
    TriangleMesh m = clean;
    const Face f1 = m.faces[0];
    const int a = f1[0];
    const int b = f1[1];
    const int c = f1[2];
    int mate = -1;
    int d = -1;
    for (int f = 1; f < m.face_count(); ++f) {
      const Face& t = m.faces[f];
      for (int i = 0; i < 3; ++i)
        if (t[i] == b && t[(i + 1) % 3] == a) {
          mate = f;
          d = t[(i + 2) % 3];
        }
    }
    REQUIRE(mate > 0);
    const int w = m.vertex_count();
    m.vertices.push_back(m.vertices[a] + 1e-11 * (m.vertices[b] - m.vertices[a]));
    m.faces[0] = {a, w, c};
    m.faces[mate] = {b, w, d};
    m.faces.push_back({w, b, c});
    m.faces.push_back({w, a, d});
    REQUIRE(min_face_area(m) < eps_area);
    const TriangleMesh out = remove_degenerated_triangles(m);
    CHECK(min_face_area(out) >= eps_area);
    CHECK(mesh_stats(out).watertight);
    CHECK(out.face_count() == clean.face_count());
  }
}

TEST_CASE("random sliver injections are all repaired") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    TriangleMesh m = make_icosphere(1.0, 2);
    const double eps_area = 1e-12 * m.bounds().diagonal() * m.bounds().diagonal();
    std::uniform_int_distribution<int> pick(0, m.face_count() - 1);
    for (int k = 0; k < 2; ++k) {
      const Face f = m.faces[pick(rng)];
      m.vertices[f[2]] = 0.5 * (m.vertices[f[0]] + m.vertices[f[1]]);
    }
    const TriangleMesh out = remove_degenerated_triangles(m);
    CHECK(min_face_area(out) >= eps_area);
    CHECK(mesh_stats(out).watertight);
  }
}

TEST_CASE("long edges split at midpoints until within tolerance") {
  SUBCASE("an edge twice the target splits exactly once") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {2, 0, 0}, {1, 0.5, 0}, {1, -0.5, 0}};
    m.faces = {{0, 1, 2}, {1, 0, 3}};
    const TriangleMesh out = split_long_edges(m, 1.0);
    CHECK(out.vertex_count() == 5);
    CHECK(out.face_count() == 4);
    CHECK(out.vertices[4] == Vec3(1, 0, 0));
    for (double len : edge_lengths(out)) CHECK(len <= 4.0 / 3.0 + 1e-12);
  }

  SUBCASE("a much longer edge needs several splits") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {3.5, 0, 0}, {1.75, 0.5, 0}, {1.75, -0.5, 0}};
    m.faces = {{0, 1, 2}, {1, 0, 3}};
    const TriangleMesh out = split_long_edges(m, 1.0);
    CHECK(out.vertex_count() >= 6);  // at least two splits
    for (double len : edge_lengths(out)) CHECK(len <= 4.0 / 3.0 + 1e-12);
  }

  SUBCASE("a mesh with only short edges passes through unchanged") {
    const TriangleMesh m = make_icosphere(1.0, 2);
    const TriangleMesh out = split_long_edges(m, 10.0);
    CHECK(out.vertices == m.vertices);
    CHECK(out.faces == m.faces);
  }

  SUBCASE("splitting a closed mesh keeps it watertight") {
    const TriangleMesh m = make_icosphere(1.0, 1);
    const double target = mesh_stats(m).mean_edge_length / 3.0;
    const TriangleMesh out = split_long_edges(m, target);
    CHECK(out.vertex_count() > m.vertex_count());
    CHECK(mesh_stats(out).watertight);
    for (double len : edge_lengths(out)) CHECK(len <= 4.0 / 3.0 * target + 1e-12);
  }
}

TEST_CASE("short edges collapse unless a guard fires") {
  SUBCASE("a short edge on a flat patch merges to its midpoint") {
    TriangleMesh m;
    m.vertices.push_back(Vec3::Zero());            // hub
    m.vertices.push_back(Vec3(0.001, 0, 0));       // nearly coincident rim vertex
    for (int k = 1; k < 6; ++k) {
      const double ang = 2.0 * 3.14159265358979323846 * k / 6.0;
      m.vertices.push_back(Vec3(std::cos(ang), std::sin(ang), 0));
    }
    for (int k = 0; k < 6; ++k) m.faces.push_back({0, 1 + k, 1 + (k + 1) % 6});
    const TriangleMesh out = collapse_short_edges(m, 0.01, false);
    CHECK(out.face_count() == 4);
    CHECK(out.vertex_count() == 6);
    bool merged = false;
    for (const Vec3& v : out.vertices) merged = merged || v.isApprox(Vec3(0.0005, 0, 0), 1e-12);
    CHECK(merged);
    for (double len : edge_lengths(out)) CHECK(len >= 0.01);
  }

  SUBCASE("the optional cap rejects collapses that create long edges") {
    TriangleMesh m;
    m.vertices.push_back(Vec3::Zero());
    m.vertices.push_back(Vec3(0.001, 0, 0));
    for (int k = 1; k < 6; ++k) {
      const double ang = 2.0 * 3.14159265358979323846 * k / 6.0;
      m.vertices.push_back(Vec3(std::cos(ang), std::sin(ang), 0));
    }
    for (int k = 0; k < 6; ++k) m.faces.push_back({0, 1 + k, 1 + (k + 1) % 6});
    // merging would create unit-length spokes, far above the cap
    const TriangleMesh kept = collapse_short_edges(m, 0.01, false, 0.5);
    CHECK(kept.vertex_count() == 7);
    CHECK(kept.face_count() == 6);
    // with a generous cap the merge goes through
    const TriangleMesh merged = collapse_short_edges(m, 0.01, false, 2.0);
    CHECK(merged.vertex_count() == 6);
    CHECK(merged.face_count() == 4);
  }

  SUBCASE("a collapse that would invert a face is skipped") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0},          {0.005, 0, 0},     {0.0025, 0.01, 0},
                  {0.0025, -0.01, 0}, {0.001, -0.02, 0}, {0.001, 0.02, 0}};
    m.faces = {{0, 1, 2}, {1, 0, 3}, {0, 4, 5}};
    const TriangleMesh out = collapse_short_edges(m, 0.01, false);
    CHECK(out.face_count() == 3);
    REQUIRE(out.vertex_count() == 6);
    for (int v = 0; v < 6; ++v) CHECK(out.vertices[v] == m.vertices[v]);
  }

  SUBCASE("random jitter keeps watertightness through collapses") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
      TriangleMesh m = make_icosphere(1.0, 2);
      for (Vec3& v : m.vertices) v += 0.02 * Vec3(uni(rng), uni(rng), uni(rng));
      const double min_len = 0.5 * mesh_stats(m).mean_edge_length;
      const TriangleMesh out = collapse_short_edges(m, min_len, false);
      CHECK(mesh_stats(out).watertight);
      CHECK(out.face_count() <= m.face_count());
    }
  }

  SUBCASE("feature preservation pins sharp cube corners") {
    const TriangleMesh cube = make_cuboid(Vec3::Zero(), {1, 1, 1}, 4);
    const TriangleMesh out = collapse_short_edges(cube, 0.6, true);
    CHECK(out.vertex_count() < cube.vertex_count());
    CHECK(mesh_stats(out).watertight);
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0})
        for (double sz : {-1.0, 1.0}) {
          bool found = false;
          for (const Vec3& v : out.vertices)
            found = found || v == Vec3(sx, sy, sz);
          CHECK(found);
        }
  }
}

TEST_CASE("obtuse triangles get flipped or split away") {
  SUBCASE("a single cap pair is fixed by one flip") {
    TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, 0.044, 0}, {0.5, -1, 0}};
    m.faces = {{0, 1, 2}, {1, 0, 3}};
    REQUIRE(max_interior_angle_deg(m) > 150.0);
    const TriangleMesh out = remove_obtuse_triangles(m, 150.0, 100);
    CHECK(out.face_count() == 2);
    CHECK(out.vertex_count() == 4);
    CHECK(max_interior_angle_deg(out) <= 150.0);
  }

  SUBCASE("a near-equilateral mesh is untouched") {
    const TriangleMesh m = make_icosphere(1.0, 1);
    const TriangleMesh out = remove_obtuse_triangles(m, 150.0, 100);
    CHECK(out.vertices == m.vertices);
    CHECK(out.faces == m.faces);
  }

  SUBCASE("stretched meshes end below the threshold") {
    const Vec3 scales[] = {{1, 1, 4}, {3, 1, 1}, {1, 5, 1}};
    for (const Vec3& s : scales) {
      TriangleMesh m = make_icosphere(1.0, 2);
      for (Vec3& v : m.vertices) v = v.cwiseProduct(s);
      const TriangleMesh out = remove_obtuse_triangles(m, 150.0, 100);
      CHECK(max_interior_angle_deg(out) <= 151.0);
      CHECK(mesh_stats(out).watertight);
    }
  }
}

TEST_CASE("outer-surface extraction stays near the input sphere") {
  const TriangleMesh sphere = make_icosphere(1.0, 3);
  const TriangleMesh out = extract_outer_surface(sphere, 64);
  const double cell = make_grid(sphere.bounds(), 64, 0.05).spacing;

  const MeshStats stats = mesh_stats(out);
  CHECK(stats.watertight);
  REQUIRE(stats.genus.has_value());
  CHECK(*stats.genus == 0);
  for (const Vec3& v : out.vertices) CHECK(std::abs(v.norm() - 1.0) < 2.0 * cell);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < 16; ++k) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    CHECK(winding_inside(winding_number(out, (1.0 - 2.5 * cell) * dir)));
    CHECK_FALSE(winding_inside(winding_number(out, (1.0 + 2.5 * cell) * dir)));
  }
}

TEST_CASE("extraction unions overlapping parts and can change genus") {
  SUBCASE("two crossing spheres become one watertight surface") {
    // the offset is deliberately generic: shifting a mirror-symmetric
    // tessellation along its own symmetry axis makes the two edge graphs
    // cross exactly on mesh edges, which proper-crossing tests ignore
    const TriangleMesh pair = merge_meshes(make_icosphere(1.0, 2),
                                           translated(make_icosphere(1.0, 2), {0.83, 0.11, 0.07}));
    REQUIRE(has_self_intersections(pair));
    const TriangleMesh out = extract_outer_surface(pair, 48);
    const MeshStats stats = mesh_stats(out);
    CHECK(stats.watertight);
    CHECK(stats.connected_components == 1);
    REQUIRE(stats.genus.has_value());
    CHECK(*stats.genus == 0);
    CHECK(count_self_intersections(out) == 0);
  }

  SUBCASE("a sphere stuck through a torus tube keeps the handle") {
    const TriangleMesh blob = merge_meshes(make_torus(1.0, 0.3, 32, 16),
                                           translated(make_icosphere(0.45, 2), {1.0, 0, 0}));
    REQUIRE(has_self_intersections(blob));
    const TriangleMesh out = extract_outer_surface(blob, 48);
    const MeshStats stats = mesh_stats(out);
    CHECK(stats.watertight);
    REQUIRE(stats.genus.has_value());
    CHECK(*stats.genus == 1);
  }

  SUBCASE("a degenerate input loses its surface") {
    TriangleMesh sliver;
    sliver.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    sliver.faces = {{0, 1, 2}};
    CHECK_THROWS_WITH_AS(extract_outer_surface(sliver, 16),
                         doctest::Contains("surface vanished"), Error);
    TriangleMesh empty;
    CHECK_THROWS_AS(extract_outer_surface(empty, 16), Error);
  }
}

TEST_CASE("duplicate faces and isolated vertices are cleaned up") {
  TriangleMesh tet;
  tet.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {9, 9, 9}};  // last is orphaned
  tet.faces = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {2, 0, 3}, {2, 1, 0}, {1, 0, 2}};
  tet.colors = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};

  const TriangleMesh dedup = remove_duplicated_faces(tet);
  CHECK(dedup.face_count() == 4);  // rotated and mirrored copies both fold away
  CHECK(dedup.faces[0] == Face{0, 2, 1});
  CHECK(dedup.vertex_count() == 5);
  CHECK(dedup.colors == tet.colors);

  const TriangleMesh compact = remove_isolated_vertices(dedup);
  CHECK(compact.vertex_count() == 4);
  CHECK(compact.colors.size() == 4);
  CHECK(compact.faces == dedup.faces);  // orphan was last, indices unchanged

  const TriangleMesh sphere = make_icosphere(1.0, 1);
  CHECK(remove_duplicated_faces(sphere).faces == sphere.faces);
  CHECK(remove_isolated_vertices(sphere).vertices == sphere.vertices);
}

TEST_CASE("self-intersection sweep counts proper crossings only") {
  CHECK(count_self_intersections(make_icosphere(1.0, 2)) == 0);

  TriangleMesh crossing;
  crossing.vertices = {{0, 0, 0},        {1, 0, 0},        {0, 1, 0},
                       {0.2, 0.2, -0.5}, {0.8, 0.2, 0.5},  {0.2, 0.8, 0.5}};
  crossing.faces = {{0, 1, 2}, {3, 4, 5}};
  CHECK(count_self_intersections(crossing) == 1);
  CHECK(has_self_intersections(crossing));

  const TriangleMesh apart =
      merge_meshes(make_icosphere(1.0, 1), translated(make_icosphere(1.0, 1), {5, 0, 0}));
  CHECK(count_self_intersections(apart) == 0);

  // tangent faces that only share a segment do not count as crossings
  TriangleMesh touching;
  touching.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {0, 0, 0}, {1, 0, 0}, {0, -1, 0}};
  touching.faces = {{0, 1, 2}, {3, 5, 4}};
  CHECK(count_self_intersections(touching) == 0);
}

TEST_CASE("full pass meets the budget and keeps the surface clean") {
  TriangleMesh sphere = make_icosphere(1.0, 4);
  sphere.colors.assign(sphere.vertices.size(), Vec3(0.5, 0.2, 0.1));
  RemeshConfig cfg;  // budget 2500, derived target
  const TriangleMesh out = remesh(sphere, cfg);

  CHECK(out.vertex_count() <= 2500);
  CHECK(out.vertex_count() >= 1250);
  CHECK_FALSE(out.has_colors());
  const MeshStats stats = mesh_stats(out);
  CHECK(stats.watertight);
  REQUIRE(stats.genus.has_value());
  CHECK(*stats.genus == 0);
  CHECK(count_self_intersections(out) == 0);
}

TEST_CASE("full pass under a tight budget decimates far enough") {
  RemeshConfig cfg;
  cfg.vertex_budget = 700;
  const TriangleMesh out = remesh(make_icosphere(1.0, 4), cfg);
  CHECK(out.vertex_count() <= 700);
  CHECK(out.vertex_count() >= 300);
  CHECK(mesh_stats(out).watertight);
  CHECK(count_self_intersections(out) == 0);
}

TEST_CASE("edge lengths concentrate around the target") {
  RemeshConfig cfg;
  cfg.target_edge_len = 0.2;
  cfg.vertex_budget = 100000;
  const TriangleMesh out = remesh(make_icosphere(1.0, 3), cfg);
  const std::vector<double> lens = edge_lengths(out);
  REQUIRE(!lens.empty());
  int within = 0;
  for (double len : lens)
    if (len >= 0.4 * cfg.target_edge_len && len <= 1.6 * cfg.target_edge_len) ++within;
  CHECK(within >= static_cast<int>(0.95 * static_cast<double>(lens.size())));
}

TEST_CASE("a second pass moves almost nothing") {
  RemeshConfig cfg;
  cfg.target_edge_len = 0.2;
  cfg.vertex_budget = 100000;
  const TriangleMesh m1 = remesh(make_icosphere(1.0, 3), cfg);
  const TriangleMesh m2 = remesh(m1, cfg);

  const double tol = 0.1 * cfg.target_edge_len;
  int moved = 0;
  for (const Vec3& v : m2.vertices) {
    double best = std::numeric_limits<double>::max();
    for (const Vec3& w : m1.vertices) best = std::min(best, (v - w).norm());
    if (best > tol) ++moved;
  }
  CHECK(moved < static_cast<int>(0.05 * static_cast<double>(m2.vertex_count())));
}

TEST_CASE("nested shells are dissolved by re-extraction") {
  const TriangleMesh shells = merge_meshes(make_icosphere(1.0, 3), make_icosphere(0.5, 2));
  REQUIRE(mesh_stats(shells).watertight);
  REQUIRE(count_self_intersections(shells) == 0);
  RemeshConfig cfg;
  cfg.target_edge_len = 0.15;
  cfg.vertex_budget = 100000;
  cfg.mc_resolution = 32;
  const TriangleMesh out = remesh(shells, cfg);
  const MeshStats stats = mesh_stats(out);
  CHECK(stats.connected_components == 1);
  CHECK(stats.watertight);
}

TEST_CASE("configuration errors are rejected up front") {
  const TriangleMesh sphere = make_icosphere(1.0, 1);
  RemeshConfig cfg;
  cfg.vertex_budget = 3;
  CHECK_THROWS_AS(remesh(sphere, cfg), Error);
  cfg = {};
  cfg.mc_resolution = 4;
  CHECK_THROWS_AS(remesh(sphere, cfg), Error);
  cfg = {};
  cfg.obtuse_max_angle_pass1 = 200.0;
  CHECK_THROWS_AS(remesh(sphere, cfg), Error);
  cfg = {};
  TriangleMesh faceless;
  faceless.vertices = {{0, 0, 0}};
  CHECK_THROWS_WITH_AS(remesh(faceless, cfg), doctest::Contains("surface vanished"), Error);

  CHECK_THROWS_AS(split_long_edges(sphere, 0.0), Error);
  CHECK_THROWS_AS(collapse_short_edges(sphere, -1.0, false), Error);
  CHECK_THROWS_AS(remove_obtuse_triangles(sphere, 30.0, 5), Error);
}

TEST_SUITE_END();
