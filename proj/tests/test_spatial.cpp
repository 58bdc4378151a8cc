#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mvrecon/bvh.hpp"
#include "mvrecon/winding.hpp"

using namespace mvr;

namespace {

// Exhaustive reference: test every triangle, keep (t, face)-lexicographic min.
std::optional<RayHit> brute_force_closest(const TriangleMesh& mesh, const Ray& ray, double t_min,
                                          double t_max) {
  std::optional<RayHit> best;
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto hit = intersect_triangle(ray, mesh.vertices[mesh.faces[f][0]],
                                        mesh.vertices[mesh.faces[f][1]],
                                        mesh.vertices[mesh.faces[f][2]], t_min, t_max);
    if (hit && (!best || hit->t < best->t)) {
      best = *hit;
      best->face = f;
    }
  }
  return best;
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Vec3 v(gauss(rng), gauss(rng), gauss(rng));
  while (v.norm() < 1e-6) v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  return v.normalized();
}

TriangleMesh two_spheres(double separation) {
  TriangleMesh mesh = make_icosphere(1.0, 2);
  const TriangleMesh other = make_icosphere(1.0, 2);
  const int base = mesh.vertex_count();
  for (const Vec3& v : other.vertices) mesh.vertices.push_back(v + Vec3(separation, 0, 0));
  for (const Face& f : other.faces) mesh.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  return mesh;
}

}  // namespace

TEST_SUITE_BEGIN("spatial");

TEST_CASE("closest hit agrees with the exhaustive scan") {
  const TriangleMesh mesh = make_icosphere(1.0, 2);
  const TriangleBvh bvh(mesh);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  int hits = 0;
  for (int i = 0; i < 500; ++i) {
    Ray ray;
    ray.origin = Vec3(uni(rng), uni(rng), uni(rng));
    ray.dir = random_unit(rng);
    const auto fast = bvh.closest_hit(ray, 0.0, 10.0);
    const auto slow = brute_force_closest(mesh, ray, 0.0, 10.0);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) {
      ++hits;
      CHECK(fast->t == slow->t);
      CHECK(fast->face == slow->face);
      CHECK(fast->u == slow->u);
      CHECK(fast->v == slow->v);
    }
  }
  CHECK(hits > 50);  // the sphere occupies a fair share of the sample box
}

TEST_CASE("hit positions land on the sphere") {
  const TriangleMesh mesh = make_icosphere(1.0, 3);
  const TriangleBvh bvh(mesh);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 64; ++i) {
    Ray ray;
    ray.origin = 3.0 * random_unit(rng);
    ray.dir = (0.2 * random_unit(rng) - ray.origin).normalized();
    const auto hit = bvh.closest_hit(ray);
    REQUIRE(hit.has_value());
    CHECK(hit->point(ray).norm() == doctest::Approx(1.0).epsilon(5e-3));
    CHECK(hit->t > 1.5);
  }
}

TEST_CASE("equal-distance hits resolve to the smaller face index") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0.5, 1, 0}, {0.5, -1, 0}};
  mesh.faces = {{0, 1, 2}, {0, 3, 1}};  // share edge (0,1)
  const TriangleBvh bvh(mesh);
  Ray ray;
  ray.origin = Vec3(0.5, 0.0, 1.0);  // straight down through the shared edge
  ray.dir = Vec3(0, 0, -1);
  const auto hit = bvh.closest_hit(ray);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hit->face == 0);
}

TEST_CASE("any_hit and range clipping") {
  const TriangleMesh mesh = make_icosphere(1.0, 1);
  const TriangleBvh bvh(mesh);
  Ray ray;
  ray.origin = Vec3(-5, 0.1, 0.05);
  ray.dir = Vec3(1, 0, 0);
  CHECK(bvh.any_hit(ray, 0.0, 100.0));
  CHECK(!bvh.any_hit(ray, 0.0, 3.0));      // stops short of the sphere
  CHECK(!bvh.any_hit(ray, 6.5, 100.0));    // starts past it
  CHECK(bvh.closest_hit(ray, 0.0, 3.0) == std::nullopt);
  const auto first = bvh.closest_hit(ray);
  const auto second = bvh.closest_hit(ray, first->t + 1e-9, 100.0);
  REQUIRE(second.has_value());
  CHECK(second->t > first->t);
  CHECK(bvh.count_hits(ray, 0.0, 100.0) == 2);
}

TEST_CASE("empty bvh never hits") {
  const TriangleBvh bvh;  // default constructed
  Ray ray;
  CHECK(!bvh.closest_hit(ray).has_value());
  CHECK(!bvh.any_hit(ray, 0.0, 1.0));
  CHECK(bvh.count_hits(ray) == 0);
}

TEST_CASE("octant triangle subtends an eighth of the sphere") {
  const Vec3 a(1, 0, 0), b(0, 1, 0), c(0, 0, 1);
  const double omega = triangle_solid_angle(a, b, c);
  CHECK(omega == doctest::Approx(4.0 * std::numbers::pi / 8.0).epsilon(1e-12));
  CHECK(triangle_solid_angle(a, c, b) == doctest::Approx(-omega).epsilon(1e-12));
  // far away triangle: area/(distance^2) scaling dominates
  const Vec3 off(100, 0, 0);
  CHECK(std::abs(triangle_solid_angle(a + off, b + off, c + off)) < 1e-3);
}

TEST_CASE("winding number of a closed sphere is the indicator") {
  const TriangleMesh mesh = make_icosphere(1.0, 2);
  CHECK(winding_number(mesh, Vec3::Zero()) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(winding_number(mesh, Vec3(0.3, -0.2, 0.4)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(winding_number(mesh, Vec3(3, 0, 0)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(winding_number(mesh, Vec3(1.02, 0, 0)) == doctest::Approx(0.0).epsilon(1e-2));
}

TEST_CASE("winding stacks across overlapping closed parts") {
  const TriangleMesh mesh = two_spheres(1.0);  // centers 1 apart, radius 1 each
  CHECK(winding_number(mesh, Vec3(0.5, 0, 0)) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(winding_number(mesh, Vec3(-0.5, 0, 0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(winding_number(mesh, Vec3(1.5, 0, 0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(winding_number(mesh, Vec3(4, 0, 0)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(winding_inside(winding_number(mesh, Vec3(0.5, 0, 0))));
}

TEST_CASE("ray parity agrees with the winding classification") {
  const TriangleMesh mesh = make_icosphere(0.8, 2);
  const TriangleBvh bvh(mesh);
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> uni(-1.2, 1.2);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const Vec3 p(uni(rng), uni(rng), uni(rng));
    const double w = winding_number(mesh, p);
    if (std::abs(w - 0.5) < 0.45) continue;  // skip the ambiguous shell near the surface
    Ray ray;
    ray.origin = p;
    ray.dir = random_unit(rng);
    const int crossings = bvh.count_hits(ray);
    CHECK((crossings % 2 == 1) == winding_inside(w));
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("batch winding equals pointwise winding") {
  const TriangleMesh mesh = make_icosphere(1.0, 1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::vector<Vec3> points;
  for (int i = 0; i < 100; ++i) points.emplace_back(uni(rng), uni(rng), uni(rng));
  const auto batch = winding_numbers(mesh, points);
  for (std::size_t i = 0; i < points.size(); ++i)
    CHECK(batch[i] == winding_number(mesh, points[i]));
}

TEST_SUITE_END();
