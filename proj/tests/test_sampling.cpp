#include <cmath>
#include <random>

#include "doctest.h"
#include "mvrecon/sampling.hpp"
#include "mvrecon/winding.hpp"

using namespace mvr;

TEST_SUITE_BEGIN("sampling");

TEST_CASE("radial samples are equally spaced and end at the vertex") {
  const RaySampleSet set = radial_samples({{0, 0, 1}}, Vec3::Zero(), 4);
  REQUIRE(set.samples_per_vertex == 4);
  REQUIRE(set.vertex_count() == 1);
  const Vec3* s = set.samples_of(0);
  CHECK(s[0].z() == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s[1].z() == doctest::Approx(0.50).epsilon(1e-15));
  CHECK(s[2].z() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s[3].z() == doctest::Approx(1.00).epsilon(1e-15));
  for (int j = 0; j < 4; ++j) {
    CHECK(s[j].x() == 0.0);
    CHECK(s[j].y() == 0.0);
  }
  CHECK_THROWS_AS(radial_samples({Vec3::Zero()}, Vec3::Zero(), 4), Error);
}

TEST_CASE("equal densities pull the vertex to the sample centroid") {
  const RaySampleSet set = radial_samples({{0, 0, 1}}, Vec3::Zero(), 4);
  MatX samples(4, 3);
  for (int j = 0; j < 4; ++j) samples.row(j) = set.samples_of(0)[j].transpose();
  const VertexUpdate up = vertex_update(samples, VecX::Constant(4, 1.7));
  CHECK(up.position.z() == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(up.position.head<2>().norm() == 0.0);
}

TEST_CASE("a single sample is returned unchanged with zero jacobian") {
  MatX samples(1, 3);
  samples << 0.3, -0.2, 0.9;
  const VertexUpdate up = vertex_update(samples, VecX::Constant(1, -123.0));
  CHECK(up.position == Vec3(0.3, -0.2, 0.9));
  CHECK(up.jacobian.isZero(0.0));
}

TEST_CASE("radial updates can only slide vertices along their ray") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 v(uni(rng), uni(rng), uni(rng));
    while (v.norm() < 0.1) v = Vec3(uni(rng), uni(rng), uni(rng));
    const RaySampleSet set = radial_samples({v}, Vec3::Zero(), 5);
    MatX samples(5, 3);
    for (int j = 0; j < 5; ++j) samples.row(j) = set.samples_of(0)[j].transpose();
    VecX sigma(5);
    for (int j = 0; j < 5; ++j) sigma[j] = 3.0 * uni(rng);
    const VertexUpdate up = vertex_update(samples, sigma);
    CHECK(up.position.cross(set.directions[0]).norm() < 1e-9);
    CHECK(up.position.dot(set.directions[0]) > 0.0);
  }
}

TEST_CASE("softmax weighting matches the closed form") {
  MatX samples(3, 3);
  samples << 0, 0, 0, 0, 0, 1, 0, 0, 2;
  VecX sigma(3);
  sigma << 0.0, std::log(2.0), std::log(4.0);
  const VertexUpdate up = vertex_update(samples, sigma);
  CHECK(up.position.z() == doctest::Approx(10.0 / 7.0).epsilon(1e-14));

  // shift invariance is exact up to rounding
  const VertexUpdate shifted = vertex_update(samples, sigma.array() + 300.0);
  CHECK((shifted.position - up.position).norm() < 1e-12);

  // convex combination: componentwise inside the sample bounding box
  for (int d = 0; d < 3; ++d) {
    CHECK(up.position[d] >= samples.col(d).minCoeff() - 1e-15);
    CHECK(up.position[d] <= samples.col(d).maxCoeff() + 1e-15);
  }
}

TEST_CASE("vertex-update jacobian matches central differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  MatX samples(6, 3);
  VecX sigma(6);
  for (int k = 0; k < 6; ++k) {
    for (int d = 0; d < 3; ++d) samples(k, d) = uni(rng);
    sigma[k] = 2.0 * uni(rng);
  }
  const VertexUpdate up = vertex_update(samples, sigma);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 6; ++k) {
    VecX s_up = sigma, s_down = sigma;
    s_up[k] += h;
    s_down[k] -= h;
    const Vec3 fd =
        (vertex_update(samples, s_up).position - vertex_update(samples, s_down).position) /
        (2.0 * h);
    for (int d = 0; d < 3; ++d)
      worst = std::max(worst,
                       std::abs(fd[d] - up.jacobian(k, d)) / std::max(1.0, std::abs(fd[d])));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("range factors fall back to the cap in empty space") {
  const TriangleMesh sphere = make_icosphere(1.0, 2);
  const TriangleBvh bvh(sphere);
  const double eps = 1e-4 * sphere.bounds().diagonal();
  // outward: nothing to hit; inward: the far wall is ~2 away, 0.9*2 > cap
  const Vec3 v = sphere.vertices[0];
  const RangeFactors rf = range_factors(bvh, v, v.normalized(), 0.15, eps);
  CHECK(rf.t_out == 0.15);
  CHECK(rf.t_in == 0.15);
}

TEST_CASE("range factors shrink before crossing a thin slab") {
  // slab of total thickness 0.1: a vertex on the top face looking down hits
  // the bottom face after 0.1, so t_in = 0.9 * 0.1
  const TriangleMesh slab = make_cuboid(Vec3::Zero(), {1.0, 1.0, 0.05}, 4);
  const TriangleBvh bvh(slab);
  int top_center = -1;
  for (int v = 0; v < slab.vertex_count(); ++v) {
    const Vec3& p = slab.vertices[v];
    if (p.z() == 0.05 && std::abs(p.x()) < 0.3 && std::abs(p.y()) < 0.3) top_center = v;
  }
  REQUIRE(top_center >= 0);
  const double eps = 1e-4 * slab.bounds().diagonal();
  const RangeFactors rf = range_factors(bvh, slab.vertices[top_center], Vec3::UnitZ(), 0.15, eps);
  CHECK(rf.t_out == 0.15);
  CHECK(rf.t_in == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("normal samples follow the shared-endpoint convention") {
  const std::vector<Vec3> verts{Vec3::Zero()};
  const std::vector<Vec3> normals{Vec3::UnitZ()};
  const std::vector<RangeFactors> factors{{0.15, 0.15, 0.15}};

  const RaySampleSet set = normal_ray_samples(verts, normals, factors, 4, 4);
  REQUIRE(set.samples_per_vertex == 8);
  const Vec3* s = set.samples_of(0);
  // inward: both endpoints included
  CHECK(s[0].z() == doctest::Approx(-0.15).epsilon(1e-15));
  CHECK(s[1].z() == doctest::Approx(-0.10).epsilon(1e-15));
  CHECK(s[2].z() == doctest::Approx(-0.05).epsilon(1e-15));
  CHECK(s[3].z() == 0.0);
  // outward: first sample one spacing step beyond the vertex, last at t_out
  CHECK(s[4].z() == doctest::Approx(0.0375).epsilon(1e-15));
  CHECK(s[5].z() == doctest::Approx(0.0750).epsilon(1e-15));
  CHECK(s[6].z() == doctest::Approx(0.1125).epsilon(1e-15));
  CHECK(s[7].z() == doctest::Approx(0.15).epsilon(1e-15));
  // the vertex appears exactly once
  int at_vertex = 0;
  for (int j = 0; j < 8; ++j)
    if (s[j].z() == 0.0) ++at_vertex;
  CHECK(at_vertex == 1);
  // all samples on the line V + t N
  for (int j = 0; j < 8; ++j) CHECK(s[j].head<2>().norm() < 1e-12);
}

TEST_CASE("a collapsed segment donates its samples to the other side") {
  const std::vector<Vec3> verts{Vec3::Zero()};
  const std::vector<Vec3> normals{Vec3::UnitZ()};

  const RaySampleSet out_only =
      normal_ray_samples(verts, normals, {{0.0, 0.2, 0.2}}, 4, 4);
  REQUIRE(out_only.samples_per_vertex == 8);
  for (int j = 0; j < 8; ++j)
    CHECK(out_only.samples_of(0)[j].z() ==
          doctest::Approx(0.2 * (j + 1) / 8.0).epsilon(1e-15));

  const RaySampleSet in_only = normal_ray_samples(verts, normals, {{0.2, 0.0, 0.2}}, 4, 4);
  CHECK(in_only.samples_of(0)[0].z() == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(in_only.samples_of(0)[7].z() == 0.0);

  const RaySampleSet degenerate =
      normal_ray_samples(verts, normals, {{0.0, 0.0, 0.2}}, 4, 4);
  for (int j = 0; j < 8; ++j) CHECK(degenerate.samples_of(0)[j] == Vec3::Zero());
}

TEST_CASE("normal samples classify inside and outside correctly") {
  const TriangleMesh sphere = make_icosphere(1.0, 2);
  const TriangleBvh bvh(sphere);
  std::vector<Vec3> normals(sphere.vertex_count());
  for (int v = 0; v < sphere.vertex_count(); ++v) normals[v] = sphere.vertices[v].normalized();

  const auto factors = range_factors_all(sphere, bvh, normals, 0.15);
  const RaySampleSet set = normal_ray_samples(sphere.vertices, normals, factors, 4, 4);

  for (int v = 0; v < set.vertex_count(); v += 7) {
    const Vec3* s = set.samples_of(v);
    for (int j = 0; j < 3; ++j)  // strictly inward samples (the 4th is on the surface)
      CHECK(winding_inside(winding_number(sphere, s[j])));
    for (int j = 4; j < 8; ++j)
      CHECK_FALSE(winding_inside(winding_number(sphere, s[j])));
  }
}

TEST_SUITE_END();
