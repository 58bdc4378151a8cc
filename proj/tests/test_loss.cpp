#include <cmath>
#include <random>

#include "doctest.h"
#include "mvrecon/loss.hpp"

using namespace mvr;

namespace {

Image random_image(int w, int h, int channels, unsigned seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  Image img(w, h, channels);
  for (double& v : img.data) v = uni(rng);
  return img;
}

}  // namespace

TEST_SUITE_BEGIN("loss");

TEST_CASE("l1 of identical images is zero with zero cotangents") {
  const Image img = random_image(9, 7, 3, 1);
  Image grad;
  CHECK(l1_image_loss(img, img, &grad) == 0.0);
  for (const double g : grad.data) CHECK(g == 0.0);
}

TEST_CASE("constant offset gives the offset back") {
  const Image captured = random_image(6, 5, 3, 2);
  Image rendered = captured;
  for (double& v : rendered.data) v += 0.1;
  Image grad;
  CHECK(l1_image_loss(rendered, captured, &grad) == doctest::Approx(0.1).epsilon(1e-12));
  for (const double g : grad.data)
    CHECK(g == doctest::Approx(1.0 / rendered.data.size()).epsilon(1e-12));
}

TEST_CASE("l1 matches an elementwise oracle exactly") {
  const Image a = random_image(8, 8, 3, 3);
  const Image b = random_image(8, 8, 3, 4);
  double expect = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) expect += std::abs(a.data[i] - b.data[i]);
  expect /= static_cast<double>(a.data.size());
  CHECK(l1_image_loss(a, b) == expect);
  CHECK_THROWS_AS(l1_image_loss(a, random_image(4, 4, 3, 5)), Error);
}

TEST_CASE("l1 cotangents match central differences away from kinks") {
  const Image captured = random_image(5, 4, 3, 6);
  Image rendered = random_image(5, 4, 3, 7, 1.2, 2.0);  // every residual > 0.2
  Image grad;
  l1_image_loss(rendered, captured, &grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < rendered.data.size(); i += 7) {
    Image up = rendered, down = rendered;
    up.data[i] += h;
    down.data[i] -= h;
    const double fd = (l1_image_loss(up, captured) - l1_image_loss(down, captured)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad.data[i]) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("mask drops pixels from the mean") {
  Image rendered(4, 1, 1, 0.0);
  Image captured(4, 1, 1, 0.0);
  rendered.at(0, 0, 0) = 1.0;  // masked out below
  rendered.at(1, 0, 0) = 0.5;
  Image mask(4, 1, 1, 1.0);
  mask.at(0, 0, 0) = 0.0;
  Image grad;
  CHECK(l1_image_loss(rendered, captured, &grad, &mask) == doctest::Approx(0.5 / 3.0));
  CHECK(grad.at(0, 0, 0) == 0.0);
  CHECK(grad.at(1, 0, 0) == doctest::Approx(1.0 / 3.0));

  Image all_masked(4, 1, 1, 0.0);
  CHECK(l1_image_loss(rendered, captured, nullptr, &all_masked) == 0.0);
}

TEST_CASE("pyramid term: trivial cases and level decay") {
  const Image img = random_image(16, 16, 1, 8);
  CHECK(pyramid_l1(img, img, 3) == 0.0);
  CHECK(pyramid_l1(img, random_image(16, 16, 1, 9), 0) == 0.0);

  // checkerboard vs its inverse: plain L1 is 1, but box averaging cancels the
  // pattern, so deeper levels shrink toward 0
  Image checker(16, 16, 1);
  Image inverse(16, 16, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      checker.at(x, y, 0) = (x + y) % 2;
      inverse.at(x, y, 0) = 1 - (x + y) % 2;
    }
  CHECK(l1_image_loss(checker, inverse) == 1.0);
  CHECK(pyramid_l1(checker, inverse, 1) == 0.0);  // 2x2 blocks average to 0.5 on both sides
}

TEST_CASE("pyramid cotangents match central differences away from kinks") {
  const Image captured = random_image(12, 10, 3, 10);
  Image rendered = random_image(12, 10, 3, 11, 1.2, 2.0);  // residuals stay positive at all levels
  Image grad;
  pyramid_l1(rendered, captured, 3, &grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < rendered.data.size(); i += 11) {
    Image up = rendered, down = rendered;
    up.data[i] += h;
    down.data[i] -= h;
    const double fd =
        (pyramid_l1(up, captured, 3) - pyramid_l1(down, captured, 3)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad.data[i]) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("laplacian loss: flat mesh, displacement direction, homogeneity") {
  // all vertices coincident: every Laplacian vanishes (the only flat closed mesh)
  TriangleMesh flat;
  flat.vertices = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  flat.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
  CHECK(laplacian_loss(flat, Adjacency::build(flat)) == 0.0);

  TriangleMesh sphere = make_icosphere(1.0, 1);
  const Adjacency adj = Adjacency::build(sphere);
  const double base = laplacian_loss(sphere, adj);
  CHECK(base > 0.0);

  // homogeneity: scaling positions scales the loss
  TriangleMesh scaled = sphere;
  for (Vec3& v : scaled.vertices) v *= 2.5;
  CHECK(laplacian_loss(scaled, Adjacency::build(scaled)) ==
        doctest::Approx(2.5 * base).epsilon(1e-12));

  // displacing one vertex outward: the gradient at that vertex points back in
  TriangleMesh bumped = sphere;
  bumped.vertices[0] *= 1.3;
  MatX grad;
  laplacian_loss(bumped, adj, &grad);
  const Vec3 g = grad.row(0).transpose();
  CHECK(g.dot(bumped.vertices[0].normalized()) > 0.0);  // loss grows moving further out
}

TEST_CASE("laplacian cotangents match central differences") {
  TriangleMesh mesh = make_icosphere(1.0, 1);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> uni(-0.05, 0.05);
  for (Vec3& v : mesh.vertices) v += Vec3(uni(rng), uni(rng), uni(rng));
  const Adjacency adj = Adjacency::build(mesh);

  MatX grad;
  laplacian_loss(mesh, adj, &grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (int v = 0; v < mesh.vertex_count(); v += 3) {
    for (int d = 0; d < 3; ++d) {
      TriangleMesh up = mesh, down = mesh;
      up.vertices[v][d] += h;
      down.vertices[v][d] -= h;
      const double fd = (laplacian_loss(up, adj) - laplacian_loss(down, adj)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad(v, d)) / std::max(1.0, std::abs(fd)));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("total loss respects the weights") {
  LossConfig cfg;
  cfg.lambda_laplacian = 2.0;
  cfg.pyramid_weight = 0.5;
  LossParts parts{0.3, 0.2, 0.1};
  CHECK(total_loss(cfg, parts) == doctest::Approx(0.3 + 0.5 * 0.2 + 2.0 * 0.1));

  LossConfig doubled = cfg;
  doubled.lambda_laplacian = 4.0;
  CHECK(total_loss(doubled, parts) - total_loss(cfg, parts) == doctest::Approx(2.0 * 0.1));

  LossConfig zero;
  zero.lambda_laplacian = 0.0;
  CHECK(total_loss(zero, LossParts{}) == 0.0);

  LossConfig bad;
  bad.lambda_laplacian = -1.0;
  CHECK_THROWS_AS(total_loss(bad, parts), Error);
}

TEST_SUITE_END();
