#include <benchmark/benchmark.h>

#include <random>

#include "mvrecon/bvh.hpp"
#include "mvrecon/isosurface.hpp"
#include "mvrecon/winding.hpp"

using namespace mvr;

static void BM_BvhBuild(benchmark::State& state) {
  const TriangleMesh mesh = make_icosphere(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    TriangleBvh bvh(mesh);
    benchmark::DoNotOptimize(bvh);
  }
  state.SetLabel(std::to_string(mesh.face_count()) + " faces");
}
BENCHMARK(BM_BvhBuild)->Arg(2)->Arg(4);

static void BM_BvhClosestHit(benchmark::State& state) {
  const TriangleMesh mesh = make_icosphere(1.0, static_cast<int>(state.range(0)));
  const TriangleBvh bvh(mesh);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::vector<Ray> rays(1024);
  for (Ray& r : rays) {
    r.origin = Vec3(uni(rng), uni(rng), uni(rng));
    r.dir = Vec3(uni(rng), uni(rng), uni(rng)).normalized();
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bvh.closest_hit(rays[i++ & 1023]));
  }
}
BENCHMARK(BM_BvhClosestHit)->Arg(3)->Arg(5);

static void BM_WindingNumber(benchmark::State& state) {
  const TriangleMesh mesh = make_icosphere(1.0, static_cast<int>(state.range(0)));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::vector<Vec3> pts(256);
  for (Vec3& p : pts) p = Vec3(uni(rng), uni(rng), uni(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(winding_number(mesh, pts[i++ & 255]));
  }
  state.SetItemsProcessed(state.iterations() * mesh.face_count());
}
BENCHMARK(BM_WindingNumber)->Arg(2)->Arg(3);

static void BM_WindingIsosurface(benchmark::State& state) {
  const TriangleMesh mesh = make_icosphere(1.0, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(winding_isosurface(mesh, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_WindingIsosurface)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);
