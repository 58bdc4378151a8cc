#include "mvrecon/isosurface.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "mvrecon/parallel.hpp"
#include "mvrecon/winding.hpp"

namespace mvr {

void ScalarGrid::smooth(int iterations) {
  std::vector<double> next(values.size());
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i <= nx; ++i) {
      for (int j = 0; j <= ny; ++j) {
        for (int k = 0; k <= nz; ++k) {
          const double c = at(i, j, k);
          double sum = 6.0 * c;
          sum += at(std::max(i - 1, 0), j, k);
          sum += at(std::min(i + 1, nx), j, k);
          sum += at(i, std::max(j - 1, 0), k);
          sum += at(i, std::min(j + 1, ny), k);
          sum += at(i, j, std::max(k - 1, 0));
          sum += at(i, j, std::min(k + 1, nz));
          next[point_index(i, j, k)] = sum / 12.0;
        }
      }
    }
    values.swap(next);
  }
}

ScalarGrid make_grid(const Aabb& box, int resolution, double padding) {
  if (resolution < 1) throw config_error("grid resolution must be >= 1");
  if (box.empty()) throw numeric_error("cannot grid an empty bounding box");
  ScalarGrid grid;
  const double pad = padding * box.extent().maxCoeff();
  const Vec3 lo = box.min - Vec3::Constant(pad);
  const Vec3 hi = box.max + Vec3::Constant(pad);
  const Vec3 ext = hi - lo;
  grid.spacing = ext.maxCoeff() / resolution;
  grid.origin = lo;
  grid.nx = std::max(1, static_cast<int>(std::ceil(ext.x() / grid.spacing - 1e-9)));
  grid.ny = std::max(1, static_cast<int>(std::ceil(ext.y() / grid.spacing - 1e-9)));
  grid.nz = std::max(1, static_cast<int>(std::ceil(ext.z() / grid.spacing - 1e-9)));
  grid.values.assign(static_cast<std::size_t>(grid.nx + 1) * (grid.ny + 1) * (grid.nz + 1), 0.0);
  return grid;
}

ScalarGrid sample_grid(const Aabb& box, int resolution, double padding,
                       const std::function<double(const Vec3&)>& field) {
  ScalarGrid grid = make_grid(box, resolution, padding);
  for (int i = 0; i <= grid.nx; ++i)
    for (int j = 0; j <= grid.ny; ++j)
      for (int k = 0; k <= grid.nz; ++k) grid.at(i, j, k) = field(grid.point(i, j, k));
  return grid;
}

ScalarGrid winding_grid(const TriangleMesh& mesh, int resolution, double padding) {
  ScalarGrid grid = make_grid(mesh.bounds(), resolution, padding);
  const int nx = grid.nx, ny = grid.ny, nz = grid.nz;

  // Cells whose closure might touch a triangle ("cut"). Conservative via the
  // triangle bounding box, slightly dilated so boundary coincidences err on
  // the cut side.
  std::vector<char> cut(static_cast<std::size_t>(nx) * ny * nz, 0);
  const auto cell_id = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * ny + j) * nz + k;
  };
  const double dilate = 1e-6 * grid.spacing;
  for (const Face& f : mesh.faces) {
    Aabb tb;
    for (int c = 0; c < 3; ++c) tb.expand(mesh.vertices[f[c]]);
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<int>(std::floor((tb.min[a] - dilate - grid.origin[a]) / grid.spacing));
      hi[a] = static_cast<int>(std::floor((tb.max[a] + dilate - grid.origin[a]) / grid.spacing));
      const int n = a == 0 ? nx : (a == 1 ? ny : nz);
      lo[a] = std::clamp(lo[a], 0, n - 1);
      hi[a] = std::clamp(hi[a], 0, n - 1);
    }
    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) cut[cell_id(i, j, k)] = 1;
  }
  const auto cell_cut = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;  // vacuum
    return cut[cell_id(i, j, k)] != 0;
  };
  // A step between grid points along axis `a` runs along a cell edge shared
  // by four cells; if at least one of them is triangle-free, no surface can
  // cross the step, so both endpoints see the same winding number.
  const auto step_safe = [&](int i, int j, int k, int a) {
    for (int s = 0; s < 4; ++s) {
      const int d1 = s & 1, d2 = (s >> 1) & 1;
      bool is_cut = true;
      if (a == 0) is_cut = cell_cut(i, j - d1, k - d2);
      else if (a == 1) is_cut = cell_cut(i - d1, j, k - d2);
      else is_cut = cell_cut(i - d1, j - d2, k);
      if (!is_cut) return true;
    }
    return false;
  };

  const std::size_t np = grid.values.size();
  std::vector<int> region(np, -1);
  std::vector<int> representative;
  std::deque<std::array<int, 3>> queue;
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= ny; ++j) {
      for (int k = 0; k <= nz; ++k) {
        if (region[grid.point_index(i, j, k)] >= 0) continue;
        const int r = static_cast<int>(representative.size());
        representative.push_back(grid.point_index(i, j, k));
        region[grid.point_index(i, j, k)] = r;
        queue.push_back({i, j, k});
        while (!queue.empty()) {
          const auto [ci, cj, ck] = queue.front();
          queue.pop_front();
          const int di[6] = {1, -1, 0, 0, 0, 0};
          const int dj[6] = {0, 0, 1, -1, 0, 0};
          const int dk[6] = {0, 0, 0, 0, 1, -1};
          for (int s = 0; s < 6; ++s) {
            const int niq = ci + di[s], njq = cj + dj[s], nkq = ck + dk[s];
            if (niq < 0 || njq < 0 || nkq < 0 || niq > nx || njq > ny || nkq > nz) continue;
            if (region[grid.point_index(niq, njq, nkq)] >= 0) continue;
            // the edge belongs to the lexicographically smaller endpoint
            const int bi = std::min(ci, niq), bj = std::min(cj, njq), bk = std::min(ck, nkq);
            if (!step_safe(bi, bj, bk, s / 2)) continue;
            region[grid.point_index(niq, njq, nkq)] = r;
            queue.push_back({niq, njq, nkq});
          }
        }
      }
    }
  }

  std::vector<Vec3> rep_points(representative.size());
  for (std::size_t r = 0; r < representative.size(); ++r) {
    const int p = representative[r];
    const int k = p % (nz + 1);
    const int j = (p / (nz + 1)) % (ny + 1);
    const int i = p / ((nz + 1) * (ny + 1));
    rep_points[r] = grid.point(i, j, k);
  }
  const std::vector<double> rep_values = winding_numbers(mesh, rep_points);
  for (std::size_t p = 0; p < np; ++p) grid.values[p] = rep_values[region[p]];
  return grid;
}

namespace {

// One cube splits into six tetrahedra that share the main diagonal (corner 0
// to corner 7); the walk 1-3-2-6-4-5 visits the other corners along cube
// edges, so every cube face is split along the diagonal that touches corner 0
// or corner 7 of that face, which matches between neighboring cubes.
constexpr int kTets[6][4] = {
    {0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7},
};

struct Extractor {
  const ScalarGrid& grid;
  double iso;
  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;

  int cut_point(int pa, int pb, const Vec3& xa, const Vec3& xb, double va, double vb) {
    if (pa > pb) return cut_point(pb, pa, xb, xa, vb, va);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(pa)) << 32) |
        static_cast<std::uint32_t>(pb);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    double t = (iso - va) / (vb - va);
    t = std::clamp(t, 1e-6, 1.0 - 1e-6);  // keep cuts off the corners
    const int idx = mesh.vertex_count();
    mesh.vertices.push_back(xa + t * (xb - xa));
    edge_vertex.emplace(key, idx);
    return idx;
  }

  void emit(int a, int b, int c, const Vec3& toward_outside) {
    const Vec3 n = (mesh.vertices[b] - mesh.vertices[a])
                       .cross(mesh.vertices[c] - mesh.vertices[a]);
    if (n.dot(toward_outside) >= 0.0)
      mesh.faces.push_back({a, b, c});
    else
      mesh.faces.push_back({a, c, b});
  }

  void tet(const int pid[4], const Vec3 x[4], const double val[4]) {
    bool inside[4];
    int n_in = 0;
    for (int i = 0; i < 4; ++i) {
      inside[i] = val[i] > iso;
      n_in += inside[i];
    }
    if (n_in == 0 || n_in == 4) return;
    Vec3 in_mean = Vec3::Zero(), out_mean = Vec3::Zero();
    for (int i = 0; i < 4; ++i) (inside[i] ? in_mean : out_mean) += x[i];
    const Vec3 toward_outside = out_mean / (4 - n_in) - in_mean / n_in;
    if (n_in == 1 || n_in == 3) {
      const bool probe = n_in == 1;
      int apex = 0;
      while (inside[apex] != probe) ++apex;
      int cuts[3], c = 0;
      for (int i = 0; i < 4; ++i)
        if (i != apex) cuts[c++] = cut_point(pid[apex], pid[i], x[apex], x[i], val[apex], val[i]);
      emit(cuts[0], cuts[1], cuts[2], toward_outside);
    } else {
      int in_ids[2], out_ids[2], ni = 0, no = 0;
      for (int i = 0; i < 4; ++i) (inside[i] ? in_ids[ni++] : out_ids[no++]) = i;
      const auto cut = [&](int i, int o) {
        return cut_point(pid[i], pid[o], x[i], x[o], val[i], val[o]);
      };
      const int q00 = cut(in_ids[0], out_ids[0]);
      const int q01 = cut(in_ids[0], out_ids[1]);
      const int q11 = cut(in_ids[1], out_ids[1]);
      const int q10 = cut(in_ids[1], out_ids[0]);
      emit(q00, q01, q11, toward_outside);
      emit(q00, q11, q10, toward_outside);
    }
  }
};

}  // namespace

TriangleMesh extract_isosurface(const ScalarGrid& grid, double iso) {
  Extractor ex{grid, iso, {}, {}};
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      for (int k = 0; k < grid.nz; ++k) {
        int pid[8];
        double val[8];
        bool any_in = false, any_out = false;
        for (int b = 0; b < 8; ++b) {
          pid[b] = grid.point_index(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
          val[b] = grid.values[pid[b]];
          (val[b] > iso ? any_in : any_out) = true;
        }
        if (!any_in || !any_out) continue;
        Vec3 x[8];
        for (int b = 0; b < 8; ++b)
          x[b] = grid.point(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        for (const auto& t : kTets) {
          const int tp[4] = {pid[t[0]], pid[t[1]], pid[t[2]], pid[t[3]]};
          const Vec3 tx[4] = {x[t[0]], x[t[1]], x[t[2]], x[t[3]]};
          const double tv[4] = {val[t[0]], val[t[1]], val[t[2]], val[t[3]]};
          ex.tet(tp, tx, tv);
        }
      }
    }
  }
  ex.mesh.validate();
  return ex.mesh;
}

TriangleMesh winding_isosurface(const TriangleMesh& mesh, int resolution, double iso,
                                double padding, int smooth_iterations) {
  if (mesh.face_count() == 0) throw numeric_error("cannot re-extract an empty mesh");
  ScalarGrid grid = winding_grid(mesh, resolution, padding);
  if (smooth_iterations > 0) grid.smooth(smooth_iterations);
  return extract_isosurface(grid, iso);
}

}  // namespace mvr
