#include "mvrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mvrecon/types.hpp"

namespace mvr {

namespace {

// Maps a 64-bit hash to a double in [0, 1).
double canonical(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Point KD-tree with median splits; queries return the index of the nearest
// point so callers can look up attributes alongside the distance.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) : pts_(points) {
    if (pts_.empty()) throw config_error("nearest-neighbor query on an empty point set");
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    build(0, static_cast<int>(order_.size()));
  }

  // Returns {squared distance, index of nearest point}.
  std::pair<double, int> nearest(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    search(0, q, best, best_idx);
    return {best, best_idx};
  }

 private:
  static constexpr int kLeafSize = 8;

  struct Node {
    int axis = -1;          // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;  // children for inner nodes
    int begin = 0, end = 0;     // order_ range for leaves
  };

  int build(int begin, int end) {
    const int node_idx = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
      nodes_[node_idx].begin = begin;
      nodes_[node_idx].end = end;
      return node_idx;
    }
    Aabb box;
    for (int i = begin; i < end; ++i) box.expand(pts_[order_[i]]);
    int axis = 0;
    const Vec3 ext = box.extent();
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                       if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                       return a < b;
                     });
    nodes_[node_idx].axis = axis;
    nodes_[node_idx].split = pts_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[node_idx].left = left;
    nodes_[node_idx].right = right;
    return node_idx;
  }

  void search(int node_idx, const Vec3& q, double& best, int& best_idx) const {
    const Node& node = nodes_[node_idx];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int p = order_[i];
        const double d2 = (pts_[p] - q).squaredNorm();
        if (d2 < best || (d2 == best && p < best_idx)) {
          best = d2;
          best_idx = p;
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, best, best_idx);
    if (delta * delta <= best) search(far, q, best, best_idx);
  }

  const std::vector<Vec3>& pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

double mean_nn_distance(const std::vector<Vec3>& from, const KdTree& to_tree, int order) {
  double sum = 0.0;
  for (const Vec3& p : from) {
    const double d2 = to_tree.nearest(p).first;
    sum += order == 1 ? std::sqrt(d2) : d2;
  }
  return sum / static_cast<double>(from.size());
}

// Gaussian-filters a plane and returns only the fully covered interior, which
// shrinks each dimension by taps-1.
std::vector<double> gaussian_valid(const std::vector<double>& plane, int w, int h,
                                   const std::vector<double>& kernel) {
  const int taps = static_cast<int>(kernel.size());
  const int vw = w - taps + 1;
  const int vh = h - taps + 1;
  std::vector<double> horiz(static_cast<std::size_t>(vw) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) acc += kernel[k] * plane[y * w + x + k];
      horiz[y * vw + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(vw) * vh, 0.0);
  for (int y = 0; y < vh; ++y) {
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) acc += kernel[k] * horiz[(y + k) * vw + x];
      out[y * vw + x] = acc;
    }
  }
  return out;
}

double ssim_channel(const std::vector<double>& a, const std::vector<double>& b, int w, int h) {
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  constexpr int kTaps = 11;

  std::vector<double> kernel;
  int vw = 0, vh = 0;
  if (w < kTaps || h < kTaps) {
    // Too small for the sliding window: use one uniform window over the image.
    kernel.assign(1, 1.0);
    vw = vh = 1;
    std::vector<double> ka(1, 0.0), kb(1, 0.0), kaa(1, 0.0), kbb(1, 0.0), kab(1, 0.0);
    const double inv_n = 1.0 / static_cast<double>(w * h);
    for (int i = 0; i < w * h; ++i) {
      ka[0] += a[i] * inv_n;
      kb[0] += b[i] * inv_n;
      kaa[0] += a[i] * a[i] * inv_n;
      kbb[0] += b[i] * b[i] * inv_n;
      kab[0] += a[i] * b[i] * inv_n;
    }
    const double va = std::max(0.0, kaa[0] - ka[0] * ka[0]);
    const double vb = std::max(0.0, kbb[0] - kb[0] * kb[0]);
    const double cov = kab[0] - ka[0] * kb[0];
    return ((2.0 * ka[0] * kb[0] + kC1) * (2.0 * cov + kC2)) /
           ((ka[0] * ka[0] + kb[0] * kb[0] + kC1) * (va + vb + kC2));
  }

  kernel.resize(kTaps);
  double ksum = 0.0;
  for (int i = 0; i < kTaps; ++i) {
    const double t = (i - (kTaps - 1) / 2.0) / 1.5;
    kernel[i] = std::exp(-0.5 * t * t);
    ksum += kernel[i];
  }
  for (double& k : kernel) k /= ksum;

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const std::vector<double> mu_a = gaussian_valid(a, w, h, kernel);
  const std::vector<double> mu_b = gaussian_valid(b, w, h, kernel);
  const std::vector<double> m_aa = gaussian_valid(aa, w, h, kernel);
  const std::vector<double> m_bb = gaussian_valid(bb, w, h, kernel);
  const std::vector<double> m_ab = gaussian_valid(ab, w, h, kernel);
  vw = w - kTaps + 1;
  vh = h - kTaps + 1;

  double total = 0.0;
  for (int i = 0; i < vw * vh; ++i) {
    const double va = std::max(0.0, m_aa[i] - mu_a[i] * mu_a[i]);
    const double vb = std::max(0.0, m_bb[i] - mu_b[i] * mu_b[i]);
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    total += ((2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2));
  }
  return total / static_cast<double>(vw * vh);
}

void append_kv(std::string& out, const char* key, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  out += key;
  out += " = ";
  out += buf;
  out += '\n';
}

}  // namespace

PointCloud sample_surface_points(const TriangleMesh& mesh, int n, std::uint64_t seed) {
  if (n < 0) throw config_error("sample count must be non-negative");
  PointCloud cloud;
  if (n == 0) return cloud;
  if (mesh.faces.empty()) throw config_error("cannot sample points from a mesh with no faces");

  std::vector<double> cumulative(mesh.faces.size());
  std::vector<Vec3> normals(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3& p0 = mesh.vertices[mesh.faces[f][0]];
    const Vec3& p1 = mesh.vertices[mesh.faces[f][1]];
    const Vec3& p2 = mesh.vertices[mesh.faces[f][2]];
    const Vec3 cross = (p1 - p0).cross(p2 - p0);
    const double len = cross.norm();
    total += 0.5 * len;
    cumulative[f] = total;
    normals[f] = len > 0.0 ? Vec3(cross / len) : Vec3(0.0, 0.0, 1.0);
  }
  if (!(total > 0.0)) throw config_error("cannot sample points from a zero-area mesh");

  cloud.points.resize(n);
  cloud.normals.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t base = 3ull * static_cast<std::uint64_t>(i);
    const double pick = canonical(mix_seed(seed, base)) * total;
    const std::size_t f =
        std::min(static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(),
                                                           pick) -
                                          cumulative.begin()),
                 mesh.faces.size() - 1);
    const double r1 = canonical(mix_seed(seed, base + 1));
    const double r2 = canonical(mix_seed(seed, base + 2));
    const double u = std::sqrt(r1);
    const Vec3& p0 = mesh.vertices[mesh.faces[f][0]];
    const Vec3& p1 = mesh.vertices[mesh.faces[f][1]];
    const Vec3& p2 = mesh.vertices[mesh.faces[f][2]];
    cloud.points[i] = (1.0 - u) * p0 + u * (1.0 - r2) * p1 + u * r2 * p2;
    cloud.normals[i] = normals[f];
  }
  return cloud;
}

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b, int order) {
  if (order != 1 && order != 2) throw config_error("chamfer order must be 1 or 2");
  if (a.empty() || b.empty()) throw config_error("chamfer distance needs non-empty point sets");
  const KdTree tree_a(a);
  const KdTree tree_b(b);
  return 0.5 * (mean_nn_distance(a, tree_b, order) + mean_nn_distance(b, tree_a, order));
}

double normal_consistency(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty())
    throw config_error("normal consistency needs non-empty point sets");
  if (a.points.size() != a.normals.size() || b.points.size() != b.normals.size())
    throw config_error("point cloud has mismatched normals");
  const KdTree tree_a(a.points);
  const KdTree tree_b(b.points);
  double sum_a = 0.0;
  for (int i = 0; i < a.size(); ++i)
    sum_a += std::abs(a.normals[i].dot(b.normals[tree_b.nearest(a.points[i]).second]));
  double sum_b = 0.0;
  for (int i = 0; i < b.size(); ++i)
    sum_b += std::abs(b.normals[i].dot(a.normals[tree_a.nearest(b.points[i]).second]));
  return 0.5 * (sum_a / a.size() + sum_b / b.size());
}

double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double tau) {
  if (!(tau > 0.0)) throw config_error("f-score threshold must be positive");
  if (a.empty() || b.empty()) throw config_error("f-score needs non-empty point sets");
  const KdTree tree_a(a);
  const KdTree tree_b(b);
  const double tau2 = tau * tau;
  int hits_a = 0;
  for (const Vec3& p : a) hits_a += tree_b.nearest(p).first <= tau2 ? 1 : 0;
  int hits_b = 0;
  for (const Vec3& p : b) hits_b += tree_a.nearest(p).first <= tau2 ? 1 : 0;
  const double precision = static_cast<double>(hits_a) / a.size();
  const double recall = static_cast<double>(hits_b) / b.size();
  if (precision + recall == 0.0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

ImageMetrics image_metrics(const Image& reference, const Image& rendered) {
  if (reference.width != rendered.width || reference.height != rendered.height ||
      reference.channels != rendered.channels)
    throw config_error("image metrics need images of identical shape");
  if (reference.width <= 0 || reference.height <= 0)
    throw config_error("image metrics need non-empty images");

  ImageMetrics m;
  double sq = 0.0;
  for (std::size_t i = 0; i < reference.data.size(); ++i) {
    const double d = reference.data[i] - rendered.data[i];
    sq += d * d;
  }
  m.mse = sq / static_cast<double>(reference.data.size());
  m.psnr = m.mse > 0.0 ? std::min(99.0, 10.0 * std::log10(1.0 / m.mse)) : 99.0;

  const int w = reference.width;
  const int h = reference.height;
  std::vector<double> plane_a(static_cast<std::size_t>(w) * h);
  std::vector<double> plane_b(plane_a.size());
  double ssim_sum = 0.0;
  for (int c = 0; c < reference.channels; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        plane_a[y * w + x] = reference.at(x, y, c);
        plane_b[y * w + x] = rendered.at(x, y, c);
      }
    ssim_sum += ssim_channel(plane_a, plane_b, w, h);
  }
  m.ssim = ssim_sum / reference.channels;
  return m;
}

double MetricsReport::mean_mse() const {
  if (per_view.empty()) return 0.0;
  double s = 0.0;
  for (const ImageMetrics& v : per_view) s += v.mse;
  return s / per_view.size();
}

double MetricsReport::mean_psnr() const {
  if (per_view.empty()) return 0.0;
  double s = 0.0;
  for (const ImageMetrics& v : per_view) s += v.psnr;
  return s / per_view.size();
}

double MetricsReport::mean_ssim() const {
  if (per_view.empty()) return 0.0;
  double s = 0.0;
  for (const ImageMetrics& v : per_view) s += v.ssim;
  return s / per_view.size();
}

std::string MetricsReport::to_text() const {
  std::string out;
  append_kv(out, "chamfer_l1", chamfer_l1);
  append_kv(out, "chamfer_l2", chamfer_l2);
  append_kv(out, "normal_consistency", normal_cons);
  append_kv(out, "fscore", fscore);
  append_kv(out, "tau", tau);
  append_kv(out, "point_samples", point_samples);
  append_kv(out, "views", static_cast<double>(per_view.size()));
  append_kv(out, "mean_mse", mean_mse());
  append_kv(out, "mean_psnr", mean_psnr());
  append_kv(out, "mean_ssim", mean_ssim());
  for (std::size_t i = 0; i < per_view.size(); ++i) {
    char key[48];
    std::snprintf(key, sizeof(key), "view_%03zu_mse", i);
    append_kv(out, key, per_view[i].mse);
    std::snprintf(key, sizeof(key), "view_%03zu_psnr", i);
    append_kv(out, key, per_view[i].psnr);
    std::snprintf(key, sizeof(key), "view_%03zu_ssim", i);
    append_kv(out, key, per_view[i].ssim);
  }
  return out;
}

std::string MetricsReport::csv_header() {
  return "chamfer_l1,chamfer_l2,normal_consistency,fscore,tau,point_samples,views,mean_mse,"
         "mean_psnr,mean_ssim";
}

std::string MetricsReport::to_csv_row() const {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%zu,%.17g,%.17g,%.17g",
                chamfer_l1, chamfer_l2, normal_cons, fscore, tau, point_samples, per_view.size(),
                mean_mse(), mean_psnr(), mean_ssim());
  return buf;
}

MetricsReport mesh_metrics(const TriangleMesh& ground_truth, const TriangleMesh& predicted,
                           int n_points, double tau_fraction, std::uint64_t seed) {
  if (n_points <= 0) throw config_error("mesh metrics need a positive sample count");
  if (!(tau_fraction > 0.0)) throw config_error("f-score threshold fraction must be positive");
  const PointCloud gt = sample_surface_points(ground_truth, n_points, mix_seed(seed, 11));
  const PointCloud pred = sample_surface_points(predicted, n_points, mix_seed(seed, 22));
  MetricsReport report;
  report.point_samples = n_points;
  report.tau = tau_fraction * ground_truth.bounds().diagonal();
  report.chamfer_l1 = chamfer(gt.points, pred.points, 1);
  report.chamfer_l2 = chamfer(gt.points, pred.points, 2);
  report.normal_cons = normal_consistency(gt, pred);
  report.fscore = fscore(pred.points, gt.points, report.tau);
  return report;
}

}  // namespace mvr
