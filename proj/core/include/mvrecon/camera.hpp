#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvrecon/types.hpp"

namespace mvr {

/// Geometry closer than this (along the optical axis) counts as behind the
/// camera and is never rasterized.
inline constexpr double kNearPlane = 1e-4;

/// Pinhole camera in the computer-vision convention: x right, y down,
/// z forward. `rotation` takes world directions into the camera frame and
/// `translation` completes the rigid map, X_cam = R * X_world + t.
struct Camera {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 0, height = 0;
  std::string split = "train";

  /// Orthonormal, non-reflected rotation; positive focals and image size;
  /// split is "train" or "test". Violations raise a config error.
  void validate() const;

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 forward() const { return rotation.row(2).transpose(); }

  /// Perspective projection to pixel coordinates. When the point sits at or
  /// behind the near plane the optional flag is raised and the depth is
  /// clamped to the near plane so the result stays finite.
  Vec2 project(const Vec3& world, bool* behind = nullptr) const;

  /// 2x3 Jacobian d(pixel)/d(world) of `project`. Points behind the near
  /// plane have no meaningful derivative and raise a numeric error.
  Eigen::Matrix<double, 2, 3> project_jacobian(const Vec3& world) const;

  /// World-space ray through pixel (x, y); origin at the camera centre, unit
  /// direction. Pixel centres are at integer + 0.5 in this parametrisation,
  /// so callers pass e.g. (ix + 0.5, iy + 0.5).
  Ray pixel_ray(double x, double y) const;
};

/// Camera at `eye` looking toward `target`, with `up` fixing the roll. Throws
/// a config error when eye == target or the view direction is parallel to up.
Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                      double cx, double cy, int width, int height);

/// JSON array of cameras; each entry holds intrinsics [fx, fy, cx, cy], the
/// row-major rotation, the translation, the image size, and the split name.
/// Numbers survive a save/load round trip bit-for-bit.
std::vector<Camera> load_cameras(const std::filesystem::path& path);
void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);

}  // namespace mvr
