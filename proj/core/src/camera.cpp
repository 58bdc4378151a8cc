#include "mvrecon/camera.hpp"

#include <fstream>

#include "json.hpp"

namespace mvr {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw config_error("camera focal lengths must be positive");
  if (width < 1 || height < 1) throw config_error("camera image size must be positive");
  if ((rotation.transpose() * rotation - Mat3::Identity()).norm() >= 1e-9)
    throw config_error("camera rotation is not orthonormal");
  if (rotation.determinant() < 0.0) throw config_error("camera rotation is a reflection");
  if (split != "train" && split != "test")
    throw config_error("camera split must be \"train\" or \"test\", got \"" + split + "\"");
}

Vec2 Camera::project(const Vec3& world, bool* behind) const {
  const Vec3 cam = to_camera(world);
  const bool back = cam.z() < kNearPlane;
  if (behind) *behind = back;
  const double z = back ? kNearPlane : cam.z();
  return {fx * cam.x() / z + cx, fy * cam.y() / z + cy};
}

Eigen::Matrix<double, 2, 3> Camera::project_jacobian(const Vec3& world) const {
  const Vec3 cam = to_camera(world);
  const double z = cam.z();
  if (z < kNearPlane) throw numeric_error("projection jacobian requested behind the near plane");
  Eigen::Matrix<double, 2, 3> dpix_dcam;
  dpix_dcam << fx / z, 0.0, -fx * cam.x() / (z * z),  //
      0.0, fy / z, -fy * cam.y() / (z * z);
  return dpix_dcam * rotation;
}

Ray Camera::pixel_ray(double x, double y) const {
  const Vec3 dir_cam((x - cx) / fx, (y - cy) / fy, 1.0);
  Ray ray;
  ray.origin = center();
  ray.dir = (rotation.transpose() * dir_cam).normalized();
  return ray;
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                      double cx, double cy, int width, int height) {
  Vec3 forward = target - eye;
  if (forward.norm() < 1e-12) throw config_error("look-at target coincides with the eye");
  forward.normalize();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw config_error("look-at view direction is parallel to up");
  right.normalize();
  const Vec3 down = forward.cross(right);  // unit by construction

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -cam.rotation * eye;
  cam.width = width;
  cam.height = height;
  cam.validate();
  return cam;
}

namespace {

using nlohmann::json;

json camera_to_json(const Camera& cam) {
  json j;
  j["intrinsics"] = {cam.fx, cam.fy, cam.cx, cam.cy};
  auto& rot = j["rotation"] = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(cam.rotation(r, c));
  j["translation"] = {cam.translation.x(), cam.translation.y(), cam.translation.z()};
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["split"] = cam.split;
  return j;
}

Camera camera_from_json(const json& j, const std::string& where) {
  for (const char* key : {"intrinsics", "rotation", "translation", "width", "height", "split"})
    if (!j.contains(key)) throw io_error(where + ": camera entry is missing \"" + key + "\"");
  const auto& intr = j.at("intrinsics");
  const auto& rot = j.at("rotation");
  const auto& trans = j.at("translation");
  if (intr.size() != 4 || rot.size() != 9 || trans.size() != 3)
    throw io_error(where + ": camera entry has wrong-sized arrays");
  Camera cam;
  cam.fx = intr[0].get<double>();
  cam.fy = intr[1].get<double>();
  cam.cx = intr[2].get<double>();
  cam.cy = intr[3].get<double>();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.rotation(r, c) = rot[3 * r + c].get<double>();
  for (int i = 0; i < 3; ++i) cam.translation[i] = trans[i].get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.split = j.at("split").get<std::string>();
  cam.validate();
  return cam;
}

}  // namespace

std::vector<Camera> load_cameras(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw io_error(path.string() + ": expected a JSON array of cameras");
  std::vector<Camera> cameras;
  cameras.reserve(doc.size());
  try {
    for (std::size_t i = 0; i < doc.size(); ++i)
      cameras.push_back(camera_from_json(doc[i], path.string() + "[" + std::to_string(i) + "]"));
  } catch (const json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }
  return cameras;
}

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
  json doc = json::array();
  for (const Camera& cam : cameras) doc.push_back(camera_to_json(cam));
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw io_error("failed while writing " + path.string());
}

}  // namespace mvr
