#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace fusionpose {

using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

// Points at or behind this camera depth (meters) do not project.
inline constexpr double kMinDepth = 1e-6;

// Pinhole intrinsics plus the rigid LiDAR(world)-to-camera transform:
// p_cam = rotation * p_world + translation. No lens distortion.
struct Calibration {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  // Throws InvalidInput unless R is orthonormal with det +1 (1e-9) and fx, fy > 0.
  void validate() const;

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
  Eigen::Vector3d to_world(const Eigen::Vector3d& camera) const {
    return rotation.transpose() * (camera - translation);
  }
  Eigen::Vector3d camera_center() const { return -(rotation.transpose() * translation); }

  bool operator==(const Calibration&) const = default;
};

struct Projection {
  Points2 pixels;
  std::vector<bool> valid;  // false when camera depth <= kMinDepth
};

// The projection map from world points to pixels.
Projection project(const Points3& world, const Calibration& calib);

// Inverse of project for a pixel observed at the given camera depth.
Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const Calibration& calib);

// Text format: one `key = value` per line; keys fx fy cx cy r00..r22 tx ty tz.
Calibration parse_calibration(const std::string& text);
std::string format_calibration(const Calibration& calib);
Calibration load_calibration(const std::filesystem::path& file);
void save_calibration(const std::filesystem::path& file, const Calibration& calib);

// Camera looking along +x of a z-up LiDAR frame (x right, y down, z forward),
// offset by `translation` in camera coordinates.
Calibration forward_facing_calibration(double fx, double fy, double cx, double cy,
                                       const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());

}  // namespace fusionpose
