#pragma once

#include "fusionpose/association.hpp"
#include "fusionpose/body.hpp"
#include "fusionpose/geometry.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fusionpose {

// Rotating LiDAR at the world origin. Azimuth 0 is +x; the sweep is limited to
// [azimuth_min, azimuth_max] so a desk-scale frame stays below 10^4 rays.
struct LidarConfig {
  int beams = 32;
  double azimuth_step = 0.4;        // degrees
  double azimuth_min = -35.0;       // degrees
  double azimuth_max = 35.0;        // degrees
  double elevation_min = -15.0;     // degrees
  double elevation_max = 10.0;      // degrees
  double range_noise_sigma = 0.01;  // meters
  double max_range = 60.0;          // meters
  double drop_probability = 0.0;

  void validate() const;
  std::size_t ray_count() const;
};

struct PersonState {
  Pose3D pose;
  BodyModel body;
};

struct LabeledCloud {
  PointCloud cloud;
  std::vector<std::uint16_t> labels;  // person index per point
};

// Distance along a unit ray to the first capsule surface hit, if any.
std::optional<double> intersect_capsule(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                        const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        double radius);

// Nearest capsule hit over every person for each (beam, azimuth) ray, range
// perturbed by Gaussian noise, points dropped i.i.d.
LabeledCloud simulate_lidar(const std::vector<PersonState>& persons, const LidarConfig& cfg,
                            std::uint64_t seed);

// Three-channel raster: inverse camera depth, silhouette, per-person id hue.
Image render_raster(const std::vector<PersonState>& persons, const Calibration& calib,
                    std::size_t height, std::size_t width);

double person_hue(std::size_t person);

// Projected joints plus Gaussian pixel noise; each joint hidden with drop_prob;
// joints at or behind the camera plane are always hidden.
Pose2D simulate_2d(const Pose3D& pose, const Calibration& calib, double noise_sigma,
                   double drop_prob, std::uint64_t seed);

struct DetectionJitter {
  double center_sigma_3d = 0.05;  // meters
  double edge_sigma_2d = 2.0;     // pixels
  double inflate_3d = 0.10;
  double inflate_2d = 0.15;
};

struct SimulatedDetection {
  std::optional<Detection2D> det2d;
  std::optional<Detection3D> det3d;  // absent when the person has no points
};

// One detection pair per person: the 3D box bounds that person's labeled
// points, the 2D box bounds its projected joints; both inflated then jittered.
std::vector<SimulatedDetection> simulate_detections(const std::vector<Pose3D>& poses,
                                                    const LabeledCloud& scan,
                                                    const Calibration& calib,
                                                    const DetectionJitter& jitter,
                                                    std::uint64_t seed);

// Uniformly drops floor(fraction * N) points; survivors keep their order.
PointCloud occlude_points(const PointCloud& cloud, double fraction, std::uint64_t seed);

}  // namespace fusionpose
