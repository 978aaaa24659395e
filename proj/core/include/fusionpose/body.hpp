#pragma once

#include "fusionpose/skeleton.hpp"

#include <Eigen/Core>

#include <vector>

namespace fusionpose {

// Capsule body on the standard skeleton: one radius per bone (meters, before
// scaling) and a uniform limb-length scale in [0.8, 1.2].
struct BodyModel {
  std::vector<double> bone_radius;
  double scale = 1.0;

  static BodyModel standard(double scale = 1.0);
  void validate() const;
  double radius(std::size_t bone) const { return bone_radius[bone] * scale; }
};

// Parametric gait: the root walks the waypoint polyline (x, y on the ground)
// at constant speed while limbs swing sinusoidally at gait_frequency.
struct MotionScript {
  std::vector<Eigen::Vector2d> waypoints;
  double speed = 1.0;           // m/s along the polyline; the root stops at the end
  double duration = 1.0;        // seconds
  double ground_z = -1.0;       // world z of the floor
  double gait_frequency = 1.0;  // Hz
  double phase = 0.0;           // radians
  double hip_amplitude = 0.0;   // radians
  double knee_amplitude = 0.0;
  double shoulder_amplitude = 0.0;
  double elbow_amplitude = 0.0;

  void validate() const;
};

// Body-frame joints at rest (x forward, y left, z up, origin at the root).
Points3 rest_pose(const BodyModel& body);
// Hip height above the floor for this body.
double root_height(const BodyModel& body);

// Root ground position and heading (radians about +z) at time t.
Eigen::Vector2d root_position(const MotionScript& script, double t);
double heading(const MotionScript& script, double t);

// Deterministic analytic pose. Throws InvalidInput for t outside [0, duration].
Pose3D pose_at(const MotionScript& script, const BodyModel& body, double t);

}  // namespace fusionpose
