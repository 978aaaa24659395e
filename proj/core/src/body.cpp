#include "fusionpose/body.hpp"

#include "fusionpose/errors.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace fusionpose {
namespace {

// Rest joints at unit scale, body frame, root at the origin.
const Points3& unit_rest_pose() {
  static const Points3 rest = [] {
    Points3 p(kNumJoints, 3);
    p << 0.08, 0.00, 0.72,    // nose
         0.00, 0.00, 0.55,    // neck
         0.00, -0.19, 0.52,   // r_shoulder
         0.00, -0.21, 0.24,   // r_elbow
         0.00, -0.22, -0.02,  // r_wrist
         0.00, 0.19, 0.52,    // l_shoulder
         0.00, 0.21, 0.24,    // l_elbow
         0.00, 0.22, -0.02,   // l_wrist
         0.00, 0.00, 0.00,    // mid_hip
         0.00, -0.10, -0.02,  // r_hip
         0.00, -0.10, -0.47,  // r_knee
         0.00, -0.10, -0.88,  // r_ankle
         0.00, 0.10, -0.02,   // l_hip
         0.00, 0.10, -0.47,   // l_knee
         0.00, 0.10, -0.88,   // l_ankle
         0.07, -0.03, 0.75,   // r_eye
         0.07, 0.03, 0.75,    // l_eye
         0.00, -0.07, 0.73,   // r_ear
         0.00, 0.07, 0.73,    // l_ear
         0.17, -0.10, -0.93,  // r_foot_tip
         0.17, 0.10, -0.93;   // l_foot_tip
    return p;
  }();
  return rest;
}

constexpr double kUnitRootHeight = 0.95;

// Rotation about the body's lateral (y) axis; positive angles swing points
// below the pivot forward (+x).
Eigen::Matrix3d pitch(double angle) {
  return Eigen::AngleAxisd(-angle, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

void rotate_about(Points3& p, int pivot, std::initializer_list<int> joints, const Eigen::Matrix3d& r) {
  const Eigen::RowVector3d c = p.row(pivot);
  for (int j : joints) p.row(j) = ((r * (p.row(j) - c).transpose()).transpose() + c);
}

}  // namespace

BodyModel BodyModel::standard(double scale) {
  BodyModel b;
  b.scale = scale;
  const auto& bones = SkeletonSpec::standard().bones;
  b.bone_radius.resize(bones.size());
  for (std::size_t i = 0; i < bones.size(); ++i) {
    const auto [a, c] = bones[i];
    double r = 0.05;
    if (a == 8 && c == 1) r = 0.14;                       // torso
    else if (a == 1 && c == 0) r = 0.06;                  // neck
    else if (a == 0 || a == 15 || a == 16) r = 0.05;      // head
    else if ((a == 1 && (c == 2 || c == 5))) r = 0.06;    // shoulders
    else if (c == 3 || c == 6) r = 0.05;                  // upper arms
    else if (c == 4 || c == 7) r = 0.04;                  // forearms
    else if (a == 8) r = 0.09;                            // pelvis
    else if (c == 10 || c == 13) r = 0.075;               // thighs
    else if (c == 11 || c == 14) r = 0.055;               // shanks
    else r = 0.04;                                        // feet
    b.bone_radius[i] = r;
  }
  return b;
}

void BodyModel::validate() const {
  if (bone_radius.size() != SkeletonSpec::standard().bones.size()) {
    throw InvalidInput("body model: one radius per bone required");
  }
  for (double r : bone_radius) {
    if (!(r > 0.0)) throw InvalidInput("body model: capsule radii must be positive");
  }
  if (!(scale >= 0.8 && scale <= 1.2)) throw InvalidInput("body model: scale must lie in [0.8, 1.2]");
}

void MotionScript::validate() const {
  if (waypoints.empty()) throw InvalidInput("motion script: at least one waypoint required");
  if (!(duration > 0.0)) throw InvalidInput("motion script: duration must be positive");
  if (!(speed >= 0.0)) throw InvalidInput("motion script: speed must be non-negative");
  if (!(gait_frequency > 0.0)) throw InvalidInput("motion script: gait frequency must be positive");
}

Points3 rest_pose(const BodyModel& body) { return unit_rest_pose() * body.scale; }

double root_height(const BodyModel& body) { return kUnitRootHeight * body.scale; }

namespace {

// Segment index and fraction along the polyline at arc length s (clamped).
std::pair<std::size_t, double> locate(const MotionScript& script, double s) {
  const auto& w = script.waypoints;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double len = (w[i + 1] - w[i]).norm();
    if (s <= len || i + 2 == w.size()) return {i, len > 0.0 ? std::min(s / len, 1.0) : 0.0};
    s -= len;
  }
  return {0, 0.0};
}

}  // namespace

Eigen::Vector2d root_position(const MotionScript& script, double t) {
  const auto& w = script.waypoints;
  if (w.size() == 1) return w.front();
  const auto [seg, frac] = locate(script, script.speed * t);
  return w[seg] + frac * (w[seg + 1] - w[seg]);
}

double heading(const MotionScript& script, double t) {
  const auto& w = script.waypoints;
  if (w.size() == 1) return 0.0;
  const auto [seg, frac] = locate(script, script.speed * t);
  (void)frac;
  const Eigen::Vector2d d = w[seg + 1] - w[seg];
  return std::atan2(d.y(), d.x());
}

Pose3D pose_at(const MotionScript& script, const BodyModel& body, double t) {
  script.validate();
  if (!(t >= 0.0 && t <= script.duration)) {
    throw InvalidInput("pose_at: t = " + std::to_string(t) + " outside [0, " +
                       std::to_string(script.duration) + "]");
  }
  Points3 p = rest_pose(body);
  const double w = 2.0 * std::numbers::pi * script.gait_frequency * t + script.phase;
  const double swing = std::sin(w);
  const double knee_r = 0.5 * (1.0 - std::cos(w));
  const double knee_l = 0.5 * (1.0 + std::cos(w));

  // Legs: hip flexion swings the whole leg, knee flexion folds the shank back.
  rotate_about(p, 10, {11, 19}, pitch(-script.knee_amplitude * knee_r));
  rotate_about(p, 9, {10, 11, 19}, pitch(script.hip_amplitude * swing));
  rotate_about(p, 13, {14, 20}, pitch(-script.knee_amplitude * knee_l));
  rotate_about(p, 12, {13, 14, 20}, pitch(-script.hip_amplitude * swing));
  // Arms swing opposite to the same-side leg; elbows flex forward.
  rotate_about(p, 3, {4}, pitch(script.elbow_amplitude * knee_l));
  rotate_about(p, 2, {3, 4}, pitch(-script.shoulder_amplitude * swing));
  rotate_about(p, 6, {7}, pitch(script.elbow_amplitude * knee_r));
  rotate_about(p, 5, {6, 7}, pitch(script.shoulder_amplitude * swing));

  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(heading(script, t), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector2d ground = root_position(script, t);
  const Eigen::RowVector3d root(ground.x(), ground.y(), script.ground_z + root_height(body));
  Pose3D pose;
  pose.joints = (p * yaw.transpose()).rowwise() + root;
  return pose;
}

}  // namespace fusionpose
