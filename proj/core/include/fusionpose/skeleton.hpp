#pragma once

#include "fusionpose/calibration.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace fusionpose {

inline constexpr std::size_t kNumJoints = 21;

// Joint layout, bone tree and root shared by losses, metrics and interpolation.
struct SkeletonSpec {
  std::vector<std::string> joint_names;
  std::vector<std::pair<int, int>> bones;  // (parent, child)
  int root_index = 0;

  std::size_t joint_count() const { return joint_names.size(); }
  // Throws InvalidInput unless the bones form a tree spanning all joints.
  void validate() const;

  // 0 nose, 1 neck, 2-4 right arm, 5-7 left arm, 8 mid-hip (root),
  // 9-11 right leg, 12-14 left leg, 15/16 eyes, 17/18 ears, 19/20 foot tips.
  static const SkeletonSpec& standard();
};

struct Pose3D {
  Points3 joints;  // K x 3, meters, world frame
};

struct Pose2D {
  Points2 joints;             // K x 2, pixels
  std::vector<bool> visible;  // K flags
};

inline bool operator==(const Pose3D& a, const Pose3D& b) { return a.joints == b.joints; }
inline bool operator==(const Pose2D& a, const Pose2D& b) {
  return a.joints == b.joints && a.visible == b.visible;
}

}  // namespace fusionpose
