#pragma once

#include "fusionpose/calibration.hpp"
#include "fusionpose/ops.hpp"
#include "fusionpose/skeleton.hpp"

#include <optional>
#include <vector>

namespace fusionpose {

struct LossWeights {
  double motion = 1.0;
  double consistency = 0.1;
  double proj = 1.0;
  double cd_agu = 0.5;

  // Throws ConfigError on negative weights or when every weight is zero,
  // unless allow_all_zero is set.
  void validate(bool allow_all_zero = false) const;
};

// Plain squared chamfer distance: mean_a min_b |a-b|^2 + mean_b min_a |b-a|^2.
// Throws InvalidInput when either set is empty.
double chamfer(const Points3& a, const Points3& b);

namespace ad {
// Differentiable chamfer between point sets a [n x 3] and b [m x 3]. The
// nearest-neighbor assignment is fixed at the forward pass; lowest index wins ties.
Var chamfer(Var a, Var b);
// Pinhole projection of world points [n x 3] -> pixels [n x 2]. Rows at or
// behind kMinDepth yield (cx, cy) and no gradient.
Var project(Var points, const Calibration& calib);
}  // namespace ad

// (1/|U|) sum_{j in U} |M_j - (J_t,j - J_t-1,j)|, U = joints visible in both frames.
// Contributes a zero constant (and a warning) when U is empty.
Var motion_loss(Var pred_motion, const Pose2D& current, const Pose2D& previous);

// Per frame, the mean over joints of |F_t,j - mean_t F_t,j|, averaged over T.
// The temporal mean is a constant target (stop-gradient). When `target` is
// given it replaces the computed mean; gradient checks use this to hold the
// target at its base value. Throws ConfigError for fewer than two frames.
Var consistency_loss(const std::vector<Var>& features, const std::optional<Tensor>& target = std::nullopt);
// The per-frame terms whose average is consistency_loss.
std::vector<Var> consistency_terms(const std::vector<Var>& features,
                                   const std::optional<Tensor>& target = std::nullopt);
// Temporal mean of the features, as used for the target.
Tensor consistency_target(const std::vector<Var>& features);

// (1/|V|) sum_{j in V} |T(J_j) - J2D_j| in pixels, V = visible joints that
// project in front of the camera. Zero constant plus a warning when V is empty.
Var projection_loss(Var pred_pose, const Pose2D& keypoints, const Calibration& calib);

// chamfer(cloud, interpolate_skeleton(pose, spec, s)).
Var chamfer_agu_loss(Var pred_pose, const Points3& cloud, const SkeletonSpec& spec,
                     std::size_t samples_per_bone = 3);

}  // namespace fusionpose
