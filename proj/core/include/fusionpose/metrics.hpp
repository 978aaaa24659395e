#pragma once

#include "fusionpose/skeleton.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fusionpose {

inline constexpr double kPckThresholdMm = 150.0;

// Both root-aligned. Throw ContractError when either pose does not have one
// row per skeleton joint.
double pck(const Points3& pred, const Points3& gt, const SkeletonSpec& spec,
           double threshold_mm = kPckThresholdMm);
double mpjpe(const Points3& pred, const Points3& gt, const SkeletonSpec& spec);

// 0.5 * (mean_a min_b |a-b| + mean_b min_a |b-a|) in millimeters between the
// cloud and the augmented skeleton.
double cd_metric(const Points3& pred, const Points3& cloud, const SkeletonSpec& spec,
                 std::size_t samples_per_bone = 3);

struct MetricReport {
  std::string split;
  double pck = 0.0;       // percent
  double mpjpe = 0.0;     // mm
  double cd = 0.0;        // mm
  std::size_t samples = 0;
  std::vector<double> joint_pck;
  std::vector<double> joint_mpjpe;
};

// Fixed-order accumulation of per-sample errors.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(const SkeletonSpec& spec, double threshold_mm = kPckThresholdMm,
                             std::size_t samples_per_bone = 3);
  void add(const Points3& pred, const Points3& gt, const Points3& cloud);
  std::size_t samples() const { return samples_; }
  MetricReport report(const std::string& split) const;

 private:
  const SkeletonSpec* spec_;
  double threshold_;
  std::size_t samples_per_bone_;
  std::size_t samples_ = 0;
  std::vector<double> hit_;
  std::vector<double> err_;
  double cd_sum_ = 0.0;
};

// Header `split,pck,mpjpe_mm,cd_mm,n_samples`; one summary row per report,
// followed by per-joint rows whose split reads `<split>/<joint name>`.
std::string format_metric_csv(const std::vector<MetricReport>& reports, const SkeletonSpec& spec);
void write_metric_csv(const std::filesystem::path& file, const std::vector<MetricReport>& reports,
                      const SkeletonSpec& spec);

}  // namespace fusionpose
