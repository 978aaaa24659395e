#include "fusionpose/metrics.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace fusionpose {
namespace {

void check(const Points3& pred, const Points3& gt, const SkeletonSpec& spec) {
  const auto k = static_cast<Eigen::Index>(spec.joint_count());
  if (pred.rows() != k || gt.rows() != k) {
    throw ContractError("metric: poses have " + std::to_string(pred.rows()) + " and " +
                        std::to_string(gt.rows()) + " joints, skeleton has " + std::to_string(k));
  }
}

// Root-aligned per-joint errors in millimeters.
std::vector<double> joint_errors(const Points3& pred, const Points3& gt, const SkeletonSpec& spec) {
  check(pred, gt, spec);
  const Eigen::RowVector3d rp = pred.row(spec.root_index);
  const Eigen::RowVector3d rg = gt.row(spec.root_index);
  std::vector<double> out(spec.joint_count());
  for (Eigen::Index j = 0; j < pred.rows(); ++j) {
    out[static_cast<std::size_t>(j)] = 1000.0 * ((pred.row(j) - rp) - (gt.row(j) - rg)).norm();
  }
  return out;
}

double directed_mean(const Points3& a, const Points3& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.rows(); ++j) best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    s += std::sqrt(best);
  }
  return s / static_cast<double>(a.rows());
}

}  // namespace

double pck(const Points3& pred, const Points3& gt, const SkeletonSpec& spec, double threshold_mm) {
  const auto e = joint_errors(pred, gt, spec);
  std::size_t hits = 0;
  for (double v : e) hits += v < threshold_mm ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(e.size());
}

double mpjpe(const Points3& pred, const Points3& gt, const SkeletonSpec& spec) {
  const auto e = joint_errors(pred, gt, spec);
  double s = 0.0;
  for (double v : e) s += v;
  return s / static_cast<double>(e.size());
}

double cd_metric(const Points3& pred, const Points3& cloud, const SkeletonSpec& spec, std::size_t samples_per_bone) {
  if (pred.rows() != static_cast<Eigen::Index>(spec.joint_count())) throw ContractError("cd_metric: skeleton mismatch");
  if (cloud.rows() == 0) throw InvalidInput("cd_metric: empty point cloud");
  const Points3 aug = interpolate_skeleton(pred, spec, samples_per_bone);
  return 1000.0 * 0.5 * (directed_mean(cloud, aug) + directed_mean(aug, cloud));
}

MetricAccumulator::MetricAccumulator(const SkeletonSpec& spec, double threshold_mm, std::size_t samples_per_bone)
    : spec_(&spec),
      threshold_(threshold_mm),
      samples_per_bone_(samples_per_bone),
      hit_(spec.joint_count(), 0.0),
      err_(spec.joint_count(), 0.0) {}

void MetricAccumulator::add(const Points3& pred, const Points3& gt, const Points3& cloud) {
  const auto e = joint_errors(pred, gt, *spec_);
  for (std::size_t j = 0; j < e.size(); ++j) {
    hit_[j] += e[j] < threshold_ ? 1.0 : 0.0;
    err_[j] += e[j];
  }
  cd_sum_ += cd_metric(pred, cloud, *spec_, samples_per_bone_);
  ++samples_;
}

MetricReport MetricAccumulator::report(const std::string& split) const {
  MetricReport r;
  r.split = split;
  r.samples = samples_;
  const std::size_t k = hit_.size();
  r.joint_pck.assign(k, 0.0);
  r.joint_mpjpe.assign(k, 0.0);
  if (samples_ == 0) return r;
  const double n = static_cast<double>(samples_);
  double hits = 0.0, err = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    r.joint_pck[j] = 100.0 * hit_[j] / n;
    r.joint_mpjpe[j] = err_[j] / n;
    hits += hit_[j];
    err += err_[j];
  }
  r.pck = 100.0 * hits / (n * static_cast<double>(k));
  r.mpjpe = err / (n * static_cast<double>(k));
  r.cd = cd_sum_ / n;
  return r;
}

std::string format_metric_csv(const std::vector<MetricReport>& reports, const SkeletonSpec& spec) {
  std::string out = "split,pck,mpjpe_mm,cd_mm,n_samples\n";
  char buf[256];
  for (const MetricReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%zu\n", r.split.c_str(), r.pck, r.mpjpe, r.cd, r.samples);
    out += buf;
    for (std::size_t j = 0; j < r.joint_pck.size() && j < spec.joint_count(); ++j) {
      std::snprintf(buf, sizeof(buf), "%s/%s,%.6f,%.6f,,%zu\n", r.split.c_str(), spec.joint_names[j].c_str(),
                    r.joint_pck[j], r.joint_mpjpe[j], r.samples);
      out += buf;
    }
  }
  return out;
}

void write_metric_csv(const std::filesystem::path& file, const std::vector<MetricReport>& reports,
                      const SkeletonSpec& spec) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << format_metric_csv(reports, spec);
  if (!out) throw IoError("write failed: " + file.string());
}

}  // namespace fusionpose
