#include "fusionpose/losses.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/geometry.hpp"
#include "fusionpose/log.hpp"

#include <limits>

namespace fusionpose {
namespace {

// For each row of a, the index of the nearest row of b (first on ties) and the squared distance.
void nearest(const double* a, std::size_t n, const double* b, std::size_t m, std::vector<std::size_t>& idx,
             std::vector<double>& dist) {
  idx.assign(n, 0);
  dist.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = a + 3 * i;
    for (std::size_t j = 0; j < m; ++j) {
      const double* q = b + 3 * j;
      const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < dist[i]) {
        dist[i] = d;
        idx[i] = j;
      }
    }
  }
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Var masked_mean_norm(Var diff, const std::vector<char>& mask, const char* what) {
  std::size_t count = 0;
  for (char m : mask) count += m ? 1 : 0;
  Tape& tape = *diff.tape;
  if (count == 0) {
    log_warning(std::string(what) + ": every joint masked, term contributes 0");
    return tape.constant(Tensor::scalar(0.0));
  }
  Tensor weights({mask.size(), 1});
  for (std::size_t j = 0; j < mask.size(); ++j) weights[j] = mask[j] ? 1.0 / static_cast<double>(count) : 0.0;
  return ad::sum(ad::mul(ad::row_norms(diff), tape.constant(std::move(weights))));
}

void check_pose(Var v, std::size_t cols, const char* what) {
  if (v.value().rank() != 2 || v.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected K x " + std::to_string(cols) + ", got " +
                         shape_string(v.shape()));
  }
}

}  // namespace

void LossWeights::validate(bool allow_all_zero) const {
  for (double w : {motion, consistency, proj, cd_agu}) {
    if (!(w >= 0.0)) throw ConfigError("loss weights must be nonnegative");
  }
  if (!allow_all_zero && motion == 0.0 && consistency == 0.0 && proj == 0.0 && cd_agu == 0.0) {
    throw ConfigError("at least one loss weight must be positive");
  }
}

double chamfer(const Points3& a, const Points3& b) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidInput("chamfer: empty point set");
  std::vector<std::size_t> idx;
  std::vector<double> da, db;
  nearest(a.data(), static_cast<std::size_t>(a.rows()), b.data(), static_cast<std::size_t>(b.rows()), idx, da);
  nearest(b.data(), static_cast<std::size_t>(b.rows()), a.data(), static_cast<std::size_t>(a.rows()), idx, db);
  return mean(da) + mean(db);
}

namespace ad {

Var chamfer(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("chamfer: operands recorded on different tapes");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != 3 || bv.cols() != 3) {
    throw DimensionError("chamfer: expected [n x 3] and [m x 3], got " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::size_t n = av.rows(), m = bv.rows();
  std::vector<std::size_t> ia, ib;
  std::vector<double> da, db;
  nearest(av.data().data(), n, bv.data().data(), m, ia, da);
  nearest(bv.data().data(), m, av.data().data(), n, ib, db);
  return a.tape->record(Tensor::scalar(mean(da) + mean(db)), {a, b},
                        [a = a.id, b = b.id, ia = std::move(ia), ib = std::move(ib), n, m](Tape& t, std::size_t self) {
                          const double g = t.grad(self)[0];
                          const Tensor& av = t.value(a);
                          const Tensor& bv = t.value(b);
                          const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
                          // Touch gradients only when needed; grad() allocates.
                          Tensor* gA = ga ? &t.grad(a) : nullptr;
                          Tensor* gB = gb ? &t.grad(b) : nullptr;
                          const double sa = 2.0 * g / static_cast<double>(n);
                          for (std::size_t i = 0; i < n; ++i) {
                            const std::size_t j = ia[i];
                            for (std::size_t k = 0; k < 3; ++k) {
                              const double d = sa * (av[3 * i + k] - bv[3 * j + k]);
                              if (gA) (*gA)[3 * i + k] += d;
                              if (gB) (*gB)[3 * j + k] -= d;
                            }
                          }
                          const double sb = 2.0 * g / static_cast<double>(m);
                          for (std::size_t j = 0; j < m; ++j) {
                            const std::size_t i = ib[j];
                            for (std::size_t k = 0; k < 3; ++k) {
                              const double d = sb * (bv[3 * j + k] - av[3 * i + k]);
                              if (gB) (*gB)[3 * j + k] += d;
                              if (gA) (*gA)[3 * i + k] -= d;
                            }
                          }
                        });
}

Var project(Var points, const Calibration& calib) {
  const Tensor& pv = points.value();
  if (pv.rank() != 2 || pv.cols() != 3) {
    throw DimensionError("project: expected [n x 3], got " + shape_string(pv.shape()));
  }
  const std::size_t n = pv.rows();
  Tensor out({n, 2});
  std::vector<Eigen::Vector3d> cam(n);
  for (std::size_t i = 0; i < n; ++i) {
    cam[i] = calib.to_camera(Eigen::Vector3d(pv[3 * i], pv[3 * i + 1], pv[3 * i + 2]));
    if (cam[i].z() > kMinDepth) {
      out[2 * i] = calib.fx * cam[i].x() / cam[i].z() + calib.cx;
      out[2 * i + 1] = calib.fy * cam[i].y() / cam[i].z() + calib.cy;
    } else {
      out[2 * i] = calib.cx;
      out[2 * i + 1] = calib.cy;
    }
  }
  return points.tape->record(std::move(out), {points}, [p = points.id, cam = std::move(cam), calib](Tape& t, std::size_t self) {
    if (!t.requires_grad(p)) return;
    const Tensor& g = t.grad(self);
    Tensor& gp = t.grad(p);
    for (std::size_t i = 0; i < cam.size(); ++i) {
      const Eigen::Vector3d& c = cam[i];
      if (!(c.z() > kMinDepth)) continue;
      const double iz = 1.0 / c.z();
      // d(pixel)/d(camera point), then through the rotation.
      const Eigen::Vector3d gc(g[2 * i] * calib.fx * iz, g[2 * i + 1] * calib.fy * iz,
                               -(g[2 * i] * calib.fx * c.x() + g[2 * i + 1] * calib.fy * c.y()) * iz * iz);
      const Eigen::Vector3d gw = calib.rotation.transpose() * gc;
      for (int k = 0; k < 3; ++k) gp[3 * i + static_cast<std::size_t>(k)] += gw[k];
    }
  });
}

}  // namespace ad

Var motion_loss(Var pred_motion, const Pose2D& current, const Pose2D& previous) {
  check_pose(pred_motion, 2, "motion_loss");
  const std::size_t k = pred_motion.rows();
  if (current.visible.size() != k || previous.visible.size() != k) {
    throw DimensionError("motion_loss: keypoint count differs from prediction");
  }
  Tensor target({k, 2});
  std::vector<char> mask(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    mask[j] = current.visible[j] && previous.visible[j];
    if (!mask[j]) continue;
    const auto r = static_cast<Eigen::Index>(j);
    target[2 * j] = current.joints(r, 0) - previous.joints(r, 0);
    target[2 * j + 1] = current.joints(r, 1) - previous.joints(r, 1);
  }
  Var diff = ad::sub(pred_motion, pred_motion.tape->constant(std::move(target)));
  return masked_mean_norm(diff, mask, "motion_loss");
}

Tensor consistency_target(const std::vector<Var>& features) {
  if (features.size() < 2) throw ConfigError("consistency_loss: needs at least two frames");
  Tensor avg = features.front().value();
  for (std::size_t t = 1; t < features.size(); ++t) {
    if (features[t].shape() != avg.shape()) throw DimensionError("consistency_loss: frame feature shapes differ");
    const Tensor& f = features[t].value();
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += f[i];
  }
  for (double& v : avg.data()) v /= static_cast<double>(features.size());
  return avg;
}

std::vector<Var> consistency_terms(const std::vector<Var>& features, const std::optional<Tensor>& target) {
  Tensor avg = target ? *target : consistency_target(features);
  if (features.size() < 2) throw ConfigError("consistency_loss: needs at least two frames");
  if (avg.shape() != features.front().shape()) throw DimensionError("consistency_loss: target shape differs");
  Tape& tape = *features.front().tape;
  Var mean_const = tape.constant(std::move(avg));
  std::vector<Var> out;
  for (Var f : features) {
    Var norms = ad::row_norms(ad::sub(f, mean_const));
    out.push_back(ad::scale(ad::sum(norms), 1.0 / static_cast<double>(f.rows())));
  }
  return out;
}

Var consistency_loss(const std::vector<Var>& features, const std::optional<Tensor>& target) {
  const std::vector<Var> terms = consistency_terms(features, target);
  Var total = terms.front();
  for (std::size_t t = 1; t < terms.size(); ++t) total = ad::add(total, terms[t]);
  return ad::scale(total, 1.0 / static_cast<double>(terms.size()));
}

Var projection_loss(Var pred_pose, const Pose2D& keypoints, const Calibration& calib) {
  check_pose(pred_pose, 3, "projection_loss");
  const std::size_t k = pred_pose.rows();
  if (keypoints.visible.size() != k) throw DimensionError("projection_loss: keypoint count differs from prediction");
  const Tensor& pv = pred_pose.value();
  std::vector<char> mask(k, 0);
  Tensor target({k, 2});
  bool behind = false;
  for (std::size_t j = 0; j < k; ++j) {
    const double z = calib.to_camera(Eigen::Vector3d(pv[3 * j], pv[3 * j + 1], pv[3 * j + 2])).z();
    const bool front = z > kMinDepth;
    behind = behind || (keypoints.visible[j] && !front);
    mask[j] = keypoints.visible[j] && front;
    if (!mask[j]) continue;
    target[2 * j] = keypoints.joints(static_cast<Eigen::Index>(j), 0);
    target[2 * j + 1] = keypoints.joints(static_cast<Eigen::Index>(j), 1);
  }
  if (behind) log_warning("projection_loss: predicted joint behind the camera masked");
  Var diff = ad::sub(ad::project(pred_pose, calib), pred_pose.tape->constant(std::move(target)));
  return masked_mean_norm(diff, mask, "projection_loss");
}

Var chamfer_agu_loss(Var pred_pose, const Points3& cloud, const SkeletonSpec& spec, std::size_t samples_per_bone) {
  check_pose(pred_pose, 3, "chamfer_agu_loss");
  if (cloud.rows() == 0) throw InvalidInput("chamfer_agu_loss: empty point cloud");
  if (pred_pose.rows() != spec.joint_count()) throw ContractError("chamfer_agu_loss: skeleton mismatch");
  Tape& tape = *pred_pose.tape;
  Var interp = tape.constant(Tensor::from_eigen(interpolation_matrix(spec, samples_per_bone)));
  Var augmented = ad::matmul(interp, pred_pose);
  return ad::chamfer(tape.constant(to_tensor(cloud)), augmented);
}

}  // namespace fusionpose
