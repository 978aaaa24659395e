#include "fusionpose/sensors.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fusionpose {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Capsule {
  Eigen::Vector3d a, b;
  double radius;
};

struct BodyCapsules {
  std::vector<Capsule> capsules;
  Eigen::Vector3d center;
  double bound;  // bounding sphere radius
};

std::vector<BodyCapsules> capsules_of(const std::vector<PersonState>& persons) {
  const auto& bones = SkeletonSpec::standard().bones;
  std::vector<BodyCapsules> out;
  for (const PersonState& p : persons) {
    BodyCapsules bc;
    for (std::size_t i = 0; i < bones.size(); ++i) {
      bc.capsules.push_back({p.pose.joints.row(bones[i].first).transpose(),
                             p.pose.joints.row(bones[i].second).transpose(), p.body.radius(i)});
    }
    bc.center = p.pose.joints.colwise().mean().transpose();
    bc.bound = 0.0;
    for (const Capsule& c : bc.capsules) {
      bc.bound = std::max({bc.bound, (c.a - bc.center).norm() + c.radius, (c.b - bc.center).norm() + c.radius});
    }
    out.push_back(std::move(bc));
  }
  return out;
}

bool ray_hits_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& c, double r) {
  const Eigen::Vector3d oc = o - c;
  const double b = oc.dot(d);
  const double cc = oc.squaredNorm() - r * r;
  return b * b - cc >= 0.0 && (b <= 0.0 || cc <= 0.0);
}

// Nearest hit over all persons: (distance, person index).
std::optional<std::pair<double, std::size_t>> cast(const std::vector<BodyCapsules>& bodies,
                                                   const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                                   double max_range) {
  std::optional<std::pair<double, std::size_t>> best;
  for (std::size_t p = 0; p < bodies.size(); ++p) {
    if (!ray_hits_sphere(o, d, bodies[p].center, bodies[p].bound)) continue;
    for (const Capsule& c : bodies[p].capsules) {
      auto t = intersect_capsule(o, d, c.a, c.b, c.radius);
      if (t && *t <= max_range && (!best || *t < best->first)) best = std::make_pair(*t, p);
    }
  }
  return best;
}

std::optional<double> intersect_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                       const Eigen::Vector3d& c, double r) {
  const Eigen::Vector3d oc = o - c;
  const double b = oc.dot(d);
  const double h = b * b - (oc.squaredNorm() - r * r);
  if (h < 0.0) return std::nullopt;
  const double s = std::sqrt(h);
  if (-b - s > 0.0) return -b - s;
  if (-b + s > 0.0) return -b + s;
  return std::nullopt;
}

}  // namespace

void LidarConfig::validate() const {
  if (beams < 1) throw InvalidInput("lidar: beams must be >= 1");
  if (!(range_noise_sigma >= 0.0)) throw InvalidInput("lidar: range noise sigma must be >= 0");
  if (!(azimuth_step > 0.0) || !(azimuth_max >= azimuth_min)) throw InvalidInput("lidar: bad azimuth sweep");
  if (!(elevation_max >= elevation_min)) throw InvalidInput("lidar: bad elevation range");
  if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) throw InvalidInput("lidar: drop probability outside [0, 1]");
  if (!(max_range > 0.0)) throw InvalidInput("lidar: max range must be positive");
}

std::size_t LidarConfig::ray_count() const {
  const auto columns = static_cast<std::size_t>(std::floor((azimuth_max - azimuth_min) / azimuth_step + 1e-9)) + 1;
  return columns * static_cast<std::size_t>(beams);
}

std::optional<double> intersect_capsule(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                        const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        double radius) {
  const Eigen::Vector3d ba = b - a;
  const Eigen::Vector3d oa = o - a;
  const double baba = ba.dot(ba);
  std::optional<double> best;
  auto consider = [&](std::optional<double> t) {
    if (t && *t > 0.0 && (!best || *t < *best)) best = t;
  };
  if (baba > 0.0) {
    // Infinite cylinder, restricted to the segment's span.
    const double bard = ba.dot(d);
    const double baoa = ba.dot(oa);
    const double qa = baba - bard * bard;
    const double qb = baba * oa.dot(d) - baoa * bard;
    const double qc = baba * oa.dot(oa) - baoa * baoa - radius * radius * baba;
    if (qa > 1e-12 * baba) {
      const double h = qb * qb - qa * qc;
      if (h >= 0.0) {
        const double s = std::sqrt(h);
        for (double t : {(-qb - s) / qa, (-qb + s) / qa}) {
          const double y = baoa + t * bard;
          if (y > 0.0 && y < baba) consider(t);
        }
      }
    }
  }
  consider(intersect_sphere(o, d, a, radius));
  consider(intersect_sphere(o, d, b, radius));
  return best;
}

LabeledCloud simulate_lidar(const std::vector<PersonState>& persons, const LidarConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  const auto bodies = capsules_of(persons);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto columns = static_cast<int>(std::floor((cfg.azimuth_max - cfg.azimuth_min) / cfg.azimuth_step + 1e-9)) + 1;
  std::vector<Eigen::Vector3d> pts;
  LabeledCloud out;
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  for (int beam = 0; beam < cfg.beams; ++beam) {
    const double el = cfg.beams == 1 ? cfg.elevation_min
                                     : cfg.elevation_min + (cfg.elevation_max - cfg.elevation_min) * beam / (cfg.beams - 1);
    for (int col = 0; col < columns; ++col) {
      const double az = cfg.azimuth_min + col * cfg.azimuth_step;
      const Eigen::Vector3d dir(std::cos(el * kDeg) * std::cos(az * kDeg),
                                std::cos(el * kDeg) * std::sin(az * kDeg), std::sin(el * kDeg));
      const auto hit = cast(bodies, origin, dir, cfg.max_range);
      if (!hit) continue;
      // Draw both variates for every hit so the stream layout is fixed.
      const double n = noise(rng);
      const double u = unit(rng);
      if (u < cfg.drop_probability) continue;
      pts.push_back(origin + (hit->first + cfg.range_noise_sigma * n) * dir);
      out.labels.push_back(static_cast<std::uint16_t>(hit->second));
    }
  }
  out.cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) out.cloud.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return out;
}

double person_hue(std::size_t person) {
  const double h = 0.6180339887498949 * static_cast<double>(person + 1);
  return h - std::floor(h);
}

Image render_raster(const std::vector<PersonState>& persons, const Calibration& calib,
                    std::size_t height, std::size_t width) {
  Image img(height, width, 3);
  std::vector<double> depth(height * width, std::numeric_limits<double>::infinity());
  const auto bodies = capsules_of(persons);
  const Eigen::Vector3d origin = calib.camera_center();
  const Eigen::Matrix3d rt = calib.rotation.transpose();
  for (std::size_t p = 0; p < bodies.size(); ++p) {
    // Pixel window covering the capsule endpoints, padded by the radius.
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    bool any = false;
    for (const auto& c : bodies[p].capsules) {
      for (const Eigen::Vector3d& e : {c.a, c.b}) {
        const Eigen::Vector3d cam = calib.to_camera(e);
        if (cam.z() <= 0.05) continue;
        any = true;
        const double pad_u = calib.fx * c.radius / cam.z() + 1.0;
        const double pad_v = calib.fy * c.radius / cam.z() + 1.0;
        const double u = calib.fx * cam.x() / cam.z() + calib.cx;
        const double v = calib.fy * cam.y() / cam.z() + calib.cy;
        umin = std::min(umin, u - pad_u);
        umax = std::max(umax, u + pad_u);
        vmin = std::min(vmin, v - pad_v);
        vmax = std::max(vmax, v + pad_v);
      }
    }
    if (!any) continue;
    const long c0 = std::max(0L, static_cast<long>(std::floor(umin)));
    const long c1 = std::min(static_cast<long>(width) - 1, static_cast<long>(std::ceil(umax)));
    const long r0 = std::max(0L, static_cast<long>(std::floor(vmin)));
    const long r1 = std::min(static_cast<long>(height) - 1, static_cast<long>(std::ceil(vmax)));
    const std::vector<BodyCapsules> one{bodies[p]};
    for (long r = r0; r <= r1; ++r) {
      for (long c = c0; c <= c1; ++c) {
        const Eigen::Vector3d ray_cam((static_cast<double>(c) + 0.5 - calib.cx) / calib.fx,
                                      (static_cast<double>(r) + 0.5 - calib.cy) / calib.fy, 1.0);
        const Eigen::Vector3d dir = (rt * ray_cam).normalized();
        const auto hit = cast(one, origin, dir, 1e9);
        if (!hit) continue;
        const double z = calib.to_camera(origin + hit->first * dir).z();
        const std::size_t idx = static_cast<std::size_t>(r) * width + static_cast<std::size_t>(c);
        if (z >= depth[idx]) continue;
        depth[idx] = z;
        img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 0) = static_cast<float>(1.0 / z);
        img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 1) = 1.0f;
        img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 2) = static_cast<float>(person_hue(p));
      }
    }
  }
  return img;
}

Pose2D simulate_2d(const Pose3D& pose, const Calibration& calib, double noise_sigma,
                   double drop_prob, std::uint64_t seed) {
  calib.validate();
  const Projection proj = project(pose.joints, calib);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Pose2D out;
  out.joints = proj.pixels;
  out.visible.assign(proj.valid.size(), false);
  for (std::size_t j = 0; j < proj.valid.size(); ++j) {
    const double nu = noise(rng), nv = noise(rng), u = unit(rng);
    const auto row = static_cast<Eigen::Index>(j);
    out.joints(row, 0) += noise_sigma * nu;
    out.joints(row, 1) += noise_sigma * nv;
    out.visible[j] = proj.valid[j] && u >= drop_prob;
  }
  return out;
}

std::vector<SimulatedDetection> simulate_detections(const std::vector<Pose3D>& poses,
                                                    const LabeledCloud& scan,
                                                    const Calibration& calib,
                                                    const DetectionJitter& jitter,
                                                    std::uint64_t seed) {
  std::vector<SimulatedDetection> out(poses.size());
  for (std::size_t p = 0; p < poses.size(); ++p) {
    Rng rng(derive_seed(seed, p));
    std::normal_distribution<double> noise(0.0, 1.0);

    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    std::size_t count = 0;
    for (std::size_t i = 0; i < scan.labels.size(); ++i) {
      if (scan.labels[i] != p) continue;
      const Eigen::Vector3d q = scan.cloud.points.row(static_cast<Eigen::Index>(i)).transpose();
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
      ++count;
    }
    if (count > 0) {
      Detection3D d;
      d.box.center = 0.5 * (lo + hi);
      d.box.size = ((hi - lo) * (1.0 + jitter.inflate_3d)).cwiseMax(0.2);
      for (int k = 0; k < 3; ++k) d.box.center[k] += jitter.center_sigma_3d * noise(rng);
      out[p].det3d = d;
    }

    const Projection proj = project(poses[p].joints, calib);
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    bool any = false;
    for (std::size_t j = 0; j < proj.valid.size(); ++j) {
      if (!proj.valid[j]) continue;
      any = true;
      umin = std::min(umin, proj.pixels(static_cast<Eigen::Index>(j), 0));
      umax = std::max(umax, proj.pixels(static_cast<Eigen::Index>(j), 0));
      vmin = std::min(vmin, proj.pixels(static_cast<Eigen::Index>(j), 1));
      vmax = std::max(vmax, proj.pixels(static_cast<Eigen::Index>(j), 1));
    }
    if (any) {
      const double cu = 0.5 * (umin + umax), cv = 0.5 * (vmin + vmax);
      const double hw = std::max(0.5 * (umax - umin) * (1.0 + jitter.inflate_2d), 1.0);
      const double hh = std::max(0.5 * (vmax - vmin) * (1.0 + jitter.inflate_2d), 1.0);
      Detection2D d;
      d.box = {cu - hw + jitter.edge_sigma_2d * noise(rng), cv - hh + jitter.edge_sigma_2d * noise(rng),
               cu + hw + jitter.edge_sigma_2d * noise(rng), cv + hh + jitter.edge_sigma_2d * noise(rng)};
      if (d.box.well_formed()) out[p].det2d = d;
    }
  }
  return out;
}

PointCloud occlude_points(const PointCloud& cloud, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidInput("occlude_points: fraction must lie in [0, 1)");
  const std::size_t n = cloud.size();
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> removed(n, 0);
  for (std::size_t i = 0; i < drop; ++i) removed[order[i]] = 1;
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(n - drop), 3);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!removed[i]) out.points.row(k++) = cloud.points.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace fusionpose
