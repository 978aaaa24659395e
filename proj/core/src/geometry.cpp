#include "fusionpose/geometry.hpp"

#include "fusionpose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusionpose {

PointCloud downsample(const PointCloud& cloud, std::size_t n) {
  if (cloud.empty()) throw InvalidInput("downsample: empty point cloud");
  if (n == 0) throw InvalidInput("downsample: target size must be positive");
  const std::size_t m = cloud.size();
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(n), 3);
  if (m < n) {
    for (std::size_t i = 0; i < n; ++i) out.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(static_cast<Eigen::Index>(i % m));
    return out;
  }
  const Eigen::RowVector3d centroid = cloud.points.colwise().mean();
  std::size_t current = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double d = (cloud.points.row(static_cast<Eigen::Index>(i)) - centroid).squaredNorm();
    if (d < best) {
      best = d;
      current = i;
    }
  }
  std::vector<double> dist(m, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < n; ++k) {
    out.points.row(static_cast<Eigen::Index>(k)) = cloud.points.row(static_cast<Eigen::Index>(current));
    const Eigen::RowVector3d p = cloud.points.row(static_cast<Eigen::Index>(current));
    std::size_t next = 0;
    double far = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      dist[i] = std::min(dist[i], (cloud.points.row(static_cast<Eigen::Index>(i)) - p).squaredNorm());
      if (dist[i] > far) {
        far = dist[i];
        next = i;
      }
    }
    current = next;
  }
  return out;
}

RowMatrix interpolation_matrix(const SkeletonSpec& spec, std::size_t samples_per_bone) {
  const std::size_t k = spec.joint_count();
  const std::size_t rows = k + spec.bones.size() * samples_per_bone;
  RowMatrix w = RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
  std::size_t r = k;
  for (auto [a, b] : spec.bones) {
    for (std::size_t j = 1; j <= samples_per_bone; ++j, ++r) {
      const double t = static_cast<double>(j) / static_cast<double>(samples_per_bone + 1);
      w(static_cast<Eigen::Index>(r), a) = 1.0 - t;
      w(static_cast<Eigen::Index>(r), b) = t;
    }
  }
  return w;
}

Points3 interpolate_skeleton(const Points3& joints, const SkeletonSpec& spec,
                             std::size_t samples_per_bone) {
  if (static_cast<std::size_t>(joints.rows()) != spec.joint_count()) {
    throw DimensionError("interpolate_skeleton: pose has " + std::to_string(joints.rows()) +
                         " joints, skeleton has " + std::to_string(spec.joint_count()));
  }
  return interpolation_matrix(spec, samples_per_bone) * joints;
}

double iou(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

bool Box3D::contains(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d d = p - center;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= 0.5 * size.x() && std::abs(ly) <= 0.5 * size.y() &&
         std::abs(d.z()) <= 0.5 * size.z();
}

std::array<Eigen::Vector3d, 8> Box3D::corners() const {
  std::array<Eigen::Vector3d, 8> out;
  const double c = std::cos(yaw), s = std::sin(yaw);
  int i = 0;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        const double lx = 0.5 * sx * size.x();
        const double ly = 0.5 * sy * size.y();
        out[static_cast<std::size_t>(i++)] =
            center + Eigen::Vector3d(c * lx - s * ly, s * lx + c * ly, 0.5 * sz * size.z());
      }
    }
  }
  return out;
}

PointCloud crop_points(const PointCloud& cloud, const Box3D& box) {
  if (!box.well_formed()) throw InvalidInput("crop_points: box extents must be positive");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    if (box.contains(cloud.points.row(i).transpose())) keep.push_back(i);
  }
  if (keep.empty()) throw EmptyCropError("crop_points: no points inside the box");
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t k = 0; k < keep.size(); ++k) out.points.row(static_cast<Eigen::Index>(k)) = cloud.points.row(keep[k]);
  return out;
}

Tensor crop_image(const Image& image, const Box2D& box, std::size_t out_h, std::size_t out_w) {
  if (!box.well_formed()) throw InvalidInput("crop_image: box extents must be positive");
  if (out_h == 0 || out_w == 0 || image.channels == 0) throw InvalidInput("crop_image: empty output");
  Tensor out({out_h * out_w, image.channels}, 0.0);
  auto sample = [&](long r, long c, std::size_t ch) -> double {
    if (r < 0 || c < 0 || r >= static_cast<long>(image.height) || c >= static_cast<long>(image.width)) return 0.0;
    return image.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch);
  };
  const double sx = box.width() / static_cast<double>(out_w);
  const double sy = box.height() / static_cast<double>(out_h);
  for (std::size_t r = 0; r < out_h; ++r) {
    // Continuous pixel coordinates: pixel i spans [i, i+1), its center is i + 0.5.
    const double y = box.v_min + (static_cast<double>(r) + 0.5) * sy - 0.5;
    const double y0 = std::floor(y);
    const double fy = y - y0;
    for (std::size_t c = 0; c < out_w; ++c) {
      const double x = box.u_min + (static_cast<double>(c) + 0.5) * sx - 0.5;
      const double x0 = std::floor(x);
      const double fx = x - x0;
      const long iy = static_cast<long>(y0), ix = static_cast<long>(x0);
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        const double v = (1 - fy) * ((1 - fx) * sample(iy, ix, ch) + fx * sample(iy, ix + 1, ch)) +
                         fy * ((1 - fx) * sample(iy + 1, ix, ch) + fx * sample(iy + 1, ix + 1, ch));
        out[(r * out_w + c) * image.channels + ch] = v;
      }
    }
  }
  return out;
}

Eigen::Vector2d normalize_in_box(const Eigen::Vector2d& pixel, const Box2D& box) {
  return {(pixel.x() - box.u_min) / box.width(), (pixel.y() - box.v_min) / box.height()};
}

Tensor to_tensor(const Points3& points) {
  Tensor t({static_cast<std::size_t>(points.rows()), 3});
  t.map() = points;
  return t;
}

Points3 to_points(const Tensor& t) {
  if (t.cols() != 3) throw DimensionError("to_points: expected [n x 3], got " + shape_string(t.shape()));
  return t.map();
}

}  // namespace fusionpose
