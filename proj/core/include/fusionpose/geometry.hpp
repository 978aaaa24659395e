#pragma once

#include "fusionpose/calibration.hpp"
#include "fusionpose/skeleton.hpp"
#include "fusionpose/tensor.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fusionpose {

struct PointCloud {
  Points3 points;
  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  bool empty() const { return points.rows() == 0; }
};

inline constexpr std::size_t kDefaultPointBudget = 256;
inline constexpr std::size_t kDefaultSamplesPerBone = 3;

// Exactly n points. Farthest-point sampling seeded at the point nearest the
// centroid when the cloud has at least n points, cyclic repetition otherwise.
// Throws InvalidInput on an empty cloud.
PointCloud downsample(const PointCloud& cloud, std::size_t n = kDefaultPointBudget);

// Joints followed by s evenly spaced points strictly inside every bone, at
// parameters j/(s+1), j = 1..s; 21 + 20 s rows for the standard skeleton.
Points3 interpolate_skeleton(const Points3& joints, const SkeletonSpec& spec,
                             std::size_t samples_per_bone = kDefaultSamplesPerBone);
// The same map as a (K + B s) x K matrix, so it can be applied to tape values.
RowMatrix interpolation_matrix(const SkeletonSpec& spec, std::size_t samples_per_bone);

struct Box2D {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() * height(); }
  bool well_formed() const { return u_min < u_max && v_min < v_max; }
  bool contains(const Box2D& other) const {
    return other.u_min >= u_min && other.v_min >= v_min && other.u_max <= u_max &&
           other.v_max <= v_max;
  }
  bool operator==(const Box2D&) const = default;
};

double iou(const Box2D& a, const Box2D& b);

// Box with a yaw rotation about the world z axis.
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;

  bool well_formed() const { return (size.array() > 0.0).all(); }
  bool contains(const Eigen::Vector3d& p) const;
  std::array<Eigen::Vector3d, 8> corners() const;
  bool operator==(const Box3D&) const = default;
};

// Points inside the box (boundary inclusive). Throws EmptyCropError when none.
PointCloud crop_points(const PointCloud& cloud, const Box3D& box);

// Channels-last float raster.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c)
      : height(h), width(w), channels(c), data(h * w * c, 0.0f) {}
  float& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * width + c) * channels + ch]; }
  float at(std::size_t r, std::size_t c, std::size_t ch) const {
    return data[(r * width + c) * channels + ch];
  }
  bool operator==(const Image&) const = default;
};

// Bilinear resampling of the box region to out_h x out_w; pixels outside the
// source raster read as zero. Returns [(out_h*out_w) x channels].
Tensor crop_image(const Image& image, const Box2D& box, std::size_t out_h, std::size_t out_w);

// Pixel position normalized to the box: (0,0) top-left corner, (1,1) bottom-right.
Eigen::Vector2d normalize_in_box(const Eigen::Vector2d& pixel, const Box2D& box);

Tensor to_tensor(const Points3& points);
Points3 to_points(const Tensor& t);

}  // namespace fusionpose
