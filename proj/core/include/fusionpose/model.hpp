#pragma once

#include "fusionpose/nn.hpp"
#include "fusionpose/parameter_store.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fusionpose {

enum class FusionVariant { ipa, point_rgb, pixel, local, global };

std::string to_string(FusionVariant v);
// Accepts ipa, point_rgb, pixel, local, global. Throws ConfigError otherwise.
FusionVariant parse_fusion_variant(const std::string& name);

struct ModelConfig {
  std::size_t width = 256;          // per-point / per-token feature width
  std::size_t points = 256;         // N
  std::size_t joints = 21;          // K
  std::size_t window = 4;           // T
  std::size_t image_height = 64;    // H
  std::size_t image_width = 64;     // W
  std::size_t feature_dim = 64;     // C
  std::size_t gru_hidden = 128;     // per direction
  std::size_t head_hidden = 128;
  std::size_t ffn_hidden = 512;
  std::size_t baseline_k = 32;      // image feature width appended by the baselines
  FusionVariant fusion = FusionVariant::ipa;

  // Throws ConfigError naming the field.
  void validate() const;
};

// One preprocessed frame of one instance.
struct FrameInput {
  Tensor points;                     // N x 3, box-centered, meters
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // 3D crop-box center, world frame
  Tensor image;                      // (H*W) x 3, channels-last crop
  // Per point: projected pixel normalized to the 2D crop box ((0,0) top-left,
  // (1,1) bottom-right); invalid when behind the camera.
  std::vector<Eigen::Vector2d> point_uv;
  std::vector<char> point_uv_valid;
};

// Bilinear lookup of a grid_h x grid_w channels-last map at normalized
// positions; positions outside the unit square (or invalid) read zero.
ad::RowGather bilinear_gather(const std::vector<Eigen::Vector2d>& uv, const std::vector<char>& valid,
                              std::size_t grid_h, std::size_t grid_w);

struct ImageFeatures {
  Var map;     // conv output before flattening, (H/8 * W/8) x width
  Var tokens;  // f_i
};

struct FrameOutput {
  Var motion;       // K x 2, pixels
  Var positions;    // K x 3, world (offsets plus crop-box center)
  Var features;     // K x C
  Var final_pose;   // K x 3, world
};

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // p -> f_p = LN(p + SA(p)). Input N x 3 (or N x (3 + extra) for the
  // baselines that append per-point image values).
  Var encode_points(Tape& tape, Var points) const;
  // Per-point encoder features before self-attention, plus their max pool.
  Var point_encoder(Tape& tape, Var points) const;
  ImageFeatures encode_image(Tape& tape, Var image) const;
  // f_fusion from f_p and f_i; writes the N x M affinity when requested.
  Var ipa_fuse(Tape& tape, Var fp, Var fi, Var* affinity = nullptr) const;
  // Configured fusion variant for one frame, N x width.
  Var fuse_frame(Tape& tape, const FrameInput& frame) const;
  // One window of fused features and the matching crop-box centers.
  std::vector<FrameOutput> temporal_estimate(Tape& tape, const std::vector<Var>& fused,
                                             const std::vector<Eigen::Vector3d>& centers) const;
  std::vector<FrameOutput> forward_window(Tape& tape, const std::vector<const FrameInput*>& frames) const;

 private:
  Var baseline_tail(Tape& tape, Var x) const;
  Var point_lookup(const FrameInput& frame, Var feature_map) const;

  ModelConfig config_;
  ParameterStore params_;
};

}  // namespace fusionpose
