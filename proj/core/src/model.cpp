#include "fusionpose/model.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/rng.hpp"

#include <algorithm>
#include <cmath>

namespace fusionpose {
namespace {

using namespace nn;

constexpr std::size_t kConv0 = 32;
constexpr std::size_t kConv1 = 64;
constexpr std::size_t kEmbed = 16;        // per-joint embedding before the feature MLP
constexpr std::size_t kJointHidden = 64;  // feature and final-combination MLPs
constexpr double kMotionScale = 10.0;     // motion head output in units of 10 px

std::size_t point_input_width(const ModelConfig& c) {
  switch (c.fusion) {
    case FusionVariant::point_rgb: return 6;
    case FusionVariant::pixel: return 3 + c.baseline_k;
    default: return 3;
  }
}

bool uses_image_tokens(FusionVariant v) { return v == FusionVariant::ipa || v == FusionVariant::global; }

ad::ConvGeometry conv_stage(std::size_t h, std::size_t w, std::size_t c) {
  ad::ConvGeometry g;
  g.height = h;
  g.width = w;
  g.channels = c;
  g.kernel = 3;
  g.stride = 2;
  g.pad = 1;
  return g;
}

}  // namespace

std::string to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::ipa: return "ipa";
    case FusionVariant::point_rgb: return "point_rgb";
    case FusionVariant::pixel: return "pixel";
    case FusionVariant::local: return "local";
    case FusionVariant::global: return "global";
  }
  return "unknown";
}

FusionVariant parse_fusion_variant(const std::string& name) {
  for (FusionVariant v : {FusionVariant::ipa, FusionVariant::point_rgb, FusionVariant::pixel,
                          FusionVariant::local, FusionVariant::global}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("model.fusion: unknown variant '" + name + "'");
}

void ModelConfig::validate() const {
  if (width == 0) throw ConfigError("model.width: must be positive");
  if (points == 0) throw ConfigError("model.points: must be positive");
  if (joints == 0) throw ConfigError("model.joints: must be positive");
  if (window < 2) throw ConfigError("model.window: must be at least 2");
  if (image_height == 0 || image_width == 0 || image_height % 8 != 0 || image_width % 8 != 0) {
    throw ConfigError("model.image: height and width must be positive multiples of 8");
  }
  if (feature_dim == 0 || gru_hidden == 0 || head_hidden == 0 || ffn_hidden == 0 || baseline_k == 0) {
    throw ConfigError("model: hidden sizes must be positive");
  }
}

ad::RowGather bilinear_gather(const std::vector<Eigen::Vector2d>& uv, const std::vector<char>& valid,
                              std::size_t grid_h, std::size_t grid_w) {
  ad::RowGather g;
  g.indices.resize(uv.size());
  g.weights.resize(uv.size());
  for (std::size_t i = 0; i < uv.size(); ++i) {
    const double u = uv[i].x(), v = uv[i].y();
    if (!valid[i] || !(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) continue;
    const double x = u * static_cast<double>(grid_w) - 0.5;
    const double y = v * static_cast<double>(grid_h) - 0.5;
    const double x0 = std::floor(x), y0 = std::floor(y);
    const double fx = x - x0, fy = y - y0;
    auto clampi = [](double p, std::size_t n) {
      return static_cast<std::size_t>(std::clamp(p, 0.0, static_cast<double>(n - 1)));
    };
    const std::size_t c0 = clampi(x0, grid_w), c1 = clampi(x0 + 1, grid_w);
    const std::size_t r0 = clampi(y0, grid_h), r1 = clampi(y0 + 1, grid_h);
    g.indices[i] = {r0 * grid_w + c0, r0 * grid_w + c1, r1 * grid_w + c0, r1 * grid_w + c1};
    g.weights[i] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  }
  return g;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const ModelConfig& c = config_;
  const std::size_t w = c.width;
  auto& s = params_;

  init_mlp(s, "point.mlp", {point_input_width(c), 64, 128, w}, seed);
  init_linear(s, "point.reduce", 2 * w, w, seed);
  init_attention(s, "point.attn", w, seed);
  init_layer_norm(s, "point.ln", w);

  const bool needs_image = c.fusion != FusionVariant::point_rgb;
  if (needs_image) {
    init_conv(s, "image.conv0", 3, 3, kConv0, seed);
    init_conv(s, "image.conv1", 3, kConv0, kConv1, seed);
    init_conv(s, "image.conv2", 3, kConv1, w, seed);
  }
  if (uses_image_tokens(c.fusion)) {
    init_mlp(s, "image.mlp", {w, w, w}, seed);
    init_attention(s, "image.attn", w, seed);
    init_layer_norm(s, "image.ln", w);
  }

  switch (c.fusion) {
    case FusionVariant::ipa:
      init_linear(s, "fuse.query", w, w, seed);
      init_linear(s, "fuse.key", w, w, seed);
      init_linear(s, "fuse.value", w, w, seed);
      init_mlp(s, "fuse.out", {2 * w, w, w}, seed);
      init_layer_norm(s, "fuse.ln_attention", w);
      init_mlp(s, "fuse.ffn", {w, c.ffn_hidden, w}, seed);
      init_layer_norm(s, "fuse.ln_fusion", w);
      break;
    case FusionVariant::pixel:
      init_linear(s, "baseline.reduce", w, c.baseline_k, seed);
      break;
    case FusionVariant::local:
      init_linear(s, "baseline.reduce", w, c.baseline_k, seed);
      init_linear(s, "baseline.mix", w + c.baseline_k, w, seed);
      break;
    case FusionVariant::global:
      init_linear(s, "baseline.mix", 3 * w, w, seed);
      break;
    case FusionVariant::point_rgb:
      break;
  }
  if (c.fusion != FusionVariant::ipa) {
    init_layer_norm(s, "baseline.ln_attention", w);
    init_mlp(s, "baseline.ffn", {w, c.ffn_hidden, w}, seed);
    init_layer_norm(s, "baseline.ln_fusion", w);
  }

  init_gru(s, "temporal.forward", w, c.gru_hidden, seed);
  init_gru(s, "temporal.backward", w, c.gru_hidden, seed);
  const std::size_t h2 = 2 * c.gru_hidden;
  init_mlp(s, "head.motion", {h2, c.head_hidden, c.joints * 2}, seed);
  init_mlp(s, "head.position", {h2, c.head_hidden, c.joints * 3}, seed);
  init_mlp(s, "head.embed", {h2, c.head_hidden, c.joints * kEmbed}, seed);
  init_mlp(s, "head.feature", {3 + kEmbed, kJointHidden, c.feature_dim}, seed);
  init_mlp(s, "head.final", {c.feature_dim + 3, kJointHidden, 3}, seed);
}

Var Model::point_encoder(Tape& tape, Var points) const {
  if (points.rows() != config_.points) {
    throw DimensionError("encode_points: expected " + std::to_string(config_.points) + " points, got " +
                         std::to_string(points.rows()));
  }
  if (points.cols() != point_input_width(config_)) {
    throw DimensionError("encode_points: expected " + std::to_string(point_input_width(config_)) +
                         " input columns, got " + std::to_string(points.cols()));
  }
  Var x = mlp(tape, params_, "point.mlp", points, 3);
  Var pooled = ad::repeat_rows(ad::max_rows(x), x.rows());
  return linear(tape, params_, "point.reduce", ad::concat_cols({x, pooled}));
}

Var Model::encode_points(Tape& tape, Var points) const {
  Var p = point_encoder(tape, points);
  return layer_norm(tape, params_, "point.ln", ad::add(p, self_attention(tape, params_, "point.attn", p)));
}

ImageFeatures Model::encode_image(Tape& tape, Var image) const {
  const std::size_t h = config_.image_height, w = config_.image_width;
  if (image.rows() != h * w || image.cols() != 3) {
    throw DimensionError("encode_image: expected " + std::to_string(h * w) + " x 3 crop, got " +
                         shape_string(image.shape()));
  }
  Var x = ad::relu(conv2d(tape, params_, "image.conv0", image, conv_stage(h, w, 3)));
  x = ad::relu(conv2d(tape, params_, "image.conv1", x, conv_stage(h / 2, w / 2, kConv0)));
  x = ad::relu(conv2d(tape, params_, "image.conv2", x, conv_stage(h / 4, w / 4, kConv1)));
  ImageFeatures out;
  out.map = x;
  if (uses_image_tokens(config_.fusion)) {
    Var i = mlp(tape, params_, "image.mlp", x, 2);
    out.tokens = layer_norm(tape, params_, "image.ln", ad::add(i, self_attention(tape, params_, "image.attn", i)));
  }
  return out;
}

Var Model::ipa_fuse(Tape& tape, Var fp, Var fi, Var* affinity) const {
  if (fp.cols() != fi.cols() || fp.cols() != config_.width) {
    throw DimensionError("ipa_fuse: feature widths " + shape_string(fp.shape()) + " and " +
                         shape_string(fi.shape()) + " differ");
  }
  Var q = linear(tape, params_, "fuse.query", fp);
  Var k = linear(tape, params_, "fuse.key", fi);
  Var v = linear(tape, params_, "fuse.value", fi);
  Var a = attention_weights(q, k);
  if (affinity) *affinity = a;
  Var out = mlp(tape, params_, "fuse.out", ad::concat_cols({ad::matmul(a, v), q}), 2);
  Var att = layer_norm(tape, params_, "fuse.ln_attention", ad::add(fp, out));
  Var ffn = mlp(tape, params_, "fuse.ffn", att, 2);
  return layer_norm(tape, params_, "fuse.ln_fusion", ad::add(att, ffn));
}

Var Model::baseline_tail(Tape& tape, Var x) const {
  Var att = layer_norm(tape, params_, "baseline.ln_attention", x);
  return layer_norm(tape, params_, "baseline.ln_fusion", ad::add(att, mlp(tape, params_, "baseline.ffn", att, 2)));
}

Var Model::point_lookup(const FrameInput& frame, Var feature_map) const {
  const std::size_t gh = config_.image_height / 8, gw = config_.image_width / 8;
  return ad::gather_rows(feature_map, bilinear_gather(frame.point_uv, frame.point_uv_valid, gh, gw));
}

Var Model::fuse_frame(Tape& tape, const FrameInput& frame) const {
  if (frame.point_uv.size() != config_.points || frame.point_uv_valid.size() != config_.points) {
    throw DimensionError("fuse_frame: one projected position per point required");
  }
  Var xyz = tape.constant(frame.points);
  switch (config_.fusion) {
    case FusionVariant::ipa: {
      Var fp = encode_points(tape, xyz);
      Var fi = encode_image(tape, tape.constant(frame.image)).tokens;
      return ipa_fuse(tape, fp, fi);
    }
    case FusionVariant::point_rgb: {
      const auto g = bilinear_gather(frame.point_uv, frame.point_uv_valid, config_.image_height,
                                     config_.image_width);
      Var rgb = ad::gather_rows(tape.constant(frame.image), g);
      return baseline_tail(tape, encode_points(tape, ad::concat_cols({xyz, rgb})));
    }
    case FusionVariant::pixel: {
      Var map = encode_image(tape, tape.constant(frame.image)).map;
      Var feat = linear(tape, params_, "baseline.reduce", point_lookup(frame, map));
      return baseline_tail(tape, encode_points(tape, ad::concat_cols({xyz, feat})));
    }
    case FusionVariant::local: {
      Var fp = encode_points(tape, xyz);
      Var map = encode_image(tape, tape.constant(frame.image)).map;
      Var feat = linear(tape, params_, "baseline.reduce", point_lookup(frame, map));
      return baseline_tail(tape, linear(tape, params_, "baseline.mix", ad::concat_cols({fp, feat})));
    }
    case FusionVariant::global: {
      Var fp = encode_points(tape, xyz);
      Var fi = encode_image(tape, tape.constant(frame.image)).tokens;
      Var g = ad::concat_cols({ad::max_rows(fp), ad::mean_rows(fi)});
      Var x = ad::concat_cols({fp, ad::repeat_rows(g, fp.rows())});
      return baseline_tail(tape, linear(tape, params_, "baseline.mix", x));
    }
  }
  throw ContractError("fuse_frame: unhandled fusion variant");
}

std::vector<FrameOutput> Model::temporal_estimate(Tape& tape, const std::vector<Var>& fused,
                                                  const std::vector<Eigen::Vector3d>& centers) const {
  const std::size_t t_len = config_.window;
  if (fused.size() != t_len || centers.size() != t_len) {
    throw DimensionError("temporal_estimate: expected " + std::to_string(t_len) + " frames, got " +
                         std::to_string(fused.size()));
  }
  std::vector<Var> pooled;
  for (Var f : fused) {
    if (f.cols() != config_.width) throw DimensionError("temporal_estimate: fused width " + shape_string(f.shape()));
    pooled.push_back(ad::max_rows(f));
  }
  const Tensor zero({1, config_.gru_hidden});
  std::vector<Var> fwd(t_len), bwd(t_len);
  Var h = tape.constant(zero);
  for (std::size_t t = 0; t < t_len; ++t) fwd[t] = h = gru_cell(tape, params_, "temporal.forward", h, pooled[t]);
  h = tape.constant(zero);
  for (std::size_t t = t_len; t-- > 0;) bwd[t] = h = gru_cell(tape, params_, "temporal.backward", h, pooled[t]);

  const std::size_t k = config_.joints;
  std::vector<FrameOutput> out(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    Var state = ad::concat_cols({fwd[t], bwd[t]});
    FrameOutput& o = out[t];
    o.motion = ad::scale(ad::reshape(mlp(tape, params_, "head.motion", state, 2), {k, 2}), kMotionScale);
    Var offsets = ad::reshape(mlp(tape, params_, "head.position", state, 2), {k, 3});
    Tensor c({1, 3});
    for (std::size_t d = 0; d < 3; ++d) c[d] = centers[t][static_cast<Eigen::Index>(d)];
    o.positions = ad::add_row(offsets, tape.constant(std::move(c)));
    Var embed = ad::reshape(mlp(tape, params_, "head.embed", state, 2), {k, kEmbed});
    o.features = mlp(tape, params_, "head.feature", ad::concat_cols({offsets, embed}), 2);
    Var residual = mlp(tape, params_, "head.final", ad::concat_cols({o.features, offsets}), 2);
    o.final_pose = ad::add(o.positions, residual);
  }
  return out;
}

std::vector<FrameOutput> Model::forward_window(Tape& tape, const std::vector<const FrameInput*>& frames) const {
  std::vector<Var> fused;
  std::vector<Eigen::Vector3d> centers;
  for (const FrameInput* f : frames) {
    fused.push_back(fuse_frame(tape, *f));
    centers.push_back(f->center);
  }
  return temporal_estimate(tape, fused, centers);
}

}  // namespace fusionpose
