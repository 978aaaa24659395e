#pragma once

#include "fusionpose/association.hpp"
#include "fusionpose/losses.hpp"
#include "fusionpose/model.hpp"
#include "fusionpose/parameter_store.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace fusionpose {

enum class EvalMode { model, gt, static_pose };

// Flat `key = value` configuration with dotted keys. Relative paths resolve
// against the directory of the config file.
struct RunConfig {
  std::uint64_t seed = 42;

  // data.*
  std::filesystem::path data_dir = "data";
  std::size_t persons = 3;
  std::size_t train_frames = 200;
  std::size_t val_frames = 100;
  double keypoint_noise = 2.0;
  double joint_drop = 0.05;
  double jitter_3d = 0.05;
  double jitter_2d = 2.0;
  int lidar_beams = 32;
  double lidar_azimuth_step = 0.4;
  double lidar_noise = 0.01;

  ModelConfig model;
  std::size_t samples_per_bone = 3;

  LossWeights loss;
  Adam::Options adam;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;

  AssociationConfig association;

  // train.*
  std::filesystem::path checkpoint = "checkpoints/last.fpck";
  std::filesystem::path train_log = "reports/train_log.csv";
  std::size_t overfit_steps = 0;          // > 0: single-batch overfit mode
  std::size_t max_batches_per_epoch = 0;  // 0 = all
  std::size_t warmup_epochs = 0;

  // eval.*
  EvalMode eval_mode = EvalMode::model;
  std::string eval_split = "val";
  std::filesystem::path metrics_out = "reports/metrics.csv";
  std::filesystem::path breakdown_out = "reports/metrics_by_track.csv";
  double occlusion = 0.0;
  std::size_t point_budget = 0;

  // ablate.*
  std::size_t ablate_epochs = 5;
  std::filesystem::path ablate_dir = "reports";

  // export.*
  std::filesystem::path export_out = "reports/poses.csv";

  // Throws ConfigError naming the field.
  void validate() const;
};

// Raw key/value pairs; later duplicates win. Throws ConfigError on malformed lines.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Applies every key to the defaults; unknown keys and malformed values raise
// ConfigError naming the key. FUSIONPOSE_SEED in the environment overrides `seed`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {},
                           bool apply_environment = true);
RunConfig load_run_config(const std::filesystem::path& file, bool apply_environment = true);

// Key/value text that parses back to the same configuration.
std::string format_run_config(const RunConfig& config);

}  // namespace fusionpose
