#pragma once

#include "fusionpose/body.hpp"
#include "fusionpose/sensors.hpp"
#include "fusionpose/sequence_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fusionpose {

struct PersonSpec {
  BodyModel body;
  MotionScript motion;
};

struct SceneConfig {
  std::vector<PersonSpec> persons;
  std::size_t frame_count = 200;
  double frame_rate = 10.0;
  Calibration calib;
  std::size_t image_height = 144;
  std::size_t image_width = 192;
  LidarConfig lidar;
  double keypoint_noise = 2.0;  // pixels
  double joint_drop = 0.05;
  DetectionJitter jitter;
  std::uint64_t seed = 42;

  // Throws ConfigError naming the offending field.
  void validate(std::size_t window = 4) const;
};

// Camera used by every generated scene: 192 x 144, f = 160 px, looking along +x.
Calibration reference_calibration();

// Persons walking closed loops 6-14 m in front of the sensors, each in its own
// depth lane so the tracker gate separates them.
SceneConfig reference_scene(std::uint64_t seed, std::size_t persons = 3, std::size_t frames = 200);

// Pure function of the config.
SequenceData generate_sequence(const SceneConfig& cfg);

struct DatasetSummary {
  std::vector<std::filesystem::path> train_files;
  std::vector<std::filesystem::path> val_files;
  std::size_t train_frames = 0;
  std::size_t val_frames = 0;
  std::size_t train_instances = 0;  // person records carrying a 3D detection
  std::size_t val_instances = 0;
  std::size_t persons = 0;
};

// Writes train.fpseq / val.fpseq plus train.manifest / val.manifest into dir.
DatasetSummary generate_dataset(const SceneConfig& train, const SceneConfig& val,
                                const std::filesystem::path& dir);

}  // namespace fusionpose
