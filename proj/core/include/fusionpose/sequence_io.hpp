#pragma once

#include "fusionpose/association.hpp"
#include "fusionpose/calibration.hpp"
#include "fusionpose/geometry.hpp"
#include "fusionpose/gt_guard.hpp"
#include "fusionpose/skeleton.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fusionpose {

// One person slot in one frame. The 2D keypoints belong to the 2D detection;
// the ground-truth pose is only reachable through the guard.
struct PersonRecord {
  Pose2D keypoints;
  Guarded<Pose3D> ground_truth;
  std::optional<Detection2D> det2d;
  std::optional<Detection3D> det3d;

  bool operator==(const PersonRecord&) const = default;
};

struct FrameRecord {
  Points3 points;
  std::vector<std::uint16_t> labels;
  Image raster;
  std::vector<PersonRecord> persons;

  bool operator==(const FrameRecord& other) const {
    return points.rows() == other.points.rows() && points == other.points &&
           labels == other.labels && raster == other.raster && persons == other.persons;
  }
};

struct SequenceData {
  std::size_t person_count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double frame_rate = 10.0;
  Calibration calib;
  std::vector<FrameRecord> frames;

  bool operator==(const SequenceData&) const = default;
};

// Little-endian "FPSEQ1" file:
//   magic, u32 frames, u32 persons, u32 H, u32 W, f64 frame rate,
//   calibration f64 x 16 (fx fy cx cy, R row-major, t),
//   per frame: u64 point count, points (3 x f64 + u16 label), raster f32 H*W*3,
//   per person: 21 x 2 f64, 21 u8 visibility,
//               u8 gt flag [+ 21 x 3 f64],
//               u8 det2d flag [+ 4 f64 box + f64 score],
//               u8 det3d flag [+ 3 f64 center + 3 f64 size + f64 yaw].
inline constexpr char kSequenceMagic[6] = {'F', 'P', 'S', 'E', 'Q', '1'};

void write_sequence(const std::filesystem::path& file, const SequenceData& data);

struct ReadOptions {
  // When false the ground-truth bytes are skipped and never materialized.
  bool load_ground_truth = true;
};
SequenceData read_sequence(const std::filesystem::path& file, const ReadOptions& options = {});

// Manifest: one sequence path per line, relative to the manifest's directory.
void write_manifest(const std::filesystem::path& file, const std::vector<std::string>& entries);
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& file);

}  // namespace fusionpose
