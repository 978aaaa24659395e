#pragma once

#include "fusionpose/association.hpp"
#include "fusionpose/model.hpp"
#include "fusionpose/sequence_io.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fusionpose {

struct PrepareOptions {
  std::size_t points = 256;        // N fed to the network
  std::size_t point_budget = 0;    // density arm: FPS to this many first, then pad back to N; 0 = N
  double occlusion = 0.0;          // fraction of cropped points dropped before downsampling
  std::size_t image_height = 64;
  std::size_t image_width = 64;
  AssociationConfig association;
  std::uint64_t seed = 0;          // occlusion stream
};

// One tracked person in one frame, ready for the network and the losses.
struct InstanceFrame {
  int frame = 0;
  int person = -1;                 // slot of the paired 3D detection; used only to look up GT
  FrameInput input;
  Pose2D keypoints;
  Points3 cloud;                   // world frame, the unique points before padding
  Detection2D det2d;
  Detection3D det3d;
};

struct PreparedTrack {
  int id = 0;
  int first_frame = 0;
  std::vector<std::optional<InstanceFrame>> frames;  // indexed by frame - first_frame

  const InstanceFrame& at(int frame) const;
};

struct WindowRef {
  std::size_t track = 0;  // index into PreparedSequence::tracks
  int start_frame = 0;
};

struct PreparedSequence {
  Calibration calib;
  std::size_t window = 4;
  std::vector<PreparedTrack> tracks;
  std::vector<WindowRef> windows;  // track order, then start frame

  std::vector<const InstanceFrame*> window_frames(const WindowRef& w) const;
};

// Pairing, tracking, cropping and resampling for a whole sequence. Instances
// whose 3D crop is empty are dropped for that frame before tracking.
PreparedSequence prepare_sequence(const SequenceData& data, const PrepareOptions& options);

// Cropped, occluded, downsampled and padded cloud as used by prepare_sequence.
struct PreparedCloud {
  Points3 unique;  // after occlusion and downsampling to the budget
  Points3 padded;  // N rows
};
PreparedCloud prepare_cloud(const Points3& crop, const PrepareOptions& options, std::uint64_t seed);

}  // namespace fusionpose
