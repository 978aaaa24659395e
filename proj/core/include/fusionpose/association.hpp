#pragma once

#include "fusionpose/calibration.hpp"
#include "fusionpose/geometry.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace fusionpose {

struct Detection2D {
  Box2D box;
  double score = 1.0;
  bool operator==(const Detection2D&) const = default;
};

struct Detection3D {
  Box3D box;
  bool operator==(const Detection3D&) const = default;
};

struct AssociationConfig {
  double iou_threshold = 0.3;
  double gate_distance = 1.0;  // meters
  int max_misses = 3;
  std::size_t window = 4;      // T
};

struct PairingResult {
  std::vector<std::pair<int, int>> pairs;  // (index2d, index3d)
  std::vector<double> ious;                // per pair
  std::vector<int> unmatched_2d;
  std::vector<int> unmatched_3d;
};

// Axis-aligned pixel rectangle around the valid projected corners of a 3D box;
// empty when every corner is behind the camera.
std::optional<Box2D> projected_rectangle(const Box3D& box, const Calibration& calib);

// Cross-modal pairing: cost 1 - IoU between each 2D box and each projected 3D
// box, optimal assignment, pairs below the IoU threshold rejected.
PairingResult pair_2d_3d(const std::vector<Detection2D>& dets2d,
                         const std::vector<Detection3D>& dets3d, const Calibration& calib,
                         double iou_threshold = 0.3);

// One paired detection as seen by the tracker. `index2d`/`index3d` refer to
// the frame's detection lists.
struct TrackObservation {
  int index2d = -1;
  int index3d = -1;
  Detection2D det2d;
  Detection3D det3d;
};

struct Track {
  int id = 0;
  int first_frame = 0;
  // history[k] is frame first_frame + k; nullopt where the track was missed.
  std::vector<std::optional<TrackObservation>> history;
  int age = 0;
  int misses = 0;
  bool active = true;

  int last_frame() const { return first_frame + static_cast<int>(history.size()) - 1; }
  const std::optional<TrackObservation>& at(int frame) const;
};

// Frame-by-frame tracker. Cost is the distance between 3D box centers.
class Tracker {
 public:
  explicit Tracker(AssociationConfig config = {}) : config_(config) {}

  // Must be called once per frame, in frame order, starting at frame 0.
  void step(const std::vector<TrackObservation>& detections);

  int frames_seen() const { return frame_; }
  const std::vector<Track>& active_tracks() const { return active_; }
  // Every track ever created, retired first, then active, each sorted by id.
  std::vector<Track> all_tracks() const;

 private:
  AssociationConfig config_;
  int frame_ = 0;
  int next_id_ = 0;
  std::vector<Track> active_;
  std::vector<Track> retired_;
};

// One T-frame window of a tracked instance.
struct InstanceSequence {
  int track_id = 0;
  int start_frame = 0;
  std::vector<TrackObservation> frames;
};

// Stride-1 windows of T consecutive frames with both modalities present.
std::vector<InstanceSequence> build_sequences(const std::vector<Track>& tracks, std::size_t window = 4);

}  // namespace fusionpose
