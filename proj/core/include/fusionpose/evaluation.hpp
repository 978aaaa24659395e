#pragma once

#include "fusionpose/metrics.hpp"
#include "fusionpose/model.hpp"
#include "fusionpose/samples.hpp"
#include "fusionpose/sequence_io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fusionpose {

struct PosePrediction {
  int track_id = 0;
  int frame = 0;
  const InstanceFrame* instance = nullptr;
  Points3 pose;  // K x 3, world frame
};

// One prediction per frame covered by at least one window, taken from the
// first window (in start order) that contains it. Frames are encoded once
// per track. Ordered by track, then frame.
std::vector<PosePrediction> predict_sequence(const Model& model, const PreparedSequence& data);

// Ground truth as predictions for the same frames predict_sequence covers.
std::vector<PosePrediction> ground_truth_predictions(const PreparedSequence& data, const SequenceData& source);

// Mean root-relative ground-truth pose over every person and frame.
Points3 mean_root_relative_pose(const SequenceData& source, const SkeletonSpec& spec);
// The mean pose anchored at each instance's 3D crop-box center.
std::vector<PosePrediction> static_predictions(const PreparedSequence& data, const Points3& mean_pose);

// Compares predictions to ground truth (the only place GT is read).
MetricReport evaluate_predictions(const std::vector<PosePrediction>& predictions, const SequenceData& source,
                                  const std::string& split, const SkeletonSpec& spec,
                                  std::size_t samples_per_bone = 3);

// `track_id,frame,joint,x,y,z` with %.17g so a re-read is exact.
void write_pose_csv(const std::filesystem::path& file, const std::vector<PosePrediction>& predictions);
std::vector<PosePrediction> read_pose_csv(const std::filesystem::path& file);

}  // namespace fusionpose
