#include "fusionpose/evaluation.hpp"

#include "fusionpose/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

namespace fusionpose {
namespace {

// (track index, frame) pairs covered by windows, each with its first window.
std::map<std::pair<std::size_t, int>, std::size_t> coverage(const PreparedSequence& data) {
  std::map<std::pair<std::size_t, int>, std::size_t> first;
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    const WindowRef& ref = data.windows[w];
    for (std::size_t k = 0; k < data.window; ++k) {
      first.emplace(std::make_pair(ref.track, ref.start_frame + static_cast<int>(k)), w);
    }
  }
  return first;
}

const Pose3D& gt_of(const SequenceData& source, const InstanceFrame& inst) {
  const auto& rec = source.frames.at(static_cast<std::size_t>(inst.frame)).persons.at(static_cast<std::size_t>(inst.person));
  if (!rec.ground_truth.present()) {
    throw ContractError("no ground truth for person " + std::to_string(inst.person) + " at frame " +
                        std::to_string(inst.frame));
  }
  return rec.ground_truth.get();
}

}  // namespace

std::vector<PosePrediction> predict_sequence(const Model& model, const PreparedSequence& data) {
  const auto first = coverage(data);
  std::vector<PosePrediction> out;
  std::map<const InstanceFrame*, Tensor> fused;  // per-track cache of fused features
  std::size_t current_track = static_cast<std::size_t>(-1);
  for (std::size_t w = 0; w < data.windows.size(); ++w) {
    const WindowRef& ref = data.windows[w];
    if (ref.track != current_track) {
      fused.clear();
      current_track = ref.track;
    }
    const auto frames = data.window_frames(ref);
    Tape tape;
    std::vector<Var> f;
    std::vector<Eigen::Vector3d> centers;
    for (const InstanceFrame* fr : frames) {
      auto it = fused.find(fr);
      if (it == fused.end()) {
        Tape frame_tape;
        it = fused.emplace(fr, model.fuse_frame(frame_tape, fr->input).value()).first;
      }
      f.push_back(tape.constant(it->second));
      centers.push_back(fr->input.center);
    }
    const auto outputs = model.temporal_estimate(tape, f, centers);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const int frame = ref.start_frame + static_cast<int>(k);
      if (first.at({ref.track, frame}) != w) continue;
      out.push_back({data.tracks[ref.track].id, frame, frames[k], to_points(outputs[k].final_pose.value())});
    }
  }
  std::sort(out.begin(), out.end(), [](const PosePrediction& a, const PosePrediction& b) {
    return std::tie(a.track_id, a.frame) < std::tie(b.track_id, b.frame);
  });
  return out;
}

std::vector<PosePrediction> ground_truth_predictions(const PreparedSequence& data, const SequenceData& source) {
  std::vector<PosePrediction> out;
  for (const auto& [key, w] : coverage(data)) {
    const InstanceFrame& inst = data.tracks[key.first].at(key.second);
    out.push_back({data.tracks[key.first].id, key.second, &inst, gt_of(source, inst).joints});
  }
  std::sort(out.begin(), out.end(), [](const PosePrediction& a, const PosePrediction& b) {
    return std::tie(a.track_id, a.frame) < std::tie(b.track_id, b.frame);
  });
  return out;
}

Points3 mean_root_relative_pose(const SequenceData& source, const SkeletonSpec& spec) {
  Points3 sum = Points3::Zero(static_cast<Eigen::Index>(spec.joint_count()), 3);
  std::size_t n = 0;
  for (const FrameRecord& f : source.frames) {
    for (const PersonRecord& p : f.persons) {
      if (!p.ground_truth.present()) continue;
      const Points3& j = p.ground_truth.get().joints;
      sum += j.rowwise() - j.row(spec.root_index);
      ++n;
    }
  }
  if (n == 0) throw InvalidInput("mean_root_relative_pose: no ground truth available");
  return sum / static_cast<double>(n);
}

std::vector<PosePrediction> static_predictions(const PreparedSequence& data, const Points3& mean_pose) {
  std::vector<PosePrediction> out;
  for (const auto& [key, w] : coverage(data)) {
    const InstanceFrame& inst = data.tracks[key.first].at(key.second);
    out.push_back({data.tracks[key.first].id, key.second, &inst,
                   mean_pose.rowwise() + inst.det3d.box.center.transpose()});
  }
  std::sort(out.begin(), out.end(), [](const PosePrediction& a, const PosePrediction& b) {
    return std::tie(a.track_id, a.frame) < std::tie(b.track_id, b.frame);
  });
  return out;
}

MetricReport evaluate_predictions(const std::vector<PosePrediction>& predictions, const SequenceData& source,
                                  const std::string& split, const SkeletonSpec& spec, std::size_t samples_per_bone) {
  MetricAccumulator acc(spec, kPckThresholdMm, samples_per_bone);
  for (const PosePrediction& p : predictions) {
    if (!p.instance) throw ContractError("evaluate: prediction without instance");
    acc.add(p.pose, gt_of(source, *p.instance).joints, p.instance->cloud);
  }
  return acc.report(split);
}

void write_pose_csv(const std::filesystem::path& file, const std::vector<PosePrediction>& predictions) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << "track_id,frame,joint,x,y,z\n";
  char buf[160];
  for (const PosePrediction& p : predictions) {
    for (Eigen::Index j = 0; j < p.pose.rows(); ++j) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%ld,%.17g,%.17g,%.17g\n", p.track_id, p.frame, static_cast<long>(j),
                    p.pose(j, 0), p.pose(j, 1), p.pose(j, 2));
      out << buf;
    }
  }
  if (!out) throw IoError("write failed: " + file.string());
}

std::vector<PosePrediction> read_pose_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<PosePrediction> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int track = 0, frame = 0;
    long joint = 0;
    double x = 0, y = 0, z = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%ld,%lf,%lf,%lf", &track, &frame, &joint, &x, &y, &z) != 6) {
      throw IoError("malformed pose row in " + file.string() + ": " + line);
    }
    if (joint == 0) {
      out.push_back({track, frame, nullptr, Points3(0, 3)});
    } else if (out.empty() || out.back().pose.rows() != joint) {
      throw IoError("pose rows out of order in " + file.string());
    }
    Points3& p = out.back().pose;
    p.conservativeResize(p.rows() + 1, 3);
    p.row(p.rows() - 1) << x, y, z;
  }
  return out;
}

}  // namespace fusionpose
