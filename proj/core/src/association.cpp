#include "fusionpose/association.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/hungarian.hpp"

#include <algorithm>
#include <limits>

namespace fusionpose {

std::optional<Box2D> projected_rectangle(const Box3D& box, const Calibration& calib) {
  Points3 corners(8, 3);
  const auto c = box.corners();
  for (int i = 0; i < 8; ++i) corners.row(i) = c[static_cast<std::size_t>(i)].transpose();
  const Projection proj = project(corners, calib);
  Box2D rect{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (int i = 0; i < 8; ++i) {
    if (!proj.valid[static_cast<std::size_t>(i)]) continue;
    any = true;
    rect.u_min = std::min(rect.u_min, proj.pixels(i, 0));
    rect.u_max = std::max(rect.u_max, proj.pixels(i, 0));
    rect.v_min = std::min(rect.v_min, proj.pixels(i, 1));
    rect.v_max = std::max(rect.v_max, proj.pixels(i, 1));
  }
  if (!any || !rect.well_formed()) return std::nullopt;
  return rect;
}

PairingResult pair_2d_3d(const std::vector<Detection2D>& dets2d,
                         const std::vector<Detection3D>& dets3d, const Calibration& calib,
                         double iou_threshold) {
  calib.validate();
  PairingResult out;
  std::vector<int> usable3d;
  std::vector<Box2D> rects;
  for (std::size_t j = 0; j < dets3d.size(); ++j) {
    if (auto r = projected_rectangle(dets3d[j].box, calib)) {
      usable3d.push_back(static_cast<int>(j));
      rects.push_back(*r);
    }
  }
  Assignment match;
  RowMatrix overlap(static_cast<Eigen::Index>(dets2d.size()), static_cast<Eigen::Index>(usable3d.size()));
  if (!dets2d.empty() && !usable3d.empty()) {
    RowMatrix cost(overlap.rows(), overlap.cols());
    for (Eigen::Index i = 0; i < overlap.rows(); ++i) {
      for (Eigen::Index j = 0; j < overlap.cols(); ++j) {
        overlap(i, j) = iou(dets2d[static_cast<std::size_t>(i)].box, rects[static_cast<std::size_t>(j)]);
        cost(i, j) = 1.0 - overlap(i, j);
      }
    }
    match = hungarian(cost);
  }
  std::vector<char> used2d(dets2d.size(), 0), used3d(dets3d.size(), 0);
  for (auto [i, j] : match) {
    const double v = overlap(i, j);
    if (v < iou_threshold) continue;
    out.pairs.emplace_back(i, usable3d[static_cast<std::size_t>(j)]);
    out.ious.push_back(v);
    used2d[static_cast<std::size_t>(i)] = 1;
    used3d[static_cast<std::size_t>(usable3d[static_cast<std::size_t>(j)])] = 1;
  }
  for (std::size_t i = 0; i < dets2d.size(); ++i) {
    if (!used2d[i]) out.unmatched_2d.push_back(static_cast<int>(i));
  }
  for (std::size_t j = 0; j < dets3d.size(); ++j) {
    if (!used3d[j]) out.unmatched_3d.push_back(static_cast<int>(j));
  }
  return out;
}

const std::optional<TrackObservation>& Track::at(int frame) const {
  static const std::optional<TrackObservation> none;
  if (frame < first_frame || frame > last_frame()) return none;
  return history[static_cast<std::size_t>(frame - first_frame)];
}

namespace {

Eigen::Vector3d last_center(const Track& t) {
  for (auto it = t.history.rbegin(); it != t.history.rend(); ++it) {
    if (*it) return (*it)->det3d.box.center;
  }
  throw ContractError("track without observations");
}

}  // namespace

void Tracker::step(const std::vector<TrackObservation>& detections) {
  Assignment match;
  if (!active_.empty() && !detections.empty()) {
    RowMatrix cost(static_cast<Eigen::Index>(active_.size()), static_cast<Eigen::Index>(detections.size()));
    for (std::size_t i = 0; i < active_.size(); ++i) {
      const Eigen::Vector3d c = last_center(active_[i]);
      for (std::size_t j = 0; j < detections.size(); ++j) {
        cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            (detections[j].det3d.box.center - c).norm();
      }
    }
    match = hungarian(cost);
    std::erase_if(match, [&](auto p) { return cost(p.first, p.second) > config_.gate_distance; });
  }
  std::vector<char> det_used(detections.size(), 0), track_hit(active_.size(), 0);
  for (auto [ti, dj] : match) {
    Track& t = active_[static_cast<std::size_t>(ti)];
    t.history.emplace_back(detections[static_cast<std::size_t>(dj)]);
    t.misses = 0;
    ++t.age;
    track_hit[static_cast<std::size_t>(ti)] = 1;
    det_used[static_cast<std::size_t>(dj)] = 1;
  }
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (track_hit[i]) continue;
    Track& t = active_[i];
    t.history.emplace_back(std::nullopt);
    ++t.misses;
    ++t.age;
  }
  // Retire tracks that exceeded the miss budget; trailing misses are trimmed.
  std::vector<Track> keep;
  for (Track& t : active_) {
    if (t.misses > config_.max_misses) {
      t.active = false;
      while (!t.history.empty() && !t.history.back()) t.history.pop_back();
      retired_.push_back(std::move(t));
    } else {
      keep.push_back(std::move(t));
    }
  }
  active_ = std::move(keep);
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (det_used[j]) continue;
    Track t;
    t.id = next_id_++;
    t.first_frame = frame_;
    t.history.emplace_back(detections[j]);
    t.age = 1;
    active_.push_back(std::move(t));
  }
  ++frame_;
}

std::vector<Track> Tracker::all_tracks() const {
  std::vector<Track> out = retired_;
  for (const Track& t : active_) {
    Track copy = t;
    while (!copy.history.empty() && !copy.history.back()) copy.history.pop_back();
    out.push_back(std::move(copy));
  }
  std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return out;
}

std::vector<InstanceSequence> build_sequences(const std::vector<Track>& tracks, std::size_t window) {
  if (window == 0) throw ConfigError("build_sequences: window must be positive");
  std::vector<InstanceSequence> out;
  for (const Track& t : tracks) {
    const std::size_t n = t.history.size();
    if (n < window) continue;
    for (std::size_t s = 0; s + window <= n; ++s) {
      bool complete = true;
      for (std::size_t k = 0; k < window && complete; ++k) complete = t.history[s + k].has_value();
      if (!complete) continue;
      InstanceSequence seq;
      seq.track_id = t.id;
      seq.start_frame = t.first_frame + static_cast<int>(s);
      for (std::size_t k = 0; k < window; ++k) seq.frames.push_back(*t.history[s + k]);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

}  // namespace fusionpose
