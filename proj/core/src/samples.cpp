#include "fusionpose/samples.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/rng.hpp"
#include "fusionpose/sensors.hpp"

#include <map>

namespace fusionpose {

const InstanceFrame& PreparedTrack::at(int frame) const {
  const int k = frame - first_frame;
  if (k < 0 || k >= static_cast<int>(frames.size()) || !frames[static_cast<std::size_t>(k)]) {
    throw ContractError("track " + std::to_string(id) + " has no instance at frame " + std::to_string(frame));
  }
  return *frames[static_cast<std::size_t>(k)];
}

std::vector<const InstanceFrame*> PreparedSequence::window_frames(const WindowRef& w) const {
  std::vector<const InstanceFrame*> out;
  for (std::size_t k = 0; k < window; ++k) out.push_back(&tracks[w.track].at(w.start_frame + static_cast<int>(k)));
  return out;
}

PreparedCloud prepare_cloud(const Points3& crop, const PrepareOptions& options, std::uint64_t seed) {
  PointCloud cloud{crop};
  if (options.occlusion > 0.0) cloud = occlude_points(cloud, options.occlusion, seed);
  const std::size_t budget = options.point_budget == 0 ? options.points : options.point_budget;
  PreparedCloud out;
  out.unique = downsample(cloud, std::min(budget, cloud.size())).points;
  out.padded = downsample(PointCloud{out.unique}, options.points).points;
  return out;
}

PreparedSequence prepare_sequence(const SequenceData& data, const PrepareOptions& options) {
  if (options.points == 0) throw ConfigError("prepare: point count must be positive");
  data.calib.validate();
  PreparedSequence out;
  out.calib = data.calib;
  out.window = options.association.window;

  // Pass 1: pair and track. Remember, per frame and observation, the person
  // slots behind the detection indices and the cropped points.
  struct Slots {
    std::vector<int> slot2d, slot3d;
  };
  std::vector<Slots> slots(data.frames.size());
  std::map<std::pair<int, int>, Points3> crops;  // (frame, slot3d)
  Tracker tracker(options.association);
  for (std::size_t f = 0; f < data.frames.size(); ++f) {
    const FrameRecord& fr = data.frames[f];
    std::vector<Detection2D> d2;
    std::vector<Detection3D> d3;
    for (std::size_t p = 0; p < fr.persons.size(); ++p) {
      if (fr.persons[p].det2d) {
        d2.push_back(*fr.persons[p].det2d);
        slots[f].slot2d.push_back(static_cast<int>(p));
      }
      if (fr.persons[p].det3d) {
        d3.push_back(*fr.persons[p].det3d);
        slots[f].slot3d.push_back(static_cast<int>(p));
      }
    }
    const PairingResult pairing = pair_2d_3d(d2, d3, data.calib, options.association.iou_threshold);
    std::vector<TrackObservation> obs;
    for (auto [i2, i3] : pairing.pairs) {
      const int s3 = slots[f].slot3d[static_cast<std::size_t>(i3)];
      try {
        crops[{static_cast<int>(f), s3}] = crop_points(PointCloud{fr.points}, d3[static_cast<std::size_t>(i3)].box).points;
      } catch (const EmptyCropError&) {
        continue;
      }
      obs.push_back({i2, i3, d2[static_cast<std::size_t>(i2)], d3[static_cast<std::size_t>(i3)]});
    }
    tracker.step(obs);
  }

  // Pass 2: build network inputs for every tracked observation.
  const std::vector<Track> tracks = tracker.all_tracks();
  for (const Track& t : tracks) {
    PreparedTrack pt;
    pt.id = t.id;
    pt.first_frame = t.first_frame;
    pt.frames.resize(t.history.size());
    for (std::size_t k = 0; k < t.history.size(); ++k) {
      if (!t.history[k]) continue;
      const TrackObservation& o = *t.history[k];
      const int f = t.first_frame + static_cast<int>(k);
      const FrameRecord& fr = data.frames[static_cast<std::size_t>(f)];
      const int s2 = slots[static_cast<std::size_t>(f)].slot2d[static_cast<std::size_t>(o.index2d)];
      const int s3 = slots[static_cast<std::size_t>(f)].slot3d[static_cast<std::size_t>(o.index3d)];
      InstanceFrame inst;
      inst.frame = f;
      inst.person = s3;
      inst.det2d = o.det2d;
      inst.det3d = o.det3d;
      inst.keypoints = fr.persons[static_cast<std::size_t>(s2)].keypoints;
      const PreparedCloud pc = prepare_cloud(crops.at({f, s3}), options,
                                             derive_seed(options.seed, static_cast<std::uint64_t>(f),
                                                         static_cast<std::uint64_t>(s3)));
      inst.cloud = pc.unique;
      inst.input.center = o.det3d.box.center;
      inst.input.points = to_tensor(pc.padded.rowwise() - o.det3d.box.center.transpose());
      inst.input.image = crop_image(fr.raster, o.det2d.box, options.image_height, options.image_width);
      const Projection proj = project(pc.padded, data.calib);
      inst.input.point_uv.resize(options.points);
      inst.input.point_uv_valid.resize(options.points);
      for (std::size_t i = 0; i < options.points; ++i) {
        inst.input.point_uv_valid[i] = proj.valid[i];
        inst.input.point_uv[i] = normalize_in_box(proj.pixels.row(static_cast<Eigen::Index>(i)).transpose(), o.det2d.box);
      }
      pt.frames[k] = std::move(inst);
    }
    out.tracks.push_back(std::move(pt));
  }

  std::map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < out.tracks.size(); ++i) index_of[out.tracks[i].id] = i;
  for (const InstanceSequence& s : build_sequences(tracks, out.window)) {
    out.windows.push_back({index_of.at(s.track_id), s.start_frame});
  }
  return out;
}

}  // namespace fusionpose
