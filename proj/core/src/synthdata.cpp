#include "fusionpose/synthdata.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/rng.hpp"

#include <cmath>

namespace fusionpose {
namespace {

enum Stream : std::uint64_t { kLidar = 1, kKeypoints = 2, kDetections = 3 };

bool overlaps_image(const Box2D& b, std::size_t h, std::size_t w) {
  return b.u_max > 0.0 && b.v_max > 0.0 && b.u_min < static_cast<double>(w) && b.v_min < static_cast<double>(h);
}

}  // namespace

void SceneConfig::validate(std::size_t window) const {
  if (persons.empty()) throw ConfigError("scene.persons: at least one person required");
  if (frame_count < window) throw ConfigError("scene.frames: must be at least the window length");
  if (!(frame_rate > 0.0)) throw ConfigError("scene.frame_rate: must be positive");
  if (image_height == 0 || image_width == 0) throw ConfigError("scene.image: size must be positive");
  if (!(keypoint_noise >= 0.0)) throw ConfigError("scene.keypoint_noise: must be >= 0");
  if (!(joint_drop >= 0.0 && joint_drop <= 1.0)) throw ConfigError("scene.joint_drop: must lie in [0, 1]");
  if (persons.size() > 65535) throw ConfigError("scene.persons: too many persons");
  try {
    calib.validate();
    lidar.validate();
    for (const PersonSpec& p : persons) {
      p.body.validate();
      p.motion.validate();
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  const double needed = static_cast<double>(frame_count - 1) / frame_rate;
  for (const PersonSpec& p : persons) {
    if (p.motion.duration < needed) throw ConfigError("scene.persons: motion shorter than the sequence");
  }
}

Calibration reference_calibration() {
  return forward_facing_calibration(160.0, 160.0, 96.0, 72.0, Eigen::Vector3d(0.0, 0.1, 0.0));
}

SceneConfig reference_scene(std::uint64_t seed, std::size_t persons, std::size_t frames) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.frame_count = frames;
  cfg.calib = reference_calibration();
  Rng rng(derive_seed(seed, "scene"));
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double duration = static_cast<double>(frames) / cfg.frame_rate;
  for (std::size_t p = 0; p < persons; ++p) {
    PersonSpec spec;
    spec.body = BodyModel::standard(uni(0.85, 1.15));
    MotionScript& m = spec.motion;
    m.duration = duration;
    m.speed = uni(1.0, 1.4);
    m.gait_frequency = m.speed / uni(1.2, 1.4);
    m.phase = uni(0.0, 2.0 * 3.141592653589793);
    m.hip_amplitude = uni(0.30, 0.45);
    m.knee_amplitude = uni(0.50, 0.80);
    m.shoulder_amplitude = uni(0.25, 0.45);
    m.elbow_amplitude = uni(0.20, 0.50);
    const double lane = persons == 1 ? 9.5 : 7.0 + 6.0 * static_cast<double>(p) / static_cast<double>(persons - 1);
    const double half = 0.3 * lane;
    double side = uni(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    m.waypoints.emplace_back(lane + uni(-0.5, 0.5), uni(-half, half));
    double length = 0.0;
    while (length < m.speed * duration + 2.0) {
      const Eigen::Vector2d next(lane + uni(-0.7, 0.7), side * half * uni(0.7, 1.0));
      length += (next - m.waypoints.back()).norm();
      m.waypoints.push_back(next);
      side = -side;
    }
    cfg.persons.push_back(std::move(spec));
  }
  return cfg;
}

SequenceData generate_sequence(const SceneConfig& cfg) {
  cfg.validate(1);
  SequenceData out;
  out.person_count = cfg.persons.size();
  out.height = cfg.image_height;
  out.width = cfg.image_width;
  out.frame_rate = cfg.frame_rate;
  out.calib = cfg.calib;
  out.frames.resize(cfg.frame_count);
  for (std::size_t f = 0; f < cfg.frame_count; ++f) {
    const double t = static_cast<double>(f) / cfg.frame_rate;
    std::vector<PersonState> states;
    std::vector<Pose3D> poses;
    for (const PersonSpec& p : cfg.persons) {
      states.push_back({pose_at(p.motion, p.body, t), p.body});
      poses.push_back(states.back().pose);
    }
    FrameRecord& frame = out.frames[f];
    const LabeledCloud scan = simulate_lidar(states, cfg.lidar, derive_seed(cfg.seed, kLidar, f));
    frame.points = scan.cloud.points;
    frame.labels = scan.labels;
    frame.raster = render_raster(states, cfg.calib, cfg.image_height, cfg.image_width);
    const auto dets = simulate_detections(poses, scan, cfg.calib, cfg.jitter, derive_seed(cfg.seed, kDetections, f));
    frame.persons.resize(cfg.persons.size());
    for (std::size_t p = 0; p < cfg.persons.size(); ++p) {
      PersonRecord& rec = frame.persons[p];
      rec.keypoints = simulate_2d(poses[p], cfg.calib, cfg.keypoint_noise, cfg.joint_drop,
                                  derive_seed(cfg.seed, kKeypoints, f, p));
      rec.ground_truth.set(poses[p]);
      rec.det3d = dets[p].det3d;
      if (dets[p].det2d && overlaps_image(dets[p].det2d->box, cfg.image_height, cfg.image_width)) {
        rec.det2d = dets[p].det2d;
      }
    }
  }
  return out;
}

namespace {

std::size_t count_instances(const SequenceData& seq) {
  std::size_t n = 0;
  for (const FrameRecord& f : seq.frames) {
    for (const PersonRecord& p : f.persons) n += p.det3d.has_value() ? 1 : 0;
  }
  return n;
}

}  // namespace

DatasetSummary generate_dataset(const SceneConfig& train, const SceneConfig& val,
                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  DatasetSummary s;
  const SequenceData tr = generate_sequence(train);
  write_sequence(dir / "train.fpseq", tr);
  write_manifest(dir / "train.manifest", {"train.fpseq"});
  s.train_files.push_back(dir / "train.fpseq");
  s.train_frames = tr.frames.size();
  s.train_instances = count_instances(tr);
  const SequenceData va = generate_sequence(val);
  write_sequence(dir / "val.fpseq", va);
  write_manifest(dir / "val.manifest", {"val.fpseq"});
  s.val_files.push_back(dir / "val.fpseq");
  s.val_frames = va.frames.size();
  s.val_instances = count_instances(va);
  s.persons = train.persons.size();
  return s;
}

}  // namespace fusionpose
