#include "fusionpose/pipeline.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/gt_guard.hpp"
#include "fusionpose/rng.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

namespace fusionpose {
namespace {

void apply_sensor_settings(const RunConfig& c, SceneConfig& s) {
  s.keypoint_noise = c.keypoint_noise;
  s.joint_drop = c.joint_drop;
  s.jitter.center_sigma_3d = c.jitter_3d;
  s.jitter.edge_sigma_2d = c.jitter_2d;
  s.lidar.beams = c.lidar_beams;
  s.lidar.azimuth_step = c.lidar_azimuth_step;
  s.lidar.range_noise_sigma = c.lidar_noise;
}

std::uint64_t model_seed(const RunConfig& c) { return derive_seed(c.seed, "model"); }

void ensure_parent(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
}

TrainOptions train_options(const RunConfig& c) {
  TrainOptions o;
  o.weights = c.loss;
  o.adam = c.adam;
  o.epochs = c.epochs;
  o.batch_size = c.batch_size;
  o.seed = c.seed;
  o.samples_per_bone = c.samples_per_bone;
  o.max_batches_per_epoch = c.max_batches_per_epoch;
  o.warmup_epochs = c.warmup_epochs;
  o.checkpoint = c.checkpoint;
  o.log_file = c.train_log;
  return o;
}

// Training split for a given point pipeline, read without ground truth.
LoadedSplit load_training_split(const RunConfig& c, const PrepareOptions& options) {
  return load_split(split_sequence_path(c, "train"), false, options);
}

Model load_reference_model(const RunConfig& c, const std::filesystem::path& checkpoint) {
  Model model(c.model, model_seed(c));
  const std::filesystem::path file = checkpoint.empty() ? c.checkpoint : checkpoint;
  if (!std::filesystem::exists(file)) throw IoError("checkpoint not found: " + file.string());
  load_model_checkpoint(model, file);
  return model;
}

std::vector<PosePrediction> predictions_for(const RunConfig& c, const LoadedSplit& split, EvalMode mode,
                                            const Model* model) {
  switch (mode) {
    case EvalMode::gt: return ground_truth_predictions(split.prepared, split.source);
    case EvalMode::static_pose: {
      const SequenceData train = read_sequence(split_sequence_path(c, "train"));
      return static_predictions(split.prepared, mean_root_relative_pose(train, SkeletonSpec::standard()));
    }
    default: return predict_sequence(*model, split.prepared);
  }
}

MetricReport train_and_evaluate(const RunConfig& c, std::ostream& out, const std::string& label) {
  RunConfig arm = c;
  arm.epochs = c.ablate_epochs;
  Model model(arm.model, model_seed(arm));
  {
    const LoadedSplit train = load_training_split(arm, prepare_options(arm));
    TrainOptions o = train_options(arm);
    o.checkpoint.clear();
    o.log_file.clear();
    GtLock lock;
    Trainer trainer(model, train.prepared, o);
    trainer.run([&](const TrainState& s) {
      out << label << " epoch " << s.epoch << " loss " << s.last_epoch.total << '\n';
    });
  }
  const LoadedSplit val = load_split(split_sequence_path(arm, arm.eval_split), true, prepare_options(arm));
  return evaluate_predictions(predict_sequence(model, val.prepared), val.source, arm.eval_split,
                              SkeletonSpec::standard(), arm.samples_per_bone);
}

}  // namespace

SceneConfig train_scene(const RunConfig& config) {
  SceneConfig s = reference_scene(config.seed, config.persons, config.train_frames);
  apply_sensor_settings(config, s);
  return s;
}

SceneConfig val_scene(const RunConfig& config) {
  SceneConfig s = reference_scene(derive_seed(config.seed, "val"), config.persons, config.val_frames);
  apply_sensor_settings(config, s);
  return s;
}

PrepareOptions prepare_options(const RunConfig& config) {
  PrepareOptions o;
  o.points = config.model.points;
  o.point_budget = config.point_budget;
  o.occlusion = config.occlusion;
  o.image_height = config.model.image_height;
  o.image_width = config.model.image_width;
  o.association = config.association;
  o.association.window = config.model.window;
  o.seed = derive_seed(config.seed, "occlusion");
  return o;
}

std::filesystem::path split_sequence_path(const RunConfig& config, const std::string& split) {
  if (split != "train" && split != "val") throw ConfigError("sequence: unknown split '" + split + "'");
  const std::filesystem::path manifest = config.data_dir / (split + ".manifest");
  if (!std::filesystem::exists(manifest)) {
    throw ConfigError("data.dir: missing " + manifest.string() + " (run generate first)");
  }
  const auto entries = read_manifest(manifest);
  if (entries.size() != 1) throw ConfigError("data.dir: " + manifest.string() + " must list exactly one sequence");
  return entries.front();
}

LoadedSplit load_split(const std::filesystem::path& sequence, bool load_ground_truth, const PrepareOptions& options) {
  LoadedSplit s;
  s.source = read_sequence(sequence, ReadOptions{load_ground_truth});
  s.prepared = prepare_sequence(s.source, options);
  return s;
}

DatasetSummary cmd_generate(const RunConfig& config, std::ostream& out) {
  const SceneConfig train = train_scene(config);
  const SceneConfig val = val_scene(config);
  train.validate(config.model.window);
  val.validate(config.model.window);
  const DatasetSummary s = generate_dataset(train, val, config.data_dir);
  out << "train: frames=" << s.train_frames << " persons=" << s.persons << " instances=" << s.train_instances
      << " manifest=" << (config.data_dir / "train.manifest").string() << '\n';
  out << "val: frames=" << s.val_frames << " persons=" << s.persons << " instances=" << s.val_instances
      << " manifest=" << (config.data_dir / "val.manifest").string() << '\n';
  return s;
}

TrainSummary cmd_train(const RunConfig& config, std::ostream& out, bool resume) {
  const LoadedSplit train = load_training_split(config, prepare_options(config));
  Model model(config.model, model_seed(config));
  TrainOptions options = train_options(config);
  ensure_parent(options.log_file);
  TrainSummary summary;
  const auto reads_before = gt_access_counters().reads;
  {
    GtLock lock;
    Trainer trainer(model, train.prepared, options);
    if (config.overfit_steps > 0) {
      // One fixed batch, no epoch structure; the log has one row per step.
      const Batch& batch = trainer.batches().front();
      std::ofstream log;
      if (!options.log_file.empty()) {
        log.open(options.log_file, std::ios::trunc);
        if (!log) throw IoError("cannot open " + options.log_file.string());
        log << kTrainLogHeader << '\n';
      }
      for (std::size_t i = 0; i < config.overfit_steps; ++i) {
        const LossBreakdown l = trainer.step(batch);
        summary.history.push_back(l);
        if (log.is_open()) log << format_log_row(0, i + 1, l) << '\n';
      }
      if (!options.checkpoint.empty()) trainer.save_checkpoint(options.checkpoint);
      out << "overfit: steps=" << config.overfit_steps << " initial=" << summary.history.front().total
          << " final=" << summary.history.back().total << '\n';
    } else {
      if (resume && std::filesystem::exists(options.checkpoint)) {
        trainer.load_checkpoint(options.checkpoint);
        out << "resumed at epoch " << trainer.state().epoch << '\n';
      }
      trainer.run([&](const TrainState& s) {
        summary.history.push_back(s.last_epoch);
        out << "epoch " << s.epoch << " step " << s.step << " loss " << s.last_epoch.total << '\n';
      });
    }
    summary.steps = trainer.state().step;
  }
  summary.gt_reads = gt_access_counters().reads - reads_before;
  return summary;
}

std::vector<PosePrediction> predict_split(const RunConfig& config, const LoadedSplit& split, EvalMode mode,
                                          const std::filesystem::path& checkpoint) {
  if (mode != EvalMode::model) return predictions_for(config, split, mode, nullptr);
  const Model model = load_reference_model(config, checkpoint);
  return predictions_for(config, split, mode, &model);
}

MetricReport cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_file, std::ostream& out) {
  const LoadedSplit split =
      load_split(split_sequence_path(config, config.eval_split), true, prepare_options(config));
  const auto predictions = predict_split(config, split, config.eval_mode, checkpoint);
  const SkeletonSpec& spec = SkeletonSpec::standard();
  const MetricReport report =
      evaluate_predictions(predictions, split.source, config.eval_split, spec, config.samples_per_bone);

  std::map<int, std::vector<PosePrediction>> by_track;
  for (const PosePrediction& p : predictions) by_track[p.track_id].push_back(p);
  std::vector<MetricReport> breakdown;
  for (const auto& [id, preds] : by_track) {
    MetricReport r = evaluate_predictions(preds, split.source, config.eval_split + "/track" + std::to_string(id), spec,
                                          config.samples_per_bone);
    r.joint_pck.clear();
    r.joint_mpjpe.clear();
    breakdown.push_back(std::move(r));
  }

  const std::filesystem::path file = out_file.empty() ? config.metrics_out : out_file;
  ensure_parent(file);
  write_metric_csv(file, {report}, spec);
  ensure_parent(config.breakdown_out);
  write_metric_csv(config.breakdown_out, breakdown, spec);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s: pck=%.3f mpjpe_mm=%.3f cd_mm=%.3f n=%zu\n", report.split.c_str(), report.pck,
                report.mpjpe, report.cd, report.samples);
  out << buf;
  return report;
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = std::string(kAblationHeader) + "\n";
  char buf[256];
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.2f,%.6f,%.6f,%.6f,%zu\n", r.study.c_str(), r.arm.c_str(), r.points,
                  r.occlusion, r.report.pck, r.report.mpjpe, r.report.cd, r.report.samples);
    out += buf;
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config, const std::string& study,
                                    const std::filesystem::path& checkpoint, const std::filesystem::path& out_file,
                                    std::ostream& out) {
  std::vector<AblationRow> rows;
  const SkeletonSpec& spec = SkeletonSpec::standard();
  if (study == "fusion") {
    for (FusionVariant v : {FusionVariant::ipa, FusionVariant::point_rgb, FusionVariant::pixel, FusionVariant::local,
                            FusionVariant::global}) {
      RunConfig arm = config;
      arm.model.fusion = v;
      rows.push_back({study, to_string(v), arm.model.points, 0.0, train_and_evaluate(arm, out, to_string(v))});
    }
  } else if (study == "loss_components") {
    // Stacked rows: projection only, then consistency, motion and Chamfer added in turn.
    const std::vector<std::pair<std::string, LossWeights>> arms = {
        {"IPA", {0.0, 0.0, config.loss.proj, 0.0}},
        {"IPA+CB", {0.0, config.loss.consistency, config.loss.proj, 0.0}},
        {"IPA+CB+MB", {config.loss.motion, config.loss.consistency, config.loss.proj, 0.0}},
        {"IPA+CB+MB+CDA", config.loss},
    };
    for (const auto& [name, weights] : arms) {
      RunConfig arm = config;
      arm.loss = weights;
      arm.model.fusion = FusionVariant::ipa;
      rows.push_back({study, name, arm.model.points, 0.0, train_and_evaluate(arm, out, name)});
    }
  } else if (study == "density" || study == "occlusion") {
    if (study == "density" && config.model.points != 256) {
      throw ConfigError("model.points: the density study needs N = 256");
    }
    const Model model = load_reference_model(config, checkpoint);
    std::vector<std::pair<std::size_t, double>> arms;
    if (study == "density") arms = {{256, 0.0}, {128, 0.0}, {64, 0.0}, {32, 0.0}};
    else arms = {{0, 0.0}, {0, 0.6}};
    for (const auto& [budget, occlusion] : arms) {
      RunConfig arm = config;
      arm.point_budget = budget;
      arm.occlusion = occlusion;
      const LoadedSplit val = load_split(split_sequence_path(arm, arm.eval_split), true, prepare_options(arm));
      const MetricReport r = evaluate_predictions(predict_sequence(model, val.prepared), val.source, arm.eval_split,
                                                  spec, arm.samples_per_bone);
      const std::size_t n = budget == 0 ? config.model.points : budget;
      char label[64];
      if (study == "density") std::snprintf(label, sizeof(label), "N=%zu", n);
      else std::snprintf(label, sizeof(label), "occlusion=%.1f", occlusion);
      rows.push_back({study, label, n, occlusion, r});
      out << study << ' ' << label << " pck " << r.pck << '\n';
    }
  } else {
    throw ConfigError("study: unknown study '" + study + "' (expected fusion, loss_components, density, occlusion)");
  }
  const std::filesystem::path file = out_file.empty() ? config.ablate_dir / ("ablation_" + study + ".csv") : out_file;
  ensure_parent(file);
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  os << format_ablation_csv(rows);
  if (!os) throw IoError("write failed: " + file.string());
  return rows;
}

std::vector<PosePrediction> cmd_export_poses(const RunConfig& config, const std::filesystem::path& checkpoint,
                                             const std::string& sequence, const std::filesystem::path& out_file,
                                             std::ostream& out) {
  std::filesystem::path file;
  if (sequence == "train" || sequence == "val") {
    file = split_sequence_path(config, sequence);
  } else {
    file = sequence;
    if (!std::filesystem::exists(file)) throw ConfigError("sequence: no such sequence '" + sequence + "'");
  }
  const LoadedSplit split = load_split(file, config.eval_mode != EvalMode::model, prepare_options(config));
  auto predictions = predict_split(config, split, config.eval_mode, checkpoint);
  const std::filesystem::path dest = out_file.empty() ? config.export_out : out_file;
  ensure_parent(dest);
  write_pose_csv(dest, predictions);
  out << "exported " << predictions.size() << " poses to " << dest.string() << '\n';
  return predictions;
}

std::vector<PosePrediction> bind_predictions(std::vector<PosePrediction> predictions, const PreparedSequence& data) {
  std::map<int, const PreparedTrack*> tracks;
  for (const PreparedTrack& t : data.tracks) tracks[t.id] = &t;
  for (PosePrediction& p : predictions) {
    auto it = tracks.find(p.track_id);
    if (it == tracks.end()) throw ContractError("no track " + std::to_string(p.track_id) + " in the sequence");
    p.instance = &it->second->at(p.frame);
  }
  return predictions;
}

}  // namespace fusionpose
