#pragma once

#include "fusionpose/config.hpp"
#include "fusionpose/evaluation.hpp"
#include "fusionpose/samples.hpp"
#include "fusionpose/synthdata.hpp"
#include "fusionpose/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fusionpose {

// Scenes generated for a run: the training scene uses the run seed directly,
// the validation scene a derived one, so the two never share motion.
SceneConfig train_scene(const RunConfig& config);
SceneConfig val_scene(const RunConfig& config);

PrepareOptions prepare_options(const RunConfig& config);

// The single sequence listed in <data.dir>/<split>.manifest.
std::filesystem::path split_sequence_path(const RunConfig& config, const std::string& split);

struct LoadedSplit {
  SequenceData source;
  PreparedSequence prepared;
};
// load_ground_truth = false reads a sequence whose GT bytes are never materialized.
LoadedSplit load_split(const std::filesystem::path& sequence, bool load_ground_truth, const PrepareOptions& options);

DatasetSummary cmd_generate(const RunConfig& config, std::ostream& out);

struct TrainSummary {
  std::vector<LossBreakdown> history;  // per epoch, or per step in overfit mode
  std::size_t steps = 0;
  std::uint64_t gt_reads = 0;          // GT-3D reads observed while training
};
// Fresh run unless resume is set and the checkpoint exists. Training reads
// sequences without GT and runs under a GtLock.
TrainSummary cmd_train(const RunConfig& config, std::ostream& out, bool resume = false);

// Model, ground-truth or static-baseline predictions for a split.
std::vector<PosePrediction> predict_split(const RunConfig& config, const LoadedSplit& split, EvalMode mode,
                                          const std::filesystem::path& checkpoint);

// Writes the metric CSV to `out_file` (empty: eval.out) and the per-track
// breakdown to eval.breakdown.
MetricReport cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_file, std::ostream& out);

inline constexpr const char* kAblationHeader = "study,arm,n_points,occlusion,pck,mpjpe_mm,cd_mm,n_samples";
struct AblationRow {
  std::string study;
  std::string arm;
  std::size_t points = 0;
  double occlusion = 0.0;
  MetricReport report;
};
std::string format_ablation_csv(const std::vector<AblationRow>& rows);

// Studies: fusion, loss_components, density, occlusion. The first two train
// every arm from the same seed for ablate.epochs; the others evaluate the
// checkpointed reference model. Unknown study -> ConfigError.
std::vector<AblationRow> cmd_ablate(const RunConfig& config, const std::string& study,
                                    const std::filesystem::path& checkpoint, const std::filesystem::path& out_file,
                                    std::ostream& out);

// `sequence` is a split name or a path to a sequence file; missing -> ConfigError.
std::vector<PosePrediction> cmd_export_poses(const RunConfig& config, const std::filesystem::path& checkpoint,
                                             const std::string& sequence, const std::filesystem::path& out_file,
                                             std::ostream& out);

// Binds exported poses back to the instances they were predicted for.
std::vector<PosePrediction> bind_predictions(std::vector<PosePrediction> predictions, const PreparedSequence& data);

}  // namespace fusionpose
