#pragma once

#include "fusionpose/losses.hpp"
#include "fusionpose/model.hpp"
#include "fusionpose/parameter_store.hpp"
#include "fusionpose/samples.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fusionpose {

// Unweighted loss terms summed over the frames of a window (or averaged over
// the windows of a batch), plus the weighted total.
struct LossBreakdown {
  double total = 0.0;
  double motion = 0.0;
  double consistency = 0.0;
  double proj = 0.0;
  double cd_agu = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown scaled(double s) const;
};

struct WindowLoss {
  Var total;
  LossBreakdown parts;
};

// Sum over the T frames of
//   l_motion L_motion(t) + l_consistency L_consistency(t) + l_proj L_proj(t) + l_cd L_CD_agu(t),
// where L_motion needs the previous frame and so starts at the second frame,
// and L_consistency(t) is the frame-t term of the consistency loss. Projection
// and Chamfer terms act on the final pose.
WindowLoss window_loss(const std::vector<FrameOutput>& outputs, const std::vector<const InstanceFrame*>& frames,
                       const Calibration& calib, const LossWeights& weights, const SkeletonSpec& spec,
                       std::size_t samples_per_bone, const std::optional<Tensor>& consistency_target = std::nullopt);

// Up to batch_size consecutive windows of one track; frames shared between
// the windows of a batch are encoded once.
struct Batch {
  std::vector<std::size_t> windows;  // indices into PreparedSequence::windows
};
std::vector<Batch> make_batches(const PreparedSequence& data, std::size_t batch_size);

// Batch order for an epoch: a permutation that depends only on (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t batches, std::uint64_t seed, std::size_t epoch);

struct BatchForward {
  Var loss;               // mean of window totals
  LossBreakdown parts;    // mean over windows
  std::vector<Tensor> consistency_targets;  // per window, as used
};
// frozen_targets, when given, replaces each window's consistency target.
BatchForward batch_forward(Tape& tape, const Model& model, const PreparedSequence& data, const Batch& batch,
                           const LossWeights& weights, const SkeletonSpec& spec, std::size_t samples_per_bone,
                           const std::vector<Tensor>* frozen_targets = nullptr);

struct TrainOptions {
  LossWeights weights;
  Adam::Options adam;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 42;
  std::size_t samples_per_bone = 3;
  std::size_t max_batches_per_epoch = 0;  // 0 = all
  std::size_t warmup_epochs = 0;          // point-branch warm start with L_CD_agu only
  std::filesystem::path checkpoint;       // written after every epoch; empty = none
  std::filesystem::path log_file;         // per-epoch CSV; empty = none
};

struct TrainState {
  std::size_t epoch = 0;  // completed epochs
  std::size_t step = 0;   // optimizer steps taken
  LossBreakdown last_epoch;
};

inline constexpr const char* kTrainLogHeader = "epoch,step,total,motion,consistency,proj,cd_agu";
std::string format_log_row(std::size_t epoch, std::size_t step, const LossBreakdown& l);

class Trainer {
 public:
  Trainer(Model& model, const PreparedSequence& data, TrainOptions options);

  // One optimizer step on a batch. Throws NumericalError on a non-finite loss
  // before any parameter is touched.
  LossBreakdown step(const Batch& batch);
  // One pass over the batches in epoch order; checkpoint and log afterwards.
  LossBreakdown run_epoch();
  // Epochs until options.epochs are completed; the callback sees each epoch.
  void run(const std::function<void(const TrainState&)>& on_epoch = {});

  const TrainState& state() const { return state_; }
  const std::vector<Batch>& batches() const { return batches_; }

  // Parameters, optimizer moments and train state in one .fpck file.
  void save_checkpoint(const std::filesystem::path& file) const;
  void load_checkpoint(const std::filesystem::path& file);

 private:
  Model& model_;
  const PreparedSequence& data_;
  TrainOptions options_;
  Adam adam_;
  std::vector<Batch> batches_;
  TrainState state_;
};

// Parameter values only, checked against the model: missing, extra or
// reshaped parameters raise ContractError.
void load_model_checkpoint(Model& model, const std::filesystem::path& file);

}  // namespace fusionpose
