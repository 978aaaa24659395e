#include "fusionpose/training.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/log.hpp"
#include "fusionpose/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

namespace fusionpose {
namespace {

constexpr std::uint64_t kEpochStream = 0xe90c;

bool is_state_entry(const std::string& path) { return !path.empty() && path[0] == '@'; }

Tensor scalar_entry(double v) { return Tensor::scalar(v); }

}  // namespace

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  total += o.total;
  motion += o.motion;
  consistency += o.consistency;
  proj += o.proj;
  cd_agu += o.cd_agu;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double s) const {
  return {total * s, motion * s, consistency * s, proj * s, cd_agu * s};
}

WindowLoss window_loss(const std::vector<FrameOutput>& outputs, const std::vector<const InstanceFrame*>& frames,
                       const Calibration& calib, const LossWeights& weights, const SkeletonSpec& spec,
                       std::size_t samples_per_bone, const std::optional<Tensor>& consistency_target) {
  if (outputs.size() != frames.size() || outputs.size() < 2) {
    throw DimensionError("window_loss: outputs and frames must align and span at least two frames");
  }
  std::vector<Var> features;
  for (const FrameOutput& o : outputs) features.push_back(o.features);
  const std::vector<Var> consistency = consistency_terms(features, consistency_target);

  WindowLoss out;
  Tape& tape = *outputs.front().final_pose.tape;
  std::vector<Var> terms;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const FrameOutput& o = outputs[t];
    Var proj = projection_loss(o.final_pose, frames[t]->keypoints, calib);
    Var cd = chamfer_agu_loss(o.final_pose, frames[t]->cloud, spec, samples_per_bone);
    out.parts.proj += proj.value().item();
    out.parts.cd_agu += cd.value().item();
    out.parts.consistency += consistency[t].value().item();
    terms.push_back(ad::scale(proj, weights.proj));
    terms.push_back(ad::scale(cd, weights.cd_agu));
    terms.push_back(ad::scale(consistency[t], weights.consistency));
    if (t > 0) {
      Var motion = motion_loss(o.motion, frames[t]->keypoints, frames[t - 1]->keypoints);
      out.parts.motion += motion.value().item();
      terms.push_back(ad::scale(motion, weights.motion));
    }
  }
  out.total = tape.constant(Tensor::scalar(0.0));
  for (Var v : terms) out.total = ad::add(out.total, v);
  out.parts.total = out.total.value().item();
  return out;
}

std::vector<Batch> make_batches(const PreparedSequence& data, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("optim.batch_size: must be at least 1");
  std::vector<Batch> out;
  for (std::size_t i = 0; i < data.windows.size(); ++i) {
    const bool fresh = out.empty() || out.back().windows.size() == batch_size ||
                       data.windows[out.back().windows.back()].track != data.windows[i].track;
    if (fresh) out.emplace_back();
    out.back().windows.push_back(i);
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t batches, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(batches);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kEpochStream, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

BatchForward batch_forward(Tape& tape, const Model& model, const PreparedSequence& data, const Batch& batch,
                           const LossWeights& weights, const SkeletonSpec& spec, std::size_t samples_per_bone,
                           const std::vector<Tensor>* frozen_targets) {
  if (batch.windows.empty()) throw InvalidInput("batch_forward: empty batch");
  if (frozen_targets && frozen_targets->size() != batch.windows.size()) {
    throw DimensionError("batch_forward: one frozen target per window required");
  }
  std::map<const InstanceFrame*, Var> fused;
  BatchForward out;
  out.loss = tape.constant(Tensor::scalar(0.0));
  for (std::size_t wi = 0; wi < batch.windows.size(); ++wi) {
    const auto frames = data.window_frames(data.windows[batch.windows[wi]]);
    std::vector<Var> f;
    std::vector<Eigen::Vector3d> centers;
    for (const InstanceFrame* fr : frames) {
      auto it = fused.find(fr);
      if (it == fused.end()) it = fused.emplace(fr, model.fuse_frame(tape, fr->input)).first;
      f.push_back(it->second);
      centers.push_back(fr->input.center);
    }
    const auto outputs = model.temporal_estimate(tape, f, centers);
    std::vector<Var> features;
    for (const FrameOutput& o : outputs) features.push_back(o.features);
    std::optional<Tensor> target;
    if (frozen_targets) target = (*frozen_targets)[wi];
    else target = consistency_target(features);
    out.consistency_targets.push_back(*target);
    const WindowLoss wl = window_loss(outputs, frames, data.calib, weights, spec, samples_per_bone, target);
    out.loss = ad::add(out.loss, wl.total);
    out.parts += wl.parts;
  }
  const double inv = 1.0 / static_cast<double>(batch.windows.size());
  out.loss = ad::scale(out.loss, inv);
  out.parts = out.parts.scaled(inv);
  return out;
}

std::string format_log_row(std::size_t epoch, std::size_t step, const LossBreakdown& l) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g", epoch, step, l.total, l.motion,
                l.consistency, l.proj, l.cd_agu);
  return buf;
}

Trainer::Trainer(Model& model, const PreparedSequence& data, TrainOptions options)
    : model_(model), data_(data), options_(std::move(options)), adam_(options_.adam) {
  options_.weights.validate(true);
  batches_ = make_batches(data_, options_.batch_size);
  if (batches_.empty()) throw InvalidInput("training split yields no complete windows");
}

LossBreakdown Trainer::step(const Batch& batch) {
  const bool warmup = state_.epoch < options_.warmup_epochs;
  LossWeights w = options_.weights;
  if (warmup) w = {0.0, 0.0, 0.0, options_.weights.cd_agu > 0.0 ? options_.weights.cd_agu : 1.0};
  ParameterStore& params = model_.params();
  params.zero_grad();
  Tape tape;
  const BatchForward fwd = batch_forward(tape, model_, data_, batch, w, SkeletonSpec::standard(),
                                         options_.samples_per_bone);
  const double loss = fwd.loss.value().item();
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite loss at epoch " + std::to_string(state_.epoch) + ", step " +
                         std::to_string(state_.step));
  }
  tape.backward(fwd.loss);
  tape.accumulate_gradients(params);
  if (warmup) {
    for (auto& [path, p] : params) {
      if (path.rfind("point.", 0) != 0) p.grad.fill(0.0);
    }
  }
  adam_.step(params);
  ++state_.step;
  return fwd.parts;
}

LossBreakdown Trainer::run_epoch() {
  auto order = epoch_order(batches_.size(), options_.seed, state_.epoch);
  if (options_.max_batches_per_epoch > 0 && order.size() > options_.max_batches_per_epoch) {
    order.resize(options_.max_batches_per_epoch);
  }
  LossBreakdown sum;
  for (std::size_t b : order) sum += step(batches_[b]);
  state_.last_epoch = sum.scaled(1.0 / static_cast<double>(order.size()));
  ++state_.epoch;
  if (!options_.log_file.empty()) {
    const bool fresh = state_.epoch == 1;
    std::ofstream log(options_.log_file, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot open " + options_.log_file.string());
    if (fresh) log << kTrainLogHeader << '\n';
    log << format_log_row(state_.epoch, state_.step, state_.last_epoch) << '\n';
  }
  if (!options_.checkpoint.empty()) save_checkpoint(options_.checkpoint);
  return state_.last_epoch;
}

void Trainer::run(const std::function<void(const TrainState&)>& on_epoch) {
  while (state_.epoch < options_.epochs) {
    run_epoch();
    if (on_epoch) on_epoch(state_);
  }
}

void Trainer::save_checkpoint(const std::filesystem::path& file) const {
  std::map<std::string, Tensor> entries = model_.params().values();
  for (const auto& [path, p] : model_.params()) {
    entries.emplace("@adam.m." + path, p.moment1);
    entries.emplace("@adam.v." + path, p.moment2);
  }
  entries.emplace("@state.epoch", scalar_entry(static_cast<double>(state_.epoch)));
  entries.emplace("@state.step", scalar_entry(static_cast<double>(state_.step)));
  entries.emplace("@state.adam_steps", scalar_entry(static_cast<double>(adam_.steps_taken())));
  const LossBreakdown& l = state_.last_epoch;
  entries.emplace("@state.last_epoch", Tensor({1, 5}, {l.total, l.motion, l.consistency, l.proj, l.cd_agu}));
  // Write then rename so an interrupted save keeps the previous checkpoint.
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  write_checkpoint(tmp, entries);
  std::filesystem::rename(tmp, file);
}

void Trainer::load_checkpoint(const std::filesystem::path& file) {
  const auto entries = read_checkpoint(file);
  load_model_checkpoint(model_, file);
  for (auto& [path, p] : model_.params()) {
    auto m = entries.find("@adam.m." + path);
    auto v = entries.find("@adam.v." + path);
    if (m == entries.end() || v == entries.end()) throw ContractError("checkpoint lacks optimizer state for " + path);
    p.moment1 = m->second;
    p.moment2 = v->second;
  }
  auto scalar = [&](const char* key) {
    auto it = entries.find(key);
    if (it == entries.end()) throw ContractError(std::string("checkpoint lacks ") + key);
    return it->second.item();
  };
  state_.epoch = static_cast<std::size_t>(scalar("@state.epoch"));
  state_.step = static_cast<std::size_t>(scalar("@state.step"));
  adam_.set_steps_taken(static_cast<std::int64_t>(scalar("@state.adam_steps")));
  if (auto it = entries.find("@state.last_epoch"); it != entries.end() && it->second.size() == 5) {
    const Tensor& t = it->second;
    state_.last_epoch = {t[0], t[1], t[2], t[3], t[4]};
  }
}

void load_model_checkpoint(Model& model, const std::filesystem::path& file) {
  const auto entries = read_checkpoint(file);
  for (const auto& [path, _] : entries) {
    if (!is_state_entry(path) && !model.params().contains(path)) {
      throw ContractError("checkpoint parameter '" + path + "' does not exist in the configured model");
    }
  }
  model.params().load_values(entries);
}

}  // namespace fusionpose
