#include "fusionpose/config.hpp"

#include "fusionpose/errors.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace fusionpose {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-' || v[0] == '+') throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  char* end = nullptr;
  errno = 0;
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return u;
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field size_field(const char* key, T RunConfig::*member) {
  return {key, [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.*member = static_cast<T>(to_unsigned(key, v));
          },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field double_field(const char* key, double RunConfig::*member) {
  return {key, [key, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            c.*member = to_double(key, v);
          },
          [member](const RunConfig& c) { return fmt_double(c.*member); }};
}

Field path_field(const char* key, std::filesystem::path RunConfig::*member) {
  return {key, [member](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
            std::filesystem::path p(v);
            c.*member = (p.is_relative() && !base.empty()) ? base / p : p;
          },
          [member](const RunConfig& c) { return (c.*member).string(); }};
}

template <class S, class T>
Field nested_size(const char* key, S RunConfig::*outer, T S::*inner) {
  return {key, [key, outer, inner](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            (c.*outer).*inner = static_cast<T>(to_unsigned(key, v));
          },
          [outer, inner](const RunConfig& c) { return std::to_string((c.*outer).*inner); }};
}

template <class S>
Field nested_double(const char* key, S RunConfig::*outer, double S::*inner) {
  return {key, [key, outer, inner](RunConfig& c, const std::string& v, const std::filesystem::path&) {
            (c.*outer).*inner = to_double(key, v);
          },
          [outer, inner](const RunConfig& c) { return fmt_double((c.*outer).*inner); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed",
                 [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.seed = to_unsigned("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(path_field("data.dir", &RunConfig::data_dir));
    f.push_back(size_field("data.persons", &RunConfig::persons));
    f.push_back(size_field("data.train_frames", &RunConfig::train_frames));
    f.push_back(size_field("data.val_frames", &RunConfig::val_frames));
    f.push_back(double_field("data.keypoint_noise", &RunConfig::keypoint_noise));
    f.push_back(double_field("data.joint_drop", &RunConfig::joint_drop));
    f.push_back(double_field("data.jitter_3d", &RunConfig::jitter_3d));
    f.push_back(double_field("data.jitter_2d", &RunConfig::jitter_2d));
    f.push_back({"data.lidar_beams",
                 [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                   c.lidar_beams = static_cast<int>(to_unsigned("data.lidar_beams", v));
                 },
                 [](const RunConfig& c) { return std::to_string(c.lidar_beams); }});
    f.push_back(double_field("data.lidar_azimuth_step", &RunConfig::lidar_azimuth_step));
    f.push_back(double_field("data.lidar_noise", &RunConfig::lidar_noise));

    f.push_back(nested_size("model.width", &RunConfig::model, &ModelConfig::width));
    f.push_back(nested_size("model.points", &RunConfig::model, &ModelConfig::points));
    f.push_back(nested_size("model.joints", &RunConfig::model, &ModelConfig::joints));
    f.push_back(nested_size("model.window", &RunConfig::model, &ModelConfig::window));
    f.push_back(nested_size("model.image_height", &RunConfig::model, &ModelConfig::image_height));
    f.push_back(nested_size("model.image_width", &RunConfig::model, &ModelConfig::image_width));
    f.push_back(nested_size("model.feature_dim", &RunConfig::model, &ModelConfig::feature_dim));
    f.push_back(nested_size("model.gru_hidden", &RunConfig::model, &ModelConfig::gru_hidden));
    f.push_back(nested_size("model.head_hidden", &RunConfig::model, &ModelConfig::head_hidden));
    f.push_back(nested_size("model.ffn_hidden", &RunConfig::model, &ModelConfig::ffn_hidden));
    f.push_back(nested_size("model.baseline_k", &RunConfig::model, &ModelConfig::baseline_k));
    f.push_back({"model.fusion",
                 [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                   try {
                     c.model.fusion = parse_fusion_variant(v);
                   } catch (const Error& e) {
                     throw ConfigError(std::string("model.fusion: ") + e.what());
                   }
                 },
                 [](const RunConfig& c) { return to_string(c.model.fusion); }});
    f.push_back(size_field("model.samples_per_bone", &RunConfig::samples_per_bone));

    f.push_back(nested_double("loss.lambda_motion", &RunConfig::loss, &LossWeights::motion));
    f.push_back(nested_double("loss.lambda_consistency", &RunConfig::loss, &LossWeights::consistency));
    f.push_back(nested_double("loss.lambda_proj", &RunConfig::loss, &LossWeights::proj));
    f.push_back(nested_double("loss.lambda_cd", &RunConfig::loss, &LossWeights::cd_agu));

    f.push_back(nested_double("optim.lr", &RunConfig::adam, &Adam::Options::learning_rate));
    f.push_back(nested_double("optim.beta1", &RunConfig::adam, &Adam::Options::beta1));
    f.push_back(nested_double("optim.beta2", &RunConfig::adam, &Adam::Options::beta2));
    f.push_back(nested_double("optim.epsilon", &RunConfig::adam, &Adam::Options::epsilon));
    f.push_back(size_field("optim.epochs", &RunConfig::epochs));
    f.push_back(size_field("optim.batch_size", &RunConfig::batch_size));

    f.push_back(nested_double("association.iou_threshold", &RunConfig::association, &AssociationConfig::iou_threshold));
    f.push_back(nested_double("association.gate_distance", &RunConfig::association, &AssociationConfig::gate_distance));
    f.push_back({"association.max_misses",
                 [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                   c.association.max_misses = static_cast<int>(to_unsigned("association.max_misses", v));
                 },
                 [](const RunConfig& c) { return std::to_string(c.association.max_misses); }});

    f.push_back(path_field("train.checkpoint", &RunConfig::checkpoint));
    f.push_back(path_field("train.log", &RunConfig::train_log));
    f.push_back(size_field("train.overfit_steps", &RunConfig::overfit_steps));
    f.push_back(size_field("train.max_batches_per_epoch", &RunConfig::max_batches_per_epoch));
    f.push_back(size_field("train.warmup_epochs", &RunConfig::warmup_epochs));

    f.push_back({"eval.mode",
                 [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
                   if (v == "model") c.eval_mode = EvalMode::model;
                   else if (v == "gt") c.eval_mode = EvalMode::gt;
                   else if (v == "static") c.eval_mode = EvalMode::static_pose;
                   else throw ConfigError("eval.mode: expected model, gt or static, got '" + v + "'");
                 },
                 [](const RunConfig& c) {
                   switch (c.eval_mode) {
                     case EvalMode::gt: return std::string("gt");
                     case EvalMode::static_pose: return std::string("static");
                     default: return std::string("model");
                   }
                 }});
    f.push_back({"eval.split",
                 [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.eval_split = v; },
                 [](const RunConfig& c) { return c.eval_split; }});
    f.push_back(path_field("eval.out", &RunConfig::metrics_out));
    f.push_back(path_field("eval.breakdown", &RunConfig::breakdown_out));
    f.push_back(double_field("eval.occlusion", &RunConfig::occlusion));
    f.push_back(size_field("eval.points", &RunConfig::point_budget));

    f.push_back(size_field("ablate.epochs", &RunConfig::ablate_epochs));
    f.push_back(path_field("ablate.out", &RunConfig::ablate_dir));
    f.push_back(path_field("export.out", &RunConfig::export_out));
    return f;
  }();
  return table;
}

bool allowed_density(std::size_t n) { return n == 32 || n == 64 || n == 128 || n == 256; }

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (!allowed_density(model.points)) throw ConfigError("model.points: must be one of 32, 64, 128, 256");
  if (model.joints != 21) throw ConfigError("model.joints: the skeleton has 21 joints");
  if (samples_per_bone == 0) throw ConfigError("model.samples_per_bone: must be positive");
  loss.validate(true);
  if (!(adam.learning_rate > 0.0)) throw ConfigError("optim.lr: must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("optim.beta1: must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("optim.beta2: must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) throw ConfigError("optim.epsilon: must be positive");
  if (batch_size == 0) throw ConfigError("optim.batch_size: must be at least 1");
  if (persons == 0) throw ConfigError("data.persons: must be at least 1");
  if (train_frames < model.window) throw ConfigError("data.train_frames: must cover at least one window");
  if (val_frames < model.window) throw ConfigError("data.val_frames: must cover at least one window");
  if (!(association.iou_threshold >= 0.0 && association.iou_threshold <= 1.0)) {
    throw ConfigError("association.iou_threshold: must lie in [0, 1]");
  }
  if (!(association.gate_distance > 0.0)) throw ConfigError("association.gate_distance: must be positive");
  if (eval_split != "train" && eval_split != "val") throw ConfigError("eval.split: expected train or val");
  if (!(occlusion >= 0.0 && occlusion < 1.0)) throw ConfigError("eval.occlusion: must lie in [0, 1)");
  if (point_budget != 0 && (!allowed_density(point_budget) || point_budget > model.points)) {
    throw ConfigError("eval.points: must be 0 or one of 32, 64, 128, 256 not above model.points");
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir, bool apply_environment) {
  RunConfig c;
  // Default paths are relative too.
  for (const char* key : {"data.dir", "train.checkpoint", "train.log", "eval.out", "eval.breakdown", "ablate.out",
                          "export.out"}) {
    for (const Field& f : fields()) {
      if (f.key == std::string(key)) f.set(c, f.get(c), base_dir);
    }
  }
  for (const auto& [key, value] : parse_key_values(text)) {
    const Field* match = nullptr;
    for (const Field& f : fields()) {
      if (key == f.key) match = &f;
    }
    if (!match) throw ConfigError(key + ": unknown key");
    match->set(c, value, base_dir);
  }
  if (apply_environment) {
    if (const char* env = std::getenv("FUSIONPOSE_SEED"); env && *env) c.seed = to_unsigned("FUSIONPOSE_SEED", env);
  }
  c.association.window = c.model.window;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file, bool apply_environment) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open " + file.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), file.parent_path(), apply_environment);
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace fusionpose
