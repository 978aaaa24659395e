#pragma once

#include "fusionpose/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace fusionpose {

struct Parameter {
  Tensor value;
  Tensor grad;    // accumulated by Tape::accumulate_gradients
  Tensor moment1; // optimizer state
  Tensor moment2;
};

// Named parameters keyed by dot-separated path. Iteration order is
// lexicographic in the path, which fixes every reduction order downstream.
class ParameterStore {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  Parameter& add(const std::string& path, Tensor init);
  bool contains(std::string_view path) const;
  const Parameter& get(std::string_view path) const;
  Parameter& get(std::string_view path);
  const Tensor& value(std::string_view path) const { return get(path).value; }

  void zero_grad();
  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

  // Values only; gradient and optimizer state are not part of a snapshot.
  std::map<std::string, Tensor> values() const;
  // Overwrites values of existing parameters; every store path must be present.
  void load_values(const std::map<std::string, Tensor>& values);

 private:
  Map params_;
};

// `.fpck` checkpoint: "FPCK" magic, u32 version, u64 entry count, then per entry
// u32 path length, path bytes, u32 rank, u64 dims, little-endian f64 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& file,
                      const std::map<std::string, Tensor>& entries);
std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& file);

// Adaptive moment estimation over every parameter in the store.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam() = default;
  explicit Adam(Options options) : options_(options) {}

  void step(ParameterStore& store);
  std::int64_t steps_taken() const { return steps_; }
  void set_steps_taken(std::int64_t steps) { steps_ = steps; }
  const Options& options() const { return options_; }

 private:
  Options options_{};
  std::int64_t steps_ = 0;
};

}  // namespace fusionpose
