#include "fusionpose/parameter_store.hpp"

#include "fusionpose/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace fusionpose {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

Parameter& ParameterStore::add(const std::string& path, Tensor init) {
  if (params_.contains(path)) throw ContractError("duplicate parameter path '" + path + "'");
  Parameter p;
  p.grad = Tensor(init.shape(), 0.0);
  p.moment1 = Tensor(init.shape(), 0.0);
  p.moment2 = Tensor(init.shape(), 0.0);
  p.value = std::move(init);
  return params_.emplace(path, std::move(p)).first->second;
}

bool ParameterStore::contains(std::string_view path) const { return params_.find(path) != params_.end(); }

const Parameter& ParameterStore::get(std::string_view path) const {
  auto it = params_.find(path);
  if (it == params_.end()) throw ContractError("unknown parameter '" + std::string(path) + "'");
  return it->second;
}

Parameter& ParameterStore::get(std::string_view path) {
  auto it = params_.find(path);
  if (it == params_.end()) throw ContractError("unknown parameter '" + std::string(path) + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.fill(0.0);
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

std::map<std::string, Tensor> ParameterStore::values() const {
  std::map<std::string, Tensor> out;
  for (const auto& [path, p] : params_) out.emplace(path, p.value);
  return out;
}

void ParameterStore::load_values(const std::map<std::string, Tensor>& values) {
  for (auto& [path, p] : params_) {
    auto it = values.find(path);
    if (it == values.end()) throw ContractError("checkpoint is missing parameter '" + path + "'");
    if (it->second.shape() != p.value.shape()) {
      throw ContractError("checkpoint parameter '" + path + "' has shape " +
                          shape_string(it->second.shape()) + ", expected " +
                          shape_string(p.value.shape()));
    }
    p.value = it->second;
  }
}

namespace {

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& is, const std::filesystem::path& file) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated checkpoint " + file.string());
  return v;
}

constexpr char kMagic[4] = {'F', 'P', 'C', 'K'};

}  // namespace

void write_checkpoint(const std::filesystem::path& file,
                      const std::map<std::string, Tensor>& entries) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + file.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, entries.size());
  for (const auto& [path, t] : entries) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(path.size()));
    os.write(path.data(), static_cast<std::streamsize>(path.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw IoError("failed writing " + file.string());
}

std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + file.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a .fpck file: " + file.string());
  auto version = take<std::uint32_t>(is, file);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + file.string());
  }
  auto count = take<std::uint64_t>(is, file);
  std::map<std::string, Tensor> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = take<std::uint32_t>(is, file);
    std::string path(len, '\0');
    is.read(path.data(), len);
    auto rank = take<std::uint32_t>(is, file);
    Shape shape(rank);
    for (auto& d : shape) d = take<std::uint64_t>(is, file);
    std::vector<double> data(shape_size(shape));
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw IoError("truncated checkpoint " + file.string());
    out.emplace(std::move(path), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void Adam::step(ParameterStore& store) {
  ++steps_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (auto& [_, p] : store) {
    auto w = p.value.data();
    auto g = p.grad.data();
    auto m = p.moment1.data();
    auto v = p.moment2.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
}

}  // namespace fusionpose
