#include "fusionpose/nn.hpp"

#include "fusionpose/errors.hpp"
#include "fusionpose/rng.hpp"

#include <cmath>

namespace fusionpose::nn {

Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::uint64_t seed) {
  Tensor t(shape);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void init_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, std::uint64_t seed) {
  store.add(prefix + ".weight", uniform_init({in, out}, in, derive_seed(seed, prefix + ".weight")));
  store.add(prefix + ".bias", uniform_init({1, out}, in, derive_seed(seed, prefix + ".bias")));
}

Var linear(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x) {
  Var w = tape.param(store, prefix + ".weight");
  Var b = tape.param(store, prefix + ".bias");
  return ad::add_row(ad::matmul(x, w), b);
}

void init_mlp(ParameterStore& store, const std::string& prefix,
              const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw ConfigError("mlp '" + prefix + "' needs at least two widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    init_linear(store, prefix + "." + std::to_string(i), widths[i], widths[i + 1], seed);
  }
}

Var mlp(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x,
        std::size_t layers) {
  for (std::size_t i = 0; i < layers; ++i) {
    x = linear(tape, store, prefix + "." + std::to_string(i), x);
    if (i + 1 < layers) x = ad::relu(x);
  }
  return x;
}

void init_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t dim) {
  store.add(prefix + ".gain", Tensor({1, dim}, 1.0));
  store.add(prefix + ".bias", Tensor({1, dim}, 0.0));
}

Var layer_norm(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x) {
  return ad::layer_norm(x, tape.param(store, prefix + ".gain"), tape.param(store, prefix + ".bias"),
                        kLayerNormEps);
}

void init_attention(ParameterStore& store, const std::string& prefix, std::size_t dim,
                    std::uint64_t seed) {
  for (const char* name : {".query", ".key", ".value", ".out"}) {
    init_linear(store, prefix + name, dim, dim, seed);
  }
}

Var attention_weights(Var q, Var k) {
  const double s = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), s));
}

Var self_attention(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x) {
  Var q = linear(tape, store, prefix + ".query", x);
  Var k = linear(tape, store, prefix + ".key", x);
  Var v = linear(tape, store, prefix + ".value", x);
  Var mixed = ad::matmul(attention_weights(q, k), v);
  return linear(tape, store, prefix + ".out", mixed);
}

void init_gru(ParameterStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::uint64_t seed) {
  // Input and recurrent projections for the [reset | update | candidate] gates.
  const std::string names[] = {".input_reset", ".input_update", ".input_candidate",
                               ".hidden_reset", ".hidden_update", ".hidden_candidate"};
  for (int i = 0; i < 6; ++i) {
    init_linear(store, prefix + names[i], i < 3 ? in : hidden, hidden, seed);
  }
}

Var gru_cell(Tape& tape, const ParameterStore& store, const std::string& prefix, Var h, Var x) {
  auto lin = [&](const char* name, Var v) { return linear(tape, store, prefix + name, v); };
  Var r = ad::sigmoid(ad::add(lin(".input_reset", x), lin(".hidden_reset", h)));
  Var z = ad::sigmoid(ad::add(lin(".input_update", x), lin(".hidden_update", h)));
  Var n = ad::tanh(ad::add(lin(".input_candidate", x), ad::mul(r, lin(".hidden_candidate", h))));
  // h' = (1 - z) * n + z * h
  return ad::add(ad::mul(ad::affine(z, -1.0, 1.0), n), ad::mul(z, h));
}

void init_conv(ParameterStore& store, const std::string& prefix, std::size_t kernel,
               std::size_t in_channels, std::size_t out_channels, std::uint64_t seed) {
  init_linear(store, prefix, kernel * kernel * in_channels, out_channels, seed);
}

Var conv2d(Tape& tape, const ParameterStore& store, const std::string& prefix, Var image,
           const ad::ConvGeometry& geometry) {
  return linear(tape, store, prefix, ad::im2col(image, geometry));
}

}  // namespace fusionpose::nn
