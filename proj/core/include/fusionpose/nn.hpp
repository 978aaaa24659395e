#pragma once

#include "fusionpose/ops.hpp"
#include "fusionpose/parameter_store.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Parameterized layers. Each layer owns the parameters below its prefix:
// `init_*` registers them, the forward function binds them to a tape.
// Weights and biases start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// seeded per path so registration order never changes the values.
namespace fusionpose::nn {

inline constexpr double kLayerNormEps = 1e-5;

Tensor uniform_init(const Shape& shape, std::size_t fan_in, std::uint64_t seed);

// y = x W + b, W is [in x out].
void init_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, std::uint64_t seed);
Var linear(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x);

// Linear layers with ReLU between them (none after the last).
void init_mlp(ParameterStore& store, const std::string& prefix,
              const std::vector<std::size_t>& widths, std::uint64_t seed);
Var mlp(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x,
        std::size_t layers);

void init_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t dim);
Var layer_norm(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x);

// Single-head scaled dot-product attention with output projection.
void init_attention(ParameterStore& store, const std::string& prefix, std::size_t dim,
                    std::uint64_t seed);
Var self_attention(Tape& tape, const ParameterStore& store, const std::string& prefix, Var x);

// softmax(q k^T / sqrt(d)) for q [n x d], k [m x d].
Var attention_weights(Var q, Var k);

// Standard GRU cell; h [1 x hidden], x [1 x in].
void init_gru(ParameterStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::uint64_t seed);
Var gru_cell(Tape& tape, const ParameterStore& store, const std::string& prefix, Var h, Var x);

// 3x3 convolution on a channels-last image [(h*w) x c_in]; returns [(oh*ow) x c_out].
void init_conv(ParameterStore& store, const std::string& prefix, std::size_t kernel,
               std::size_t in_channels, std::size_t out_channels, std::uint64_t seed);
Var conv2d(Tape& tape, const ParameterStore& store, const std::string& prefix, Var image,
           const ad::ConvGeometry& geometry);

}  // namespace fusionpose::nn
