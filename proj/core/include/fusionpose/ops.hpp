#pragma once

#include "fusionpose/tape.hpp"

#include <cstddef>
#include <vector>

// Differentiable primitives. Every op records its result on the tape of its
// first operand and registers the exact vector-Jacobian product.
namespace fusionpose::ad {

Var matmul(Var a, Var b);                 // a[m x k] * b[k x n]
Var matmul_nt(Var a, Var b);              // a[m x k] * b[n x k]^T
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                    // elementwise
Var scale(Var a, double s);
Var affine(Var a, double s, double shift);  // s * a + shift
Var add_row(Var a, Var row);              // row [1 x n] broadcast over rows of a
Var mul_row(Var a, Var row);              // row [1 x n] broadcast over rows of a
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var max_rows(Var a);                      // column-wise max -> [1 x n]
Var mean_rows(Var a);                     // column-wise mean -> [1 x n]
Var repeat_rows(Var row, std::size_t n);  // [1 x c] -> [n x c]
Var sum(Var a);                           // -> [1 x 1]
Var reshape(Var a, Shape shape);
Var row_norms(Var a);                     // Euclidean norm of each row -> [m x 1]
Var stop_gradient(Var a);

// 3x3-style patch extraction for a channels-last image stored as
// [(height*width) x channels]. Output is [(out_h*out_w) x (k*k*channels)].
struct ConvGeometry {
  std::size_t height = 0, width = 0, channels = 0;
  std::size_t kernel = 3, stride = 1, pad = 1;
  std::size_t out_height() const { return (height + 2 * pad - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * pad - kernel) / stride + 1; }
};
Var im2col(Var image, const ConvGeometry& g);

// out[r] = sum_k weights[r][k] * a[indices[r][k]]; a fixed sparse linear map.
struct RowGather {
  std::vector<std::vector<std::size_t>> indices;
  std::vector<std::vector<double>> weights;
};
Var gather_rows(Var a, const RowGather& gather);

}  // namespace fusionpose::ad
