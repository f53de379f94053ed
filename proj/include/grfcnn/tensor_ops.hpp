#pragma once

#include <cstddef>
#include <vector>

#include "grfcnn/tensor.hpp"

namespace grfcnn {

// Geometry of a sliding-window operation over an n_h x n_w x n_c feature map.
struct ShapeSpec {
  std::size_t n_h = 1;
  std::size_t n_w = 1;
  std::size_t n_c = 1;
  std::size_t f = 1;  // square window size
  std::size_t s = 1;  // stride
  std::size_t p = 0;  // zero padding on every side
};

struct FeatureShape {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 0;

  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

// floor((n + 2p - f) / s) + 1 along both spatial axes; channels unchanged.
// Throws ShapeError if the spec is invalid or the window does not fit.
FeatureShape pool_output_shape(const ShapeSpec& spec);

// Output length of a 1-D sliding window; shared by every windowed op.
std::size_t sliding_output_length(std::size_t n, std::size_t f, std::size_t s,
                                  std::size_t p);

// True discrete 2-D convolution, S(i, j) = sum_m sum_n I(m, n) K(i - m, j - n),
// over the positions where the flipped kernel lies inside the zero-padded
// input. Evaluated literally as the double sum; this is a reference primitive,
// not the layer path.
Tensor convolve2d_flipped(const Tensor& input, const Tensor& kernel,
                      std::size_t padding);

// Sliding-window product-sum without kernel flip (what conv layers compute).
// Runs through the patch-matrix path.
Tensor cross_correlate2d(const Tensor& input, const Tensor& kernel,
                         std::size_t padding, std::size_t stride);

// Rotates a rank-2 kernel by 180 degrees.
Tensor flip180(const Tensor& kernel);

struct MaxPoolResult {
  Tensor output;
  // For every output element, the flat index into the input of the winner.
  std::vector<std::size_t> argmax;
};

// Per-channel max pooling of an h x w x c tensor with zero padding. Ties pick
// the lowest flat input index.
MaxPoolResult maxpool2d(const Tensor& input, std::size_t f, std::size_t s);

Tensor flatten(const Tensor& input);

// Patch-matrix ("im2col") restructuring of an h x w x c tensor for a kh x kw
// window. Row r holds the zero-padded window at output position r (row-major
// over the output grid); columns are ordered (ki, kj, channel).
Tensor im2col(const Tensor& input, std::size_t kh, std::size_t kw,
              std::size_t padding, std::size_t stride);

// Adjoint of im2col: scatters patch-matrix rows back onto an input-shaped
// tensor, summing overlapping contributions and dropping padding.
Tensor col2im(const Tensor& patches, const Shape& input_shape, std::size_t kh,
              std::size_t kw, std::size_t padding, std::size_t stride);

namespace linalg {

// c += a * b for row-major a (m x k), b (k x n), c (m x n).
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c);
// c += a^T * b for row-major a (m x k), b (m x n), c (k x n).
void gemm_at_b_acc(const Tensor& a, const Tensor& b, Tensor& c);
// c = a * b^T for row-major a (m x n), b (k x n), c (m x k).
void gemm_a_bt(const Tensor& a, const Tensor& b, Tensor& c);

}  // namespace linalg

}  // namespace grfcnn
