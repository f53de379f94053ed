#pragma once

#include <cstddef>
#include <vector>

#include "grfcnn/tensor.hpp"

namespace grfcnn {

// 2-D convolution over an h x w x c_in map. Weights are laid out
// [kernel, kernel, c_in, c_out] so that, flattened to (k*k*c_in) x c_out, they
// line up with the im2col patch columns.
struct ConvLayer {
  Tensor weights;
  Tensor bias;  // [c_out]
  std::size_t padding = 1;
  std::size_t stride = 1;

  std::size_t kernel() const { return weights.dim(0); }
  std::size_t in_channels() const { return weights.dim(2); }
  std::size_t out_channels() const { return weights.dim(3); }
};

struct ConvCache {
  Shape input_shape;
  Tensor patches;  // im2col of the forward input
};

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

Tensor conv_forward(const Tensor& input, const ConvLayer& layer,
                    ConvCache* cache = nullptr);
ConvGrads conv_backward(const Tensor& grad_out, const ConvCache& cache,
                        const ConvLayer& layer);

Tensor relu_forward(const Tensor& x);
// The gradient at exactly zero is zero.
Tensor relu_backward(const Tensor& grad_out, const Tensor& x);

struct PoolCache {
  Shape input_shape;
  std::vector<std::size_t> argmax;
};

Tensor maxpool_forward(const Tensor& x, std::size_t f, std::size_t s,
                       PoolCache* cache = nullptr);
Tensor maxpool_backward(const Tensor& grad_out, const PoolCache& cache);

// y = x^T W + b with W stored n_in x n_out.
struct DenseLayer {
  Tensor weights;
  Tensor bias;  // [n_out]

  std::size_t in_features() const { return weights.dim(0); }
  std::size_t out_features() const { return weights.dim(1); }
};

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

Tensor dense_forward(const Tensor& x, const DenseLayer& layer);
DenseGrads dense_backward(const Tensor& grad_out, const Tensor& x,
                          const DenseLayer& layer);

inline constexpr double kCrossEntropyClip = 1e-12;

struct SoftmaxXent {
  Tensor probs;
  double loss = 0.0;
};

// Max-shifted softmax followed by categorical cross-entropy,
// loss = -sum(one_hot * ln(probs + 1e-12)).
SoftmaxXent softmax_xent_forward(const Tensor& logits, const Tensor& one_hot);
// probs - one_hot.
Tensor softmax_xent_backward(const Tensor& probs, const Tensor& one_hot);

}  // namespace grfcnn
