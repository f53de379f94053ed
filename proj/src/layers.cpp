#include "grfcnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grfcnn/errors.hpp"
#include "grfcnn/tensor_ops.hpp"

namespace grfcnn {
namespace {

void CheckConvLayer(const ConvLayer& layer) {
  if (layer.weights.rank() != 4 || layer.weights.dim(0) != layer.weights.dim(1)) {
    throw ShapeError("conv weights must be [k, k, c_in, c_out], got " +
                     ShapeToString(layer.weights.shape()));
  }
  if (layer.bias.rank() != 1 || layer.bias.dim(0) != layer.out_channels()) {
    throw ShapeError("conv bias must have c_out entries");
  }
}

void CheckDenseLayer(const DenseLayer& layer) {
  if (layer.weights.rank() != 2) throw ShapeError("dense weights must be rank 2");
  if (layer.bias.rank() != 1 || layer.bias.dim(0) != layer.out_features()) {
    throw ShapeError("dense bias must have n_out entries");
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": " + ShapeToString(a.shape()) +
                     " vs " + ShapeToString(b.shape()));
  }
}

}  // namespace

Tensor conv_forward(const Tensor& input, const ConvLayer& layer,
                    ConvCache* cache) {
  CheckConvLayer(layer);
  const Tensor x = input.rank() == 2 ? input.Reshaped({input.dim(0), input.dim(1), 1})
                                     : input;
  if (x.rank() != 3 || x.dim(2) != layer.in_channels()) {
    throw ShapeError("conv input " + ShapeToString(input.shape()) +
                     " does not have " + std::to_string(layer.in_channels()) +
                     " channels");
  }
  const std::size_t k = layer.kernel();
  const std::size_t out_h = sliding_output_length(x.dim(0), k, layer.stride, layer.padding);
  const std::size_t out_w = sliding_output_length(x.dim(1), k, layer.stride, layer.padding);
  const std::size_t c_out = layer.out_channels();

  Tensor patches = im2col(x, k, k, layer.padding, layer.stride);
  const Tensor w = layer.weights.Reshaped({k * k * layer.in_channels(), c_out});

  Tensor out({out_h * out_w, c_out});
  auto o = out.data();
  const auto b = layer.bias.data();
  for (std::size_t r = 0; r < out_h * out_w; ++r)
    std::copy(b.begin(), b.end(), o.begin() + r * c_out);
  linalg::gemm_acc(patches, w, out);

  if (cache != nullptr) {
    cache->input_shape = x.shape();
    cache->patches = std::move(patches);
  }
  return std::move(out).Reshaped({out_h, out_w, c_out});
}

ConvGrads conv_backward(const Tensor& grad_out, const ConvCache& cache,
                        const ConvLayer& layer) {
  CheckConvLayer(layer);
  if (cache.patches.empty()) {
    throw StateError("conv_backward called without a forward cache");
  }
  const std::size_t k = layer.kernel();
  const std::size_t c_in = layer.in_channels(), c_out = layer.out_channels();
  const std::size_t positions = cache.patches.dim(0);
  if (grad_out.size() != positions * c_out) {
    throw ShapeError("conv grad_out " + ShapeToString(grad_out.shape()) +
                     " does not match the cached forward output");
  }
  const Tensor g = grad_out.Reshaped({positions, c_out});

  ConvGrads grads;
  grads.weights = Tensor({k * k * c_in, c_out});
  linalg::gemm_at_b_acc(cache.patches, g, grads.weights);
  grads.weights = std::move(grads.weights).Reshaped(layer.weights.shape());

  grads.bias = Tensor({c_out});
  auto gb = grads.bias.data();
  const auto gd = g.data();
  for (std::size_t r = 0; r < positions; ++r)
    for (std::size_t o = 0; o < c_out; ++o) gb[o] += gd[r * c_out + o];

  Tensor grad_patches({positions, k * k * c_in});
  linalg::gemm_a_bt(g, layer.weights.Reshaped({k * k * c_in, c_out}), grad_patches);
  grads.input = col2im(grad_patches, cache.input_shape, k, k, layer.padding,
                       layer.stride);
  return grads;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& x) {
  RequireSameShape(grad_out, x, "relu_backward");
  Tensor g = grad_out;
  auto gd = g.data();
  const auto xd = x.data();
  for (std::size_t i = 0; i < gd.size(); ++i)
    if (!(xd[i] > 0.0)) gd[i] = 0.0;
  return g;
}

Tensor maxpool_forward(const Tensor& x, std::size_t f, std::size_t s,
                       PoolCache* cache) {
  MaxPoolResult r = maxpool2d(x, f, s);
  if (cache != nullptr) {
    cache->input_shape = x.shape();
    cache->argmax = std::move(r.argmax);
  }
  return std::move(r.output);
}

Tensor maxpool_backward(const Tensor& grad_out, const PoolCache& cache) {
  if (cache.input_shape.empty() || cache.argmax.size() != grad_out.size()) {
    throw StateError("max-pool argmax map is stale or missing for grad of shape " +
                     ShapeToString(grad_out.shape()));
  }
  Tensor grad_x(cache.input_shape);
  auto gx = grad_x.data();
  const auto go = grad_out.data();
  for (std::size_t i = 0; i < go.size(); ++i) {
    if (cache.argmax[i] >= gx.size()) throw StateError("argmax index out of range");
    gx[cache.argmax[i]] += go[i];
  }
  return grad_x;
}

Tensor dense_forward(const Tensor& x, const DenseLayer& layer) {
  CheckDenseLayer(layer);
  if (x.size() != layer.in_features()) {
    throw ShapeError("dense input length " + std::to_string(x.size()) +
                     " != n_in " + std::to_string(layer.in_features()));
  }
  Tensor y = layer.bias.Reshaped({1, layer.out_features()});
  linalg::gemm_acc(x.Reshaped({1, x.size()}), layer.weights, y);
  return std::move(y).Reshaped({layer.out_features()});
}

DenseGrads dense_backward(const Tensor& grad_out, const Tensor& x,
                          const DenseLayer& layer) {
  CheckDenseLayer(layer);
  if (x.size() != layer.in_features() || grad_out.size() != layer.out_features()) {
    throw ShapeError("dense_backward operand lengths do not match the layer");
  }
  const Tensor xr = x.Reshaped({1, x.size()});
  const Tensor gr = grad_out.Reshaped({1, grad_out.size()});
  DenseGrads grads;
  grads.weights = Tensor(layer.weights.shape());
  linalg::gemm_at_b_acc(xr, gr, grads.weights);
  grads.bias = grad_out.Reshaped({grad_out.size()});
  Tensor gx({1, x.size()});
  linalg::gemm_a_bt(gr, layer.weights, gx);
  grads.input = std::move(gx).Reshaped(x.shape());
  return grads;
}

SoftmaxXent softmax_xent_forward(const Tensor& logits, const Tensor& one_hot) {
  if (logits.rank() != 1 || one_hot.shape() != logits.shape()) {
    throw ShapeError("softmax expects matching rank-1 logits and targets");
  }
  if (!logits.AllFinite()) throw NumericError("non-finite logits in softmax");
  const auto z = logits.data();
  const double shift = *std::max_element(z.begin(), z.end());
  SoftmaxXent r{Tensor(logits.shape()), 0.0};
  auto p = r.probs.data();
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - shift);
    total += p[i];
  }
  for (double& v : p) v /= total;
  const auto t = one_hot.data();
  // min(1, .) keeps the clipped term from dipping below zero at p == 1.
  for (std::size_t i = 0; i < z.size(); ++i)
    if (t[i] != 0.0)
      r.loss -= t[i] * std::log(std::min(1.0, p[i] + kCrossEntropyClip));
  return r;
}

Tensor softmax_xent_backward(const Tensor& probs, const Tensor& one_hot) {
  RequireSameShape(probs, one_hot, "softmax_xent_backward");
  Tensor g = probs;
  auto gd = g.data();
  const auto t = one_hot.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] -= t[i];
  return g;
}

}  // namespace grfcnn
