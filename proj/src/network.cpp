#include "grfcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "grfcnn/errors.hpp"
#include "grfcnn/tensor_ops.hpp"

namespace grfcnn {
namespace {

constexpr std::size_t kParamTensors = 2 * kConvStages + 4;

Tensor NormalTensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

std::vector<Shape> ParameterShapes(const ModelConfig& c) {
  std::vector<Shape> shapes;
  std::size_t c_in = c.input_channels;
  for (std::size_t s = 0; s < kConvStages; ++s) {
    shapes.push_back({c.kernel, c.kernel, c_in, c.filters(s)});
    shapes.push_back({c.filters(s)});
    c_in = c.filters(s);
  }
  const std::vector<Shape> acts = activation_shapes(c);
  const std::size_t flat = acts[2 * kConvStages][0];
  shapes.push_back({flat, c.hidden_units()});
  shapes.push_back({c.hidden_units()});
  shapes.push_back({c.hidden_units(), c.classes});
  shapes.push_back({c.classes});
  return shapes;
}

std::string ParameterName(std::size_t index) {
  if (index < 2 * kConvStages) {
    return "conv" + std::to_string(index / 2 + 1) + (index % 2 ? ".bias" : ".weights");
  }
  const std::size_t d = (index - 2 * kConvStages) / 2 + 1;
  return "dense" + std::to_string(d) + (index % 2 ? ".bias" : ".weights");
}

}  // namespace

std::size_t ModelConfig::filters(std::size_t stage) const {
  return conv_filters.at(stage) / scale_divisor;
}

std::size_t ModelConfig::hidden_units() const { return dense_units / scale_divisor; }

void ModelConfig::Validate() const {
  if (scale_divisor == 0) throw UsageError("scale_divisor must be >= 1");
  for (std::size_t s = 0; s < kConvStages; ++s) {
    if (conv_filters[s] % scale_divisor != 0) {
      throw UsageError("scale_divisor " + std::to_string(scale_divisor) +
                       " does not divide conv stage " + std::to_string(s + 1) + " filters");
    }
    if (filters(s) == 0) {
      throw UsageError("conv stage " + std::to_string(s + 1) +
                       " has no filters after dividing by scale_divisor " +
                       std::to_string(scale_divisor));
    }
  }
  if (dense_units % scale_divisor != 0) {
    throw UsageError("scale_divisor does not divide dense_units");
  }
  if (hidden_units() == 0) throw UsageError("dense layer has no units after scaling");
  if (kernel == 0 || kernel % 2 == 0) throw UsageError("kernel must be odd and >= 1");
  if (classes < 2) throw UsageError("need at least two classes");
  if (input_height == 0 || input_width == 0 || input_channels == 0) {
    throw UsageError("input shape dimensions must be >= 1");
  }
  try {
    activation_shapes(*this);
  } catch (const ShapeError& e) {
    throw UsageError(std::string("input shape collapses during pooling: ") + e.what());
  }
}

std::vector<Shape> activation_shapes(const ModelConfig& c) {
  std::vector<Shape> shapes;
  std::size_t h = c.input_height, w = c.input_width;
  const std::size_t pad = c.kernel / 2;
  for (std::size_t s = 0; s < kConvStages; ++s) {
    h = sliding_output_length(h, c.kernel, 1, pad);
    w = sliding_output_length(w, c.kernel, 1, pad);
    shapes.push_back({h, w, c.filters(s)});
    const FeatureShape pooled =
        pool_output_shape({h, w, c.filters(s), c.pool_size, c.pool_stride, 0});
    h = pooled.h;
    w = pooled.w;
    shapes.push_back({h, w, c.filters(s)});
  }
  shapes.push_back({h * w * c.filters(kConvStages - 1)});
  shapes.push_back({c.hidden_units()});
  shapes.push_back({c.classes});
  return shapes;
}

void Gradients::Add(const Gradients& other, double scale) {
  if (tensors.size() != other.tensors.size()) {
    throw ShapeError("gradient sets have different tensor counts");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto dst = tensors[i].data();
    const auto src = other.tensors[i].data();
    if (dst.size() != src.size()) throw ShapeError("gradient tensor size mismatch");
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void Gradients::Scale(double factor) {
  for (Tensor& t : tensors)
    for (double& v : t.data()) v *= factor;
}

Network::Network(const ModelConfig& config, std::uint64_t seed)
    : config_(config), seed_(seed) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const std::vector<Shape> shapes = ParameterShapes(config_);
  std::size_t c_in = config_.input_channels;
  for (std::size_t s = 0; s < kConvStages; ++s) {
    const double fan_in = static_cast<double>(config_.kernel * config_.kernel * c_in);
    convs_[s].weights = NormalTensor(shapes[2 * s], std::sqrt(2.0 / fan_in), rng);
    convs_[s].bias = Tensor(shapes[2 * s + 1]);
    convs_[s].padding = config_.kernel / 2;
    convs_[s].stride = 1;
    c_in = config_.filters(s);
  }
  const Shape& hw = shapes[2 * kConvStages];
  hidden_.weights = NormalTensor(hw, std::sqrt(2.0 / static_cast<double>(hw[0])), rng);
  hidden_.bias = Tensor(shapes[2 * kConvStages + 1]);
  const Shape& ow = shapes[2 * kConvStages + 2];
  output_.weights = NormalTensor(ow, std::sqrt(1.0 / static_cast<double>(ow[0])), rng);
  output_.bias = Tensor(shapes[2 * kConvStages + 3]);
}

Network::Network(const ModelConfig& config, std::uint64_t seed,
                 std::vector<Tensor> parameters)
    : config_(config), seed_(seed) {
  config_.Validate();
  const std::vector<Shape> shapes = ParameterShapes(config_);
  if (parameters.size() != kParamTensors) {
    throw ShapeError("expected " + std::to_string(kParamTensors) +
                     " parameter tensors, got " + std::to_string(parameters.size()));
  }
  for (std::size_t i = 0; i < kParamTensors; ++i) {
    if (parameters[i].shape() != shapes[i]) {
      throw ShapeError(ParameterName(i) + " has shape " +
                       ShapeToString(parameters[i].shape()) + ", config expects " +
                       ShapeToString(shapes[i]));
    }
  }
  for (std::size_t s = 0; s < kConvStages; ++s) {
    convs_[s].weights = std::move(parameters[2 * s]);
    convs_[s].bias = std::move(parameters[2 * s + 1]);
    convs_[s].padding = config_.kernel / 2;
    convs_[s].stride = 1;
  }
  hidden_.weights = std::move(parameters[2 * kConvStages]);
  hidden_.bias = std::move(parameters[2 * kConvStages + 1]);
  output_.weights = std::move(parameters[2 * kConvStages + 2]);
  output_.bias = std::move(parameters[2 * kConvStages + 3]);
}

Tensor Network::Forward(const Tensor& input, Workspace& ws) const {
  const Shape expected{config_.input_height, config_.input_width,
                       config_.input_channels};
  Tensor x = input;
  if (x.rank() == 2 && config_.input_channels == 1) {
    x = std::move(x).Reshaped(expected);
  }
  if (x.shape() != expected) {
    throw ShapeError("network input " + ShapeToString(input.shape()) +
                     " does not match " + ShapeToString(expected));
  }
  for (std::size_t s = 0; s < kConvStages; ++s) {
    ws.conv_out[s] = conv_forward(x, convs_[s], &ws.conv[s]);
    x = maxpool_forward(relu_forward(ws.conv_out[s]), config_.pool_size,
                        config_.pool_stride, &ws.pool[s]);
  }
  ws.flat = flatten(x);
  ws.hidden_pre = dense_forward(ws.flat, hidden_);
  ws.hidden = relu_forward(ws.hidden_pre);
  ws.logits = dense_forward(ws.hidden, output_);
  ws.probs = softmax_xent_forward(ws.logits, Tensor(ws.logits.shape())).probs;
  return ws.probs;
}

SoftmaxXent Network::ForwardLoss(const Tensor& input, const Tensor& one_hot,
                                 Workspace& ws) const {
  Forward(input, ws);
  return softmax_xent_forward(ws.logits, one_hot);
}

Gradients Network::Backward(const Workspace& ws, const Tensor& one_hot) const {
  if (ws.probs.empty()) throw StateError("Backward called before Forward");
  Gradients grads;
  grads.tensors.resize(kParamTensors);

  const Tensor g_logits = softmax_xent_backward(ws.probs, one_hot);
  DenseGrads out = dense_backward(g_logits, ws.hidden, output_);
  grads.tensors[2 * kConvStages + 2] = std::move(out.weights);
  grads.tensors[2 * kConvStages + 3] = std::move(out.bias);

  DenseGrads hid = dense_backward(relu_backward(out.input, ws.hidden_pre), ws.flat, hidden_);
  grads.tensors[2 * kConvStages] = std::move(hid.weights);
  grads.tensors[2 * kConvStages + 1] = std::move(hid.bias);

  const std::size_t last = kConvStages - 1;
  Shape pooled_shape = ws.conv_out[last].shape();
  pooled_shape[0] = sliding_output_length(pooled_shape[0], config_.pool_size,
                                          config_.pool_stride, 0);
  pooled_shape[1] = sliding_output_length(pooled_shape[1], config_.pool_size,
                                          config_.pool_stride, 0);
  Tensor g = std::move(hid.input).Reshaped(pooled_shape);
  for (std::size_t s = kConvStages; s-- > 0;) {
    const Tensor g_act = maxpool_backward(g, ws.pool[s]);
    ConvGrads cg = conv_backward(relu_backward(g_act, ws.conv_out[s]), ws.conv[s], convs_[s]);
    grads.tensors[2 * s] = std::move(cg.weights);
    grads.tensors[2 * s + 1] = std::move(cg.bias);
    g = std::move(cg.input);
  }
  return grads;
}

Tensor Network::Forward(const Tensor& input) { return Forward(input, scratch_); }

Gradients Network::Backward(const Tensor& one_hot) { return Backward(scratch_, one_hot); }

std::vector<ParamRef> Network::Parameters() {
  std::vector<ParamRef> refs;
  refs.reserve(kParamTensors);
  for (std::size_t s = 0; s < kConvStages; ++s) {
    refs.push_back({ParameterName(2 * s), &convs_[s].weights});
    refs.push_back({ParameterName(2 * s + 1), &convs_[s].bias});
  }
  refs.push_back({ParameterName(2 * kConvStages), &hidden_.weights});
  refs.push_back({ParameterName(2 * kConvStages + 1), &hidden_.bias});
  refs.push_back({ParameterName(2 * kConvStages + 2), &output_.weights});
  refs.push_back({ParameterName(2 * kConvStages + 3), &output_.bias});
  return refs;
}

std::vector<ConstParamRef> Network::Parameters() const {
  std::vector<ConstParamRef> refs;
  for (const ParamRef& r : const_cast<Network*>(this)->Parameters())
    refs.push_back({r.name, r.value});
  return refs;
}

Gradients Network::ZeroGradients() const {
  Gradients g;
  for (const ConstParamRef& r : Parameters()) g.tensors.emplace_back(r.value->shape());
  return g;
}

std::size_t Network::ParameterCount() const {
  std::size_t n = 0;
  for (const ConstParamRef& r : Parameters()) n += r.value->size();
  return n;
}

bool operator==(const Network& a, const Network& b) {
  if (!(a.config_ == b.config_) || a.seed_ != b.seed_) return false;
  const auto pa = a.Parameters();
  const auto pb = b.Parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!(*pa[i].value == *pb[i].value)) return false;
  return true;
}

}  // namespace grfcnn
