#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "grfcnn/layers.hpp"
#include "grfcnn/tensor.hpp"

namespace grfcnn {

inline constexpr std::size_t kConvStages = 4;

// Architecture hyperparameters. Defaults are the full-size model; a
// scale_divisor > 1 divides every filter count and the hidden dense width for
// desk-scale runs while keeping the layer structure.
struct ModelConfig {
  std::array<std::size_t, kConvStages> conv_filters{128, 256, 512, 1024};
  std::size_t kernel = 3;
  std::size_t pool_size = 2;
  std::size_t pool_stride = 2;
  std::size_t dense_units = 512;
  std::size_t classes = 4;
  std::size_t input_height = 500;
  std::size_t input_width = 18;
  std::size_t input_channels = 1;
  std::size_t scale_divisor = 1;

  // Effective (post-scaling) widths.
  std::size_t filters(std::size_t stage) const;
  std::size_t hidden_units() const;

  // Throws UsageError for zero counts, non-dividing scale divisors or
  // geometries that collapse below 1x1.
  void Validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Every intermediate activation shape, in order: for each stage the conv
// output then the pooled output, followed by the flattened length, the hidden
// width and the class count.
std::vector<Shape> activation_shapes(const ModelConfig& config);

struct ParamRef {
  std::string name;
  Tensor* value;
};

struct ConstParamRef {
  std::string name;
  const Tensor* value;
};

// One tensor per parameter, in Network::Parameters() order.
struct Gradients {
  std::vector<Tensor> tensors;

  void Add(const Gradients& other, double scale = 1.0);
  void Scale(double factor);
};

// [conv -> relu -> maxpool] x 4 -> flatten -> dense + relu -> dense + softmax.
class Network {
 public:
  // Forward activations needed by Backward. One workspace per concurrent
  // caller; the network's weights are read-only during Forward/Backward.
  struct Workspace {
    std::array<ConvCache, kConvStages> conv;
    std::array<Tensor, kConvStages> conv_out;  // pre-activation
    std::array<PoolCache, kConvStages> pool;
    Tensor flat;
    Tensor hidden_pre;
    Tensor hidden;
    Tensor logits;
    Tensor probs;
  };

  // He-normal weights (std sqrt(2 / fan_in)) for layers feeding a ReLU,
  // LeCun-normal (sqrt(1 / fan_in)) for the softmax layer, zero biases.
  Network(const ModelConfig& config, std::uint64_t seed);
  // Adopts existing parameter tensors (e.g. from a checkpoint), validating
  // their shapes against the config.
  Network(const ModelConfig& config, std::uint64_t seed,
          std::vector<Tensor> parameters);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  // input: h x w or h x w x c matching the config. Returns class probabilities.
  Tensor Forward(const Tensor& input, Workspace& ws) const;
  SoftmaxXent ForwardLoss(const Tensor& input, const Tensor& one_hot,
                          Workspace& ws) const;
  Gradients Backward(const Workspace& ws, const Tensor& one_hot) const;

  // Convenience overloads using an internal workspace (exclusive use).
  Tensor Forward(const Tensor& input);
  Gradients Backward(const Tensor& one_hot);

  std::vector<ParamRef> Parameters();
  std::vector<ConstParamRef> Parameters() const;
  Gradients ZeroGradients() const;
  std::size_t ParameterCount() const;

  const ConvLayer& conv(std::size_t stage) const { return convs_.at(stage); }
  const DenseLayer& hidden() const { return hidden_; }
  const DenseLayer& output() const { return output_; }

  friend bool operator==(const Network& a, const Network& b);

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  std::array<ConvLayer, kConvStages> convs_;
  DenseLayer hidden_;
  DenseLayer output_;
  Workspace scratch_;
};

}  // namespace grfcnn
