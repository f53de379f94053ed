#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grfcnn/network.hpp"
#include "grfcnn/tensor.hpp"

namespace grfcnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates mirroring the parameter list. m and v are
// allocated lazily on the first step.
struct AdamState {
  AdamConfig hp;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// One bias-corrected Adam update applied in place:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
// Every gradient is validated before anything is modified; a shape mismatch
// throws ShapeError and a non-finite gradient throws NumericError naming the
// offending tensor.
void adam_step(std::span<const ParamRef> params, const Gradients& grads,
               AdamState& state);

struct EarlyStopPolicy {
  std::size_t patience = 3;
  double min_delta = 1e-4;
  std::optional<double> target_accuracy = 0.97;
  // Either target alone triggers the stop.
  std::optional<double> target_loss;
  std::size_t max_epochs = 12;

  void Validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
  double learning_rate = 0.0;
};

enum class StopReason { kNone, kPlateau, kTarget, kMaxEpochs };

std::string StopReasonName(StopReason reason);

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::kNone;
};

// Stops on (in priority order) a target accuracy or loss reached, `patience` epochs
// without a val-loss improvement larger than min_delta, or max_epochs.
StopDecision early_stop_check(const EarlyStopPolicy& policy,
                              std::span<const EpochRecord> history);

// Epochs since the last val-loss improvement larger than min_delta.
std::size_t epochs_without_improvement(std::span<const EpochRecord> history,
                                       double min_delta);

}  // namespace grfcnn
