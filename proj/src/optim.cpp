#include "grfcnn/optim.hpp"

#include <cmath>
#include <limits>

#include "grfcnn/errors.hpp"

namespace grfcnn {

void adam_step(std::span<const ParamRef> params, const Gradients& grads,
               AdamState& state) {
  if (params.size() != grads.tensors.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) +
                     " parameters but " + std::to_string(grads.tensors.size()) +
                     " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].value->shape() != grads.tensors[i].shape()) {
      throw ShapeError("adam_step: gradient for " + params[i].name + " has shape " +
                       ShapeToString(grads.tensors[i].shape()) + ", parameter has " +
                       ShapeToString(params[i].value->shape()));
    }
    if (!grads.tensors[i].AllFinite()) {
      throw NumericError("non-finite gradient for parameter " + params[i].name);
    }
  }
  if (state.m.empty()) {
    for (const ParamRef& p : params) {
      state.m.emplace_back(p.value->shape());
      state.v.emplace_back(p.value->shape());
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match the parameter list");
  }

  const AdamConfig& hp = state.hp;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(hp.beta1, t);
  const double bc2 = 1.0 - std::pow(hp.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].value->data();
    const auto g = grads.tensors[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    if (m.size() != p.size()) throw ShapeError("adam_step: moment shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * g[j];
      v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.epsilon);
    }
  }
}

void EarlyStopPolicy::Validate() const {
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (min_delta < 0.0) throw UsageError("min_delta must be >= 0");
  if (target_accuracy && !(*target_accuracy > 0.0 && *target_accuracy <= 1.0)) {
    throw UsageError("target_accuracy must lie in (0, 1]");
  }
  if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
}

std::string StopReasonName(StopReason reason) {
  switch (reason) {
    case StopReason::kNone: return "none";
    case StopReason::kPlateau: return "plateau";
    case StopReason::kTarget: return "target";
    case StopReason::kMaxEpochs: return "max_epochs";
  }
  return "unknown";
}

std::size_t epochs_without_improvement(std::span<const EpochRecord> history,
                                       double min_delta) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (const EpochRecord& r : history) {
    if (best - r.val_loss > min_delta) {
      best = r.val_loss;
      stale = 0;
    } else {
      ++stale;
    }
  }
  return stale;
}

StopDecision early_stop_check(const EarlyStopPolicy& policy,
                              std::span<const EpochRecord> history) {
  if (history.empty()) return {};
  const EpochRecord& last = history.back();
  const bool accuracy_hit = policy.target_accuracy && last.val_accuracy >= *policy.target_accuracy;
  const bool loss_hit = policy.target_loss && last.val_loss <= *policy.target_loss;
  if (accuracy_hit || loss_hit) {
    return {true, StopReason::kTarget};
  }
  if (epochs_without_improvement(history, policy.min_delta) >= policy.patience) {
    return {true, StopReason::kPlateau};
  }
  if (history.size() >= policy.max_epochs) return {true, StopReason::kMaxEpochs};
  return {};
}

}  // namespace grfcnn
