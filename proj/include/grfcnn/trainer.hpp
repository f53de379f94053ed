#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "grfcnn/ingest.hpp"
#include "grfcnn/labels.hpp"
#include "grfcnn/metrics.hpp"
#include "grfcnn/network.hpp"
#include "grfcnn/optim.hpp"

namespace grfcnn {

enum class SplitStrategy { kByWindow, kBySubject };

std::string SplitStrategyName(SplitStrategy s);
SplitStrategy ParseSplitStrategy(std::string_view text);

struct SplitSpec {
  double train_fraction = 0.8;
  SplitStrategy strategy = SplitStrategy::kByWindow;
  bool stratified = true;
  std::uint64_t seed = 42;
  // Halves the holdout into a validation part and a separate test part.
  bool three_way = false;
};

// Sorted window indices into the dataset. test is empty unless three_way.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
  std::vector<std::size_t> test;
};

class SplitError : public FormatError {
 public:
  explicit SplitError(const std::string& what) : FormatError(what) {}
};

// by_window + stratified: floor(fraction * n_c) windows of each class go to
// train, picked by a seeded shuffle. by_subject: whole subjects move together,
// greedily approaching the fraction. Disjoint and exhaustive; throws
// SplitError for a class with fewer than two windows (or subjects).
DatasetSplit split_dataset(const LabeledDataset& ds, const SplitSpec& spec);

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 32;
  EarlyStopPolicy policy;
  std::uint64_t shuffle_seed = 42;
  // Scales each sample's loss by total / (classes * class_count).
  bool class_weighted = false;
  // Halves the learning rate after lr_halving_patience stale epochs.
  bool lr_plateau_halving = false;
  std::size_t lr_halving_patience = 2;
  // Deterministic mode reduces per-sample gradients strictly left to right.
  // Otherwise the batch is cut into `threads` contiguous chunks whose partial
  // sums are added in chunk order, which is reproducible for a fixed count.
  bool deterministic = true;
  std::size_t threads = 1;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::kNone;
  std::size_t best_epoch = 0;
};

// Seeded reshuffle each epoch, mini-batch mean gradients, one Adam step per
// batch, then full passes over train and holdout. Leaves `net` holding the
// weights of the lowest-holdout-loss epoch. A non-finite loss or gradient
// throws NumericError with epoch and batch context.
TrainHistory train(Network& net, const LabeledDataset& ds,
                   std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> holdout_idx, const TrainConfig& config);

struct Prediction {
  ClassLabel label = ClassLabel::kHealthy;
  Tensor probs;
};

// Lowest class index wins ties.
ClassLabel argmax_label(const Tensor& probs);

// Requires a normalized window matching the network input shape.
Prediction predict(const Network& net, const GrfWindow& window);

struct EvalResult {
  ConfusionMatrix confusion;
  double mean_loss = 0.0;
};

// Throws UsageError on an empty index set.
EvalResult evaluate(const Network& net, const LabeledDataset& ds,
                    std::span<const std::size_t> indices, std::size_t threads = 1);

struct Verdict {
  ClassLabel label = ClassLabel::kHealthy;
  std::size_t votes = 0;
  std::size_t total = 0;
};

// Modal class; ties go to the lowest class index.
Verdict majority_vote(std::span<const ClassLabel> labels);

// epoch,train_loss,train_acc,val_loss,val_acc
std::string format_history_csv(const TrainHistory& history);

}  // namespace grfcnn
