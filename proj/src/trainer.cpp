#include "grfcnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace grfcnn {
namespace {

std::size_t TrainCount(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

void SplitGroup(std::vector<std::size_t> members, double fraction, std::mt19937_64& rng,
                DatasetSplit& out) {
  std::shuffle(members.begin(), members.end(), rng);
  const std::size_t n_train = TrainCount(fraction, members.size());
  out.train.insert(out.train.end(), members.begin(), members.begin() + n_train);
  out.holdout.insert(out.holdout.end(), members.begin() + n_train, members.end());
}

// Whole subjects, greedily approaching `fraction` of the group's windows.
void SplitSubjects(const std::map<std::string, std::vector<std::size_t>>& subjects,
                   double fraction, std::mt19937_64& rng, const std::string& group_name,
                   DatasetSplit& out) {
  if (subjects.size() < 2) {
    throw SplitError("class " + group_name + " has " + std::to_string(subjects.size()) +
                     " subject(s); a subject-level split needs at least 2");
  }
  std::vector<const std::vector<std::size_t>*> order;
  std::size_t total = 0;
  for (const auto& [name, idx] : subjects) {
    order.push_back(&idx);
    total += idx.size();
  }
  std::shuffle(order.begin(), order.end(), rng);
  const double target = fraction * static_cast<double>(total);
  std::vector<bool> to_train(order.size(), false);
  double in_train = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double n = static_cast<double>(order[i]->size());
    if (std::abs(in_train + n - target) < std::abs(in_train - target)) {
      to_train[i] = true;
      in_train += n;
    }
  }
  if (std::none_of(to_train.begin(), to_train.end(), [](bool b) { return b; })) to_train.front() = true;
  if (std::all_of(to_train.begin(), to_train.end(), [](bool b) { return b; })) to_train.back() = false;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = to_train[i] ? out.train : out.holdout;
    dst.insert(dst.end(), order[i]->begin(), order[i]->end());
  }
}

struct BatchResult {
  Gradients grads;
  double loss = 0.0;
  bool finite = true;
  std::size_t bad_window = 0;
};

void AccumulateRange(const Network& net, const LabeledDataset& ds,
                     std::span<const std::size_t> idx, std::span<const double> weights,
                     BatchResult& out) {
  Network::Workspace ws;
  out.grads = net.ZeroGradients();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const GrfWindow& w = ds.windows[idx[k]];
    const Tensor target = OneHot(w.label);
    SoftmaxXent r;
    try {
      r = net.ForwardLoss(w.matrix, target, ws);
    } catch (const NumericError&) {
      r.loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(r.loss)) {
      out.finite = false;
      out.bad_window = idx[k];
      return;
    }
    const double weight = weights[ClassIndex(w.label)];
    out.loss += weight * r.loss;
    out.grads.Add(net.Backward(ws, target), weight);
  }
}

}  // namespace

std::string SplitStrategyName(SplitStrategy s) {
  return s == SplitStrategy::kByWindow ? "by_window" : "by_subject";
}

SplitStrategy ParseSplitStrategy(std::string_view text) {
  if (text == "by_window") return SplitStrategy::kByWindow;
  if (text == "by_subject") return SplitStrategy::kBySubject;
  throw UsageError("unknown split strategy '" + std::string(text) + "'");
}

DatasetSplit split_dataset(const LabeledDataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw UsageError("train_fraction must lie strictly between 0 and 1");
  }
  if (ds.windows.empty()) throw SplitError("cannot split an empty dataset");
  std::mt19937_64 rng(spec.seed);
  DatasetSplit out;

  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < ds.windows.size(); ++i)
    by_class[ClassIndex(ds.windows[i].label)].push_back(i);
  for (ClassLabel c : kAllClasses) {
    if (by_class[ClassIndex(c)].size() < 2) {
      throw SplitError("class " + ClassName(c) + " has " +
                       std::to_string(by_class[ClassIndex(c)].size()) +
                       " window(s); at least 2 are needed to split");
    }
  }

  if (spec.strategy == SplitStrategy::kByWindow) {
    if (spec.stratified) {
      for (const auto& members : by_class) SplitGroup(members, spec.train_fraction, rng, out);
    } else {
      std::vector<std::size_t> all(ds.windows.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      SplitGroup(std::move(all), spec.train_fraction, rng, out);
    }
  } else {
    // A subject belongs to the class of its first window.
    std::map<std::string, ClassLabel> subject_class;
    std::array<std::map<std::string, std::vector<std::size_t>>, kNumClasses> grouped;
    std::map<std::string, std::vector<std::size_t>> all_subjects;
    for (std::size_t i = 0; i < ds.windows.size(); ++i) {
      const GrfWindow& w = ds.windows[i];
      const ClassLabel c = subject_class.try_emplace(w.subject_id, w.label).first->second;
      grouped[ClassIndex(c)][w.subject_id].push_back(i);
      all_subjects[w.subject_id].push_back(i);
    }
    if (spec.stratified) {
      for (ClassLabel c : kAllClasses)
        SplitSubjects(grouped[ClassIndex(c)], spec.train_fraction, rng, ClassName(c), out);
    } else {
      SplitSubjects(all_subjects, spec.train_fraction, rng, "(all)", out);
    }
  }

  if (spec.three_way) {
    std::vector<std::size_t> holdout = std::move(out.holdout);
    out.holdout.clear();
    std::shuffle(holdout.begin(), holdout.end(), rng);
    const std::size_t half = holdout.size() / 2;
    if (half == 0) throw SplitError("holdout too small for a separate test set");
    out.holdout.assign(holdout.begin(), holdout.begin() + (holdout.size() - half));
    out.test.assign(holdout.begin() + (holdout.size() - half), holdout.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.holdout.begin(), out.holdout.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TrainHistory train(Network& net, const LabeledDataset& ds,
                   std::span<const std::size_t> train_idx,
                   std::span<const std::size_t> holdout_idx, const TrainConfig& config) {
  if (train_idx.empty() || holdout_idx.empty()) {
    throw UsageError("training needs non-empty train and holdout sets");
  }
  if (config.batch_size == 0) throw UsageError("batch_size must be >= 1");
  config.policy.Validate();
  const std::size_t threads =
      config.deterministic ? 1 : std::max<std::size_t>(1, config.threads);

  std::array<double, kNumClasses> class_weight;
  class_weight.fill(1.0);
  if (config.class_weighted) {
    std::array<std::size_t, kNumClasses> counts{};
    for (std::size_t i : train_idx) counts[ClassIndex(ds.windows[i].label)] += 1;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      class_weight[c] = counts[c] == 0 ? 0.0
                                       : static_cast<double>(train_idx.size()) /
                                             static_cast<double>(kNumClasses * counts[c]);
    }
  }

  std::mt19937_64 rng(config.shuffle_seed);
  AdamState adam{config.adam, 0, {}, {}};
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  std::vector<ParamRef> params = net.Parameters();

  TrainHistory history;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_params;
  std::size_t lr_stale = 0;

  for (std::size_t epoch = 1;; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t batches = (order.size() + config.batch_size - 1) / config.batch_size;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);

      const std::size_t chunks = std::min(threads, batch.size());
      std::vector<BatchResult> partial(chunks);
      const auto range = [&](std::size_t c) {
        const std::size_t lo = batch.size() * c / chunks, hi = batch.size() * (c + 1) / chunks;
        return batch.subspan(lo, hi - lo);
      };
      if (chunks == 1) {
        AccumulateRange(net, ds, batch, class_weight, partial[0]);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t c = 0; c < chunks; ++c)
          pool.emplace_back([&, c] { AccumulateRange(net, ds, range(c), class_weight, partial[c]); });
        for (std::thread& t : pool) t.join();
      }
      for (const BatchResult& p : partial) {
        if (!p.finite) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b + 1) + " (window " +
                             std::to_string(p.bad_window) + ", subject " +
                             ds.windows[p.bad_window].subject_id + ")");
        }
      }
      Gradients grads = std::move(partial[0].grads);
      for (std::size_t c = 1; c < chunks; ++c) grads.Add(partial[c].grads);
      grads.Scale(1.0 / static_cast<double>(batch.size()));
      try {
        adam_step(params, grads, adam);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b + 1));
      }
    }

    const EvalResult train_eval = evaluate(net, ds, train_idx, threads);
    const EvalResult val_eval = evaluate(net, ds, holdout_idx, threads);
    if (!std::isfinite(train_eval.mean_loss) || !std::isfinite(val_eval.mean_loss)) {
      throw NumericError("non-finite evaluation loss after epoch " + std::to_string(epoch));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_eval.mean_loss;
    rec.train_accuracy = accuracy(train_eval.confusion);
    rec.val_loss = val_eval.mean_loss;
    rec.val_accuracy = accuracy(val_eval.confusion);
    rec.learning_rate = adam.hp.lr;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(rec);
    if (config.on_epoch) config.on_epoch(rec);

    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      history.best_epoch = epoch;
      best_params.clear();
      for (const ParamRef& p : params) best_params.push_back(*p.value);
    }
    if (config.lr_plateau_halving) {
      lr_stale = epochs_without_improvement(history.epochs, config.policy.min_delta);
      if (lr_stale >= config.lr_halving_patience && lr_stale % config.lr_halving_patience == 0) {
        adam.hp.lr *= 0.5;
      }
    }
    const StopDecision decision = early_stop_check(config.policy, history.epochs);
    if (decision.stop) {
      history.stop_reason = decision.reason;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = std::move(best_params[i]);
  return history;
}

ClassLabel argmax_label(const Tensor& probs) {
  if (probs.size() != kNumClasses) throw ShapeError("expected one probability per class");
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumClasses; ++i)
    if (probs[i] > probs[best]) best = i;
  return ClassFromIndex(best);
}

Prediction predict(const Network& net, const GrfWindow& window) {
  if (!window.normalized) throw UsageError("predict needs a normalized window");
  const ModelConfig& c = net.config();
  if (window.matrix.rank() != 2 || window.matrix.dim(0) != c.input_height ||
      window.matrix.dim(1) != c.input_width) {
    throw ShapeError("window shape " + ShapeToString(window.matrix.shape()) +
                     " does not match the network input");
  }
  Network::Workspace ws;
  Prediction p;
  p.probs = net.Forward(window.matrix, ws);
  p.label = argmax_label(p.probs);
  return p;
}

EvalResult evaluate(const Network& net, const LabeledDataset& ds,
                    std::span<const std::size_t> indices, std::size_t threads) {
  if (indices.empty()) throw UsageError("cannot evaluate an empty set");
  std::vector<double> losses(indices.size());
  std::vector<ClassLabel> predicted(indices.size());
  const auto run = [&](std::size_t lo, std::size_t hi) {
    Network::Workspace ws;
    for (std::size_t k = lo; k < hi; ++k) {
      const GrfWindow& w = ds.windows[indices[k]];
      const SoftmaxXent r = net.ForwardLoss(w.matrix, OneHot(w.label), ws);
      losses[k] = r.loss;
      predicted[k] = argmax_label(r.probs);
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, indices.size());
  if (threads == 1) {
    run(0, indices.size());
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back(run, indices.size() * t / threads, indices.size() * (t + 1) / threads);
    for (std::thread& t : pool) t.join();
  }
  EvalResult out;
  double total = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.confusion.Add(ds.windows[indices[k]].label, predicted[k]);
    total += losses[k];
  }
  out.mean_loss = total / static_cast<double>(indices.size());
  return out;
}

Verdict majority_vote(std::span<const ClassLabel> labels) {
  if (labels.empty()) throw UsageError("majority vote over no labels");
  std::array<std::size_t, kNumClasses> votes{};
  for (ClassLabel l : labels) votes[ClassIndex(l)] += 1;
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c)
    if (votes[c] > votes[best]) best = c;
  return {ClassFromIndex(best), votes[best], labels.size()};
}

std::string format_history_csv(const TrainHistory& history) {
  std::ostringstream os;
  os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char line[160];
  for (const EpochRecord& r : history.epochs) {
    std::snprintf(line, sizeof(line), "%zu,%.9f,%.6f,%.9f,%.6f\n", r.epoch, r.train_loss,
                  r.train_accuracy, r.val_loss, r.val_accuracy);
    os << line;
  }
  return os.str();
}

}  // namespace grfcnn
