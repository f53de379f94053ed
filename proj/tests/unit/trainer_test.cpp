#include "grfcnn/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "grfcnn/errors.hpp"
#include "grfcnn/synthetic.hpp"

namespace grfcnn {
namespace {

// Windows with a tiny placeholder matrix: split logic never reads the data.
LabeledDataset CountsOnly(std::array<std::size_t, kNumClasses> counts,
                          std::size_t windows_per_subject = 10) {
  LabeledDataset ds;
  for (ClassLabel c : kAllClasses)
    for (std::size_t k = 0; k < counts[ClassIndex(c)]; ++k) {
      GrfWindow w;
      w.matrix = Tensor({1, 1});
      w.normalized = true;
      w.label = c;
      w.subject_id = ClassName(c) + "-" + std::to_string(k / windows_per_subject);
      ds.Add(std::move(w));
    }
  return ds;
}

std::size_t CountClass(const LabeledDataset& ds, const std::vector<std::size_t>& idx,
                       ClassLabel c) {
  return std::count_if(idx.begin(), idx.end(),
                       [&](std::size_t i) { return ds.windows[i].label == c; });
}

void ExpectPartition(const DatasetSplit& s, std::size_t n) {
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.holdout.begin(), s.holdout.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
}

TEST(SplitTest, StratifiedCountsFloorEachClass) {
  const LabeledDataset ds = CountsOnly({1500, 2084, 1800, 875});
  const DatasetSplit s = split_dataset(ds, {});
  EXPECT_EQ(CountClass(ds, s.train, ClassLabel::kPD2), 1667u);
  EXPECT_EQ(CountClass(ds, s.holdout, ClassLabel::kPD2), 417u);
  EXPECT_EQ(CountClass(ds, s.train, ClassLabel::kPD3), 700u);
  ExpectPartition(s, ds.size());
}

TEST(SplitTest, SameSeedSamePartition) {
  const LabeledDataset ds = CountsOnly({40, 40, 40, 40});
  SplitSpec spec;
  spec.seed = 5;
  EXPECT_EQ(split_dataset(ds, spec).train, split_dataset(ds, spec).train);
  SplitSpec other = spec;
  other.seed = 6;
  EXPECT_NE(split_dataset(ds, spec).train, split_dataset(ds, other).train);
}

TEST(SplitTest, BySubjectKeepsSubjectsOnOneSide) {
  const LabeledDataset ds = CountsOnly({60, 95, 50, 40}, 7);
  SplitSpec spec;
  spec.strategy = SplitStrategy::kBySubject;
  const DatasetSplit s = split_dataset(ds, spec);
  std::set<std::string> train_subjects, holdout_subjects;
  for (std::size_t i : s.train) train_subjects.insert(ds.windows[i].subject_id);
  for (std::size_t i : s.holdout) holdout_subjects.insert(ds.windows[i].subject_id);
  for (const std::string& sub : holdout_subjects) EXPECT_FALSE(train_subjects.count(sub)) << sub;
  for (ClassLabel c : kAllClasses) {
    EXPECT_GT(CountClass(ds, s.train, c), 0u);
    EXPECT_GT(CountClass(ds, s.holdout, c), 0u);
  }
  ExpectPartition(s, ds.size());
  const double share = static_cast<double>(s.train.size()) / ds.size();
  EXPECT_NEAR(share, 0.8, 0.1);
}

TEST(SplitTest, ThreeWayCarvesATestSet) {
  const LabeledDataset ds = CountsOnly({50, 50, 50, 50});
  SplitSpec spec;
  spec.three_way = true;
  const DatasetSplit s = split_dataset(ds, spec);
  EXPECT_EQ(s.train.size(), 160u);
  EXPECT_EQ(s.holdout.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
  ExpectPartition(s, ds.size());
}

TEST(SplitTest, TinyClassIsNamedInError) {
  const LabeledDataset ds = CountsOnly({10, 10, 1, 10});
  try {
    split_dataset(ds, {});
    FAIL();
  } catch (const SplitError& e) {
    EXPECT_NE(std::string(e.what()).find("PD2.5"), std::string::npos);
  }
  SplitSpec bad;
  bad.train_fraction = 1.0;
  EXPECT_THROW(split_dataset(CountsOnly({10, 10, 10, 10}), bad), UsageError);
}

TEST(PredictTest, ArgmaxAndTieRule) {
  EXPECT_EQ(argmax_label(Tensor::Vector({0.1, 0.7, 0.1, 0.1})), ClassLabel::kPD2);
  EXPECT_EQ(argmax_label(Tensor({4}, 0.25)), ClassLabel::kHealthy);
}

TEST(MajorityVoteTest, ModalClassWithFrequency) {
  std::vector<ClassLabel> labels(20, ClassLabel::kPD2);
  labels.insert(labels.end(), 3, ClassLabel::kPD3);
  labels.push_back(ClassLabel::kHealthy);
  const Verdict v = majority_vote(labels);
  EXPECT_EQ(v.label, ClassLabel::kPD2);
  EXPECT_EQ(v.votes, 20u);
  EXPECT_EQ(v.total, 24u);
  const std::vector<ClassLabel> tie = {ClassLabel::kPD3, ClassLabel::kPD2_5};
  EXPECT_EQ(majority_vote(tie).label, ClassLabel::kPD2_5);
}

class TinyTrainingTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SyntheticSpec spec;
    spec.windows_per_class = 12;
    spec.seed = 3;
    data_ = new LabeledDataset(make_synthetic_dataset(spec));
  }
  static void TearDownTestSuite() { delete data_; }

  static ModelConfig Model() {
    ModelConfig m;
    m.scale_divisor = 32;
    return m;
  }

  static LabeledDataset* data_;
};

LabeledDataset* TinyTrainingTest::data_ = nullptr;

TEST_F(TinyTrainingTest, PredictIsDeterministicAndValidatesInput) {
  const Network net(Model(), 1);
  const Prediction a = predict(net, data_->windows[0]);
  const Prediction b = predict(net, data_->windows[0]);
  EXPECT_EQ(a.probs, b.probs);
  GrfWindow raw = data_->windows[0];
  raw.normalized = false;
  EXPECT_THROW(predict(net, raw), UsageError);
  GrfWindow small;
  small.matrix = Tensor({400, 18});
  small.normalized = true;
  EXPECT_THROW(predict(net, small), ShapeError);
}

TEST_F(TinyTrainingTest, EvaluateConservesCounts) {
  const Network net(Model(), 1);
  std::vector<std::size_t> idx(data_->size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const EvalResult r = evaluate(net, *data_, idx);
  EXPECT_EQ(r.confusion.total(), idx.size());
  for (ClassLabel c : kAllClasses) EXPECT_EQ(r.confusion.row_sum(ClassIndex(c)), 12u);
  EXPECT_GT(r.mean_loss, 0.0);
  EXPECT_EQ(evaluate(net, *data_, idx, 3).confusion, r.confusion);
  EXPECT_THROW(evaluate(net, *data_, std::vector<std::size_t>{}), UsageError);
}

TEST_F(TinyTrainingTest, UntrainedNetworkIsNearChance) {
  // Over several random initializations accuracy stays inside the 99%
  // binomial band around 0.25 for 48 windows.
  std::vector<std::size_t> idx(data_->size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double mean = 0.0;
  const int nets = 8;
  for (int s = 0; s < nets; ++s) mean += accuracy(evaluate(Network(Model(), 50 + s), *data_, idx).confusion);
  mean /= nets;
  const double sd = std::sqrt(0.25 * 0.75 / (48.0 * nets));
  EXPECT_NEAR(mean, 0.25, 2.576 * sd + 0.05);
}

TEST_F(TinyTrainingTest, TrainingReducesLossAndIsReproducible) {
  const DatasetSplit split = split_dataset(*data_, {});
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.policy.max_epochs = 4;
  cfg.policy.target_accuracy.reset();
  cfg.policy.patience = 10;
  std::size_t callbacks = 0;
  cfg.on_epoch = [&](const EpochRecord&) { ++callbacks; };

  Network a(Model(), 9), b(Model(), 9);
  const TrainHistory ha = train(a, *data_, split.train, split.holdout, cfg);
  const TrainHistory hb = train(b, *data_, split.train, split.holdout, cfg);
  EXPECT_EQ(ha.epochs.size(), 4u);
  EXPECT_EQ(callbacks, 8u);
  EXPECT_EQ(ha.stop_reason, StopReason::kMaxEpochs);
  EXPECT_LT(ha.epochs.back().train_loss, ha.epochs.front().train_loss * 1.5);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(format_history_csv(ha), format_history_csv(hb));
  // The network ends on its best-holdout-loss epoch.
  const EvalResult final_eval = evaluate(a, *data_, split.holdout);
  EXPECT_NEAR(final_eval.mean_loss, ha.epochs[ha.best_epoch - 1].val_loss, 1e-12);
}

TEST_F(TinyTrainingTest, TargetStopTruncatesHistory) {
  const DatasetSplit split = split_dataset(*data_, {});
  TrainConfig cfg;
  cfg.policy.target_accuracy = 0.01;  // reached after the first epoch
  Network net(Model(), 2);
  const TrainHistory h = train(net, *data_, split.train, split.holdout, cfg);
  EXPECT_EQ(h.epochs.size(), 1u);
  EXPECT_EQ(h.stop_reason, StopReason::kTarget);
}

TEST_F(TinyTrainingTest, NonFiniteLossReportsEpochAndBatch) {
  const DatasetSplit split = split_dataset(*data_, {});
  LabeledDataset poisoned = *data_;
  for (std::size_t i : split.train) poisoned.windows[i].matrix[0] = NAN;
  Network net(Model(), 2);
  try {
    train(net, poisoned, split.train, split.holdout, TrainConfig{});
    FAIL();
  } catch (const NumericError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch 1"), std::string::npos) << what;
    EXPECT_NE(what.find("batch 1"), std::string::npos) << what;
  }
}

TEST(HistoryCsvTest, Header) {
  TrainHistory h;
  h.epochs.push_back({1, 0.5, 0.75, 0.6, 0.7, 3.0, 1e-3});
  EXPECT_EQ(format_history_csv(h),
            "epoch,train_loss,train_acc,val_loss,val_acc\n"
            "1,0.500000000,0.750000,0.600000000,0.700000\n");
}

}  // namespace
}  // namespace grfcnn
