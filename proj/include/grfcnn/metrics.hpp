#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include "grfcnn/errors.hpp"
#include "grfcnn/labels.hpp"

namespace grfcnn {

class UndefinedMetricError : public NumericError {
 public:
  explicit UndefinedMetricError(const std::string& what) : NumericError(what) {}
};

// Rows are the actual class, columns the predicted class.
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(const Counts& counts) : counts_(counts) {}

  void Add(ClassLabel actual, ClassLabel predicted, std::uint64_t n = 1);
  void Add(std::size_t actual, std::size_t predicted, std::uint64_t n = 1);

  std::uint64_t count(std::size_t actual, std::size_t predicted) const {
    return counts_.at(actual).at(predicted);
  }
  const Counts& counts() const { return counts_; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t actual) const;
  std::uint64_t column_sum(std::size_t predicted) const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_{};
};

struct BinaryCounts {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
};

// One-vs-rest reduction for class c.
BinaryCounts binarize(const ConfusionMatrix& cm, std::size_t c);

// trace / total. Throws UndefinedMetricError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
// (TP + TN) / (TP + TN + FP + FN) of a binary reduction.
double accuracy(const BinaryCounts& counts);

// A rate whose denominator was zero is reported as 0 with degenerate = true.
struct Rate {
  double value = 0.0;
  bool degenerate = false;
};

Rate recall(std::uint64_t tp, std::uint64_t fn);
Rate precision(std::uint64_t tp, std::uint64_t fp);
// Harmonic mean; 0 when both inputs are 0.
double f_measure(double precision, double recall);

struct ClassMetrics {
  Rate precision;
  Rate recall;
  double f1 = 0.0;
};

struct ClassReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double overall_accuracy = 0.0;
};

ClassReport report(const ConfusionMatrix& cm);

// Case / Precision / Recall / F1-measure / Overall accuracy, in percent.
std::string format_report_text(const ClassReport& r);
// Same columns as fractions in [0, 1].
std::string format_report_csv(const ClassReport& r);
std::string format_confusion_csv(const ConfusionMatrix& cm);

}  // namespace grfcnn
