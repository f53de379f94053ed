#include "grfcnn/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace grfcnn {

void ConfusionMatrix::Add(ClassLabel actual, ClassLabel predicted, std::uint64_t n) {
  Add(ClassIndex(actual), ClassIndex(predicted), n);
}

void ConfusionMatrix::Add(std::size_t actual, std::size_t predicted, std::uint64_t n) {
  counts_.at(actual).at(predicted) += n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts_)
    for (std::uint64_t v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const {
  std::uint64_t t = 0;
  for (std::uint64_t v : counts_.at(actual)) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t t = 0;
  for (const auto& row : counts_) t += row.at(predicted);
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i) t += counts_[i][i];
  return t;
}

BinaryCounts binarize(const ConfusionMatrix& cm, std::size_t c) {
  BinaryCounts b;
  b.tp = cm.count(c, c);
  b.fn = cm.row_sum(c) - b.tp;
  b.fp = cm.column_sum(c) - b.tp;
  b.tn = cm.total() - b.tp - b.fn - b.fp;
  return b;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw UndefinedMetricError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double accuracy(const BinaryCounts& c) {
  const std::uint64_t total = c.tp + c.tn + c.fp + c.fn;
  if (total == 0) throw UndefinedMetricError("accuracy of empty binary counts");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

Rate recall(std::uint64_t tp, std::uint64_t fn) {
  if (tp + fn == 0) return {0.0, true};
  return {static_cast<double>(tp) / static_cast<double>(tp + fn), false};
}

Rate precision(std::uint64_t tp, std::uint64_t fp) {
  if (tp + fp == 0) return {0.0, true};
  return {static_cast<double>(tp) / static_cast<double>(tp + fp), false};
}

double f_measure(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * r * p / (r + p);
}

ClassReport report(const ConfusionMatrix& cm) {
  ClassReport r;
  r.overall_accuracy = accuracy(cm);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const BinaryCounts b = binarize(cm, c);
    ClassMetrics& m = r.per_class[c];
    m.precision = precision(b.tp, b.fp);
    m.recall = recall(b.tp, b.fn);
    m.f1 = f_measure(m.precision.value, m.recall.value);
  }
  return r;
}

std::string format_report_text(const ClassReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %14s %11s %15s %21s\n", "Case", "Precision (%)",
                "Recall (%)", "F1-measure (%)", "Overall accuracy (%)");
  os << line;
  for (ClassLabel c : kAllClasses) {
    const ClassMetrics& m = r.per_class[ClassIndex(c)];
    std::snprintf(line, sizeof(line), "%-16s %14.2f %11.2f %15.2f %21.2f%s\n",
                  ClassReportCaption(c).c_str(), 100.0 * m.precision.value,
                  100.0 * m.recall.value, 100.0 * m.f1, 100.0 * r.overall_accuracy,
                  (m.precision.degenerate || m.recall.degenerate) ? "  (degenerate)" : "");
    os << line;
  }
  return os.str();
}

std::string format_report_csv(const ClassReport& r) {
  std::ostringstream os;
  os << "case,precision,recall,f1_measure,overall_accuracy\n";
  char line[160];
  for (ClassLabel c : kAllClasses) {
    const ClassMetrics& m = r.per_class[ClassIndex(c)];
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f\n", ClassReportCaption(c).c_str(),
                  m.precision.value, m.recall.value, m.f1, r.overall_accuracy);
    os << line;
  }
  return os.str();
}

std::string format_confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "actual\\predicted";
  for (ClassLabel c : kAllClasses) os << ',' << ClassName(c);
  os << '\n';
  for (ClassLabel a : kAllClasses) {
    os << ClassName(a);
    for (ClassLabel p : kAllClasses) os << ',' << cm.count(ClassIndex(a), ClassIndex(p));
    os << '\n';
  }
  return os.str();
}

}  // namespace grfcnn
