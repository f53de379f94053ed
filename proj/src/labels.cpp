#include "grfcnn/labels.hpp"

#include <algorithm>
#include <cctype>

#include "grfcnn/errors.hpp"

namespace grfcnn {

ClassLabel ClassFromIndex(std::size_t index) {
  if (index >= kNumClasses) throw FormatError("class index " + std::to_string(index) + " out of range");
  return static_cast<ClassLabel>(index);
}

std::string ClassName(ClassLabel label) {
  switch (label) {
    case ClassLabel::kHealthy: return "Healthy";
    case ClassLabel::kPD2: return "PD2";
    case ClassLabel::kPD2_5: return "PD2.5";
    case ClassLabel::kPD3: return "PD3";
  }
  return "?";
}

ClassLabel ParseClassLabel(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "healthy") return ClassLabel::kHealthy;
  if (lower == "pd2") return ClassLabel::kPD2;
  if (lower == "pd2.5" || lower == "pd2_5") return ClassLabel::kPD2_5;
  if (lower == "pd3") return ClassLabel::kPD3;
  throw FormatError("unknown class label '" + std::string(name) + "'");
}

std::string ClassSummaryCaption(ClassLabel label) {
  switch (label) {
    case ClassLabel::kHealthy: return "Healthy subjects";
    case ClassLabel::kPD2: return "PD stage 2 subjects";
    case ClassLabel::kPD2_5: return "PD stage 2.5 subjects";
    case ClassLabel::kPD3: return "PD stage 3 subjects";
  }
  return "?";
}

std::string ClassReportCaption(ClassLabel label) {
  switch (label) {
    case ClassLabel::kHealthy: return "Healthy person";
    case ClassLabel::kPD2: return "PD stage 2";
    case ClassLabel::kPD2_5: return "PD stage 2.5";
    case ClassLabel::kPD3: return "PD stage 3";
  }
  return "?";
}

Tensor OneHot(ClassLabel label) {
  Tensor t({kNumClasses});
  t[ClassIndex(label)] = 1.0;
  return t;
}

}  // namespace grfcnn
