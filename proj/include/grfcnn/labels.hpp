#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "grfcnn/tensor.hpp"

namespace grfcnn {

inline constexpr std::size_t kNumClasses = 4;

// One-hot order is the enumerator order.
enum class ClassLabel : std::size_t { kHealthy = 0, kPD2 = 1, kPD2_5 = 2, kPD3 = 3 };

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::kHealthy, ClassLabel::kPD2, ClassLabel::kPD2_5, ClassLabel::kPD3};

inline std::size_t ClassIndex(ClassLabel label) { return static_cast<std::size_t>(label); }
ClassLabel ClassFromIndex(std::size_t index);

// Short machine name: Healthy, PD2, PD2.5, PD3.
std::string ClassName(ClassLabel label);
// Accepts the short names (and PD2_5) case-insensitively.
ClassLabel ParseClassLabel(std::string_view name);

// Row captions used by the sample-count summary and the performance report.
std::string ClassSummaryCaption(ClassLabel label);
std::string ClassReportCaption(ClassLabel label);

Tensor OneHot(ClassLabel label);

}  // namespace grfcnn
