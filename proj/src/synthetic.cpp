#include "grfcnn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace grfcnn {
namespace {

constexpr std::size_t kSensorsPerFoot = 8;
// Load multiplier on the class-specific sensor pair. Per-sensor gains vary by
// up to 40% on their own, so single sensors overlap across classes.
constexpr double kClassBoost = 1.3;

GrfWindow MakeWindow(ClassLabel label, const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spec.noise);
  const std::size_t cls = ClassIndex(label);

  Tensor m({spec.frames, kWindowColumns});
  for (std::size_t foot = 0; foot < 2; ++foot) {
    const double period = 95.0 + 15.0 * unit(rng);
    const double stance = 0.6 * period;
    const double phase = unit(rng) * period + (foot == 1 ? period / 2.0 : 0.0);
    std::array<double, kSensorsPerFoot> gain;
    for (std::size_t s = 0; s < kSensorsPerFoot; ++s) {
      gain[s] = 0.6 + 0.4 * unit(rng);
      if (s / 2 == cls) gain[s] *= kClassBoost;
    }
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const double pos = std::fmod(static_cast<double>(t) + phase, period);
      const double pulse = pos < stance ? std::sin(std::numbers::pi * pos / stance) : 0.0;
      double total = 0.0;
      for (std::size_t s = 0; s < kSensorsPerFoot; ++s) {
        const double v = std::max(0.0, gain[s] * pulse + noise(rng));
        m(t, foot * kSensorsPerFoot + s) = v;
        total += v;
      }
      m(t, 2 * kSensorsPerFoot + foot) = total;
    }
  }
  GrfWindow w;
  w.matrix = std::move(m);
  w.label = label;
  return w;
}

}  // namespace

LabeledDataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.windows_per_class == 0 || spec.frames == 0 || spec.windows_per_subject == 0) {
    throw UsageError("synthetic dataset sizes must be positive");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    throw UsageError("synthetic noise must be a finite non-negative value");
  }
  std::mt19937_64 rng(spec.seed);
  LabeledDataset ds;
  for (ClassLabel c : kAllClasses) {
    for (std::size_t k = 0; k < spec.windows_per_class; ++k) {
      GrfWindow w = MakeWindow(c, spec, rng);
      w.subject_id = "synth-" + ClassName(c) + "-" + std::to_string(k / spec.windows_per_subject);
      w.window_index = k % spec.windows_per_subject;
      ds.Add(normalize_window(std::move(w)));
    }
  }
  ds.provenance.source = "synthetic:seed=" + std::to_string(spec.seed);
  return ds;
}

}  // namespace grfcnn
