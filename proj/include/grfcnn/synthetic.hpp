#pragma once

#include <cstddef>
#include <cstdint>

#include "grfcnn/ingest.hpp"

namespace grfcnn {

// Gait-like stand-in data for runs without the real corpus.
struct SyntheticSpec {
  std::size_t windows_per_class = 500;
  std::size_t frames = kDefaultWindowFrames;
  double noise = 0.1;
  std::uint64_t seed = 7;
  // Windows sharing one synthetic subject id, so subject-level splits work.
  std::size_t windows_per_subject = 25;
};

// Each window is a train of half-sine stance pulses (about one stride per
// second at 100 Hz) on 8 sensors per foot, with random phase, cadence and
// per-sensor gain. Class c raises the load on sensor pair c of both feet.
// Columns 16 and 17 are the per-foot totals. Windows come back normalized.
LabeledDataset make_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace grfcnn
