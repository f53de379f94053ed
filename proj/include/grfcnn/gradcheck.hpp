#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace grfcnn {

struct GradcheckOptions {
  std::size_t trials = 20;  // seeded instances per layer
  double epsilon = 1e-6;
  double tolerance = 1e-4;
  double network_tolerance = 1e-3;
  std::size_t scale_divisor = 32;
  std::uint64_t seed = 1234;
  // Coordinates sampled per tensor per trial; smaller tensors are checked in full.
  std::size_t max_coordinates = 64;
  bool include_network = true;
};

struct GradcheckRow {
  std::string name;
  std::size_t trials = 0;
  std::size_t checked = 0;  // coordinates compared
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// |a - n| / max(|a|, |n|), 0 when both are exactly 0.
double relative_error(double analytic, double numeric);

// Compares analytic backward passes to central differences for conv, dense,
// relu, maxpool and softmax_xent, using the layer widths of the scaled model
// on small random inputs in [-1, 1], then (optionally) the whole network.
// Layers are probed through the scalar loss sum(r * y) with random r.
std::vector<GradcheckRow> run_gradcheck(const GradcheckOptions& options);

std::string format_gradcheck_table(const std::vector<GradcheckRow>& rows);

}  // namespace grfcnn
