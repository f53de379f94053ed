#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "grfcnn/ingest.hpp"
#include "grfcnn/tensor.hpp"

namespace grfcnn {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kColormapLow = {68, 1, 84};     // value 0.0, purple
inline constexpr Rgb kColormapHigh = {253, 231, 37};  // value 1.0, yellow

// Linear two-stop gradient, each channel rounded half-up. Values outside
// [0, 1] are clamped.
Rgb colormap(double value);
// Recovers the value from the green channel, the stop pair's widest span.
double inverse_colormap(const Rgb& pixel);

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples
};

// Writes the window as an 8-bit RGB PNG, one pixel per element: matrix row r
// is pixel row r and matrix column c is pixel column c (18 wide, 500 tall for
// a standard window). Throws StateError for an unnormalized window and
// IoError when the file cannot be written.
void export_spectrogram(const GrfWindow& window, const std::filesystem::path& path);

RgbImage read_png(const std::filesystem::path& path);
// Decodes an exported spectrogram back to a height x width value matrix.
Tensor read_spectrogram(const std::filesystem::path& path);

}  // namespace grfcnn
