#include "grfcnn/spectrogram.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "grfcnn/errors.hpp"

namespace grfcnn {

Rgb colormap(double value) {
  const double v = std::clamp(value, 0.0, 1.0);
  Rgb out{};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const double lo = kColormapLow[ch], hi = kColormapHigh[ch];
    out[ch] = static_cast<std::uint8_t>(std::floor(lo + v * (hi - lo) + 0.5));
  }
  return out;
}

double inverse_colormap(const Rgb& pixel) {
  const double lo = kColormapLow[1], hi = kColormapHigh[1];
  return std::clamp((pixel[1] - lo) / (hi - lo), 0.0, 1.0);
}

void export_spectrogram(const GrfWindow& window, const std::filesystem::path& path) {
  if (!window.normalized) {
    throw StateError("refusing to export an unnormalized window of " + window.subject_id);
  }
  const Tensor& m = window.matrix;
  if (m.rank() != 2) throw ShapeError("spectrogram export needs a rank-2 window");
  const std::size_t height = m.dim(0), width = m.dim(1);
  std::vector<std::uint8_t> pixels(width * height * 3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Rgb c = colormap(m[i]);
    std::memcpy(&pixels[i * 3], c.data(), 3);
  }

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

Tensor read_spectrogram(const std::filesystem::path& path) {
  const RgbImage img = read_png(path);
  Tensor out({img.height, img.width});
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = inverse_colormap({img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]});
  }
  return out;
}

}  // namespace grfcnn
