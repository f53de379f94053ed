#include "grfcnn/binary_io.hpp"

#include <bit>
#include <vector>

#include "grfcnn/errors.hpp"

namespace grfcnn::binary {
namespace {

template <typename T>
void PutLe(std::ostream& os, T v) {
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(T));
}

template <typename T>
T GetLe(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw FormatError("unexpected end of binary stream");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void Writer::Bytes(std::string_view bytes) {
  os_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}
void Writer::U8(std::uint8_t v) { PutLe(os_, v); }
void Writer::U32(std::uint32_t v) { PutLe(os_, v); }
void Writer::U64(std::uint64_t v) { PutLe(os_, v); }
void Writer::F64(double v) { PutLe(os_, std::bit_cast<std::uint64_t>(v)); }

void Writer::F64Array(std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os_.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) F64(v);
  }
}

void Writer::String(std::string_view s) {
  U32(static_cast<std::uint32_t>(s.size()));
  Bytes(s);
}

std::string Reader::Bytes(std::size_t n) {
  std::string out(n, '\0');
  if (n > 0 && !is_.read(out.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("unexpected end of binary stream");
  }
  return out;
}
std::uint8_t Reader::U8() { return GetLe<std::uint8_t>(is_); }
std::uint32_t Reader::U32() { return GetLe<std::uint32_t>(is_); }
std::uint64_t Reader::U64() { return GetLe<std::uint64_t>(is_); }
double Reader::F64() { return std::bit_cast<double>(GetLe<std::uint64_t>(is_)); }

void Reader::F64Array(std::span<double> out) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is_.read(reinterpret_cast<char*>(out.data()),
                  static_cast<std::streamsize>(out.size() * sizeof(double)))) {
      throw FormatError("unexpected end of binary stream");
    }
  } else {
    for (double& v : out) v = F64();
  }
}

std::string Reader::String(std::size_t max_length) {
  const std::uint32_t n = U32();
  if (n > max_length) throw FormatError("string length " + std::to_string(n) + " too large");
  return Bytes(n);
}

}  // namespace grfcnn::binary
