#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace grfcnn::binary {

// Little-endian primitive encoding shared by the dataset and checkpoint
// containers. Strings are a u32 byte length followed by the bytes.
class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void Bytes(std::string_view bytes);
  void U8(std::uint8_t v);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void F64Array(std::span<const double> values);
  void String(std::string_view s);

 private:
  std::ostream& os_;
};

// Throws FormatError on truncated input.
class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string Bytes(std::size_t n);
  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  void F64Array(std::span<double> out);
  std::string String(std::size_t max_length = 1u << 20);

 private:
  std::istream& is_;
};

}  // namespace grfcnn::binary
