#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "grfcnn/network.hpp"

namespace grfcnn {

// Weight container:
//   "GRFCNNW" magic + u8 version
//   13 x u32 ModelConfig fields (4 filters, kernel, pool size, pool stride,
//            dense units, classes, input h, w, c, scale divisor)
//   u64 init seed
//   u32 tensor count, then per tensor: name, u32 rank, rank x u32 dims,
//   raw float64 values. All integers and floats are little-endian.
inline constexpr std::string_view kCheckpointMagic = "GRFCNNW";
inline constexpr std::uint8_t kCheckpointVersion = 1;

void WriteCheckpoint(const Network& net, std::ostream& os);
Network ReadCheckpoint(std::istream& is);

void SaveCheckpoint(const Network& net, const std::filesystem::path& path);
Network LoadCheckpoint(const std::filesystem::path& path);

}  // namespace grfcnn
