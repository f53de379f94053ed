#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "grfcnn/ingest.hpp"

namespace grfcnn {

// Dataset container (little-endian):
//   "GRFDSET" magic + u8 version
//   u32 rows, u32 cols              shape shared by every window
//   string source, string digest    provenance
//   u64 window count, then per window:
//     u8 label index, u8 normalized flag, u32 window index,
//     string subject id, rows*cols float64 values
// Strings are u32 length + bytes.
inline constexpr std::string_view kDatasetMagic = "GRFDSET";
inline constexpr std::uint8_t kDatasetVersion = 1;

void WriteDataset(const LabeledDataset& dataset, std::ostream& os);
LabeledDataset ReadDataset(std::istream& is);

void SaveDataset(const LabeledDataset& dataset, const std::filesystem::path& path);
LabeledDataset LoadDataset(const std::filesystem::path& path);

}  // namespace grfcnn
