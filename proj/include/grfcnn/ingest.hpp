#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grfcnn/errors.hpp"
#include "grfcnn/labels.hpp"
#include "grfcnn/tensor.hpp"

namespace grfcnn {

enum class WalkGroup { kGa, kJu, kSi };
enum class Cohort { kPatient, kControl };

std::string WalkGroupName(WalkGroup group);
WalkGroup ParseWalkGroup(std::string_view text);

// Identity of one walking trial, either decoded from a
// <Group><Pt|Co><NN>_<MM>.txt file name or supplied by a manifest.
struct RecordIdentity {
  std::string subject_id;  // e.g. "GaPt03"
  WalkGroup group = WalkGroup::kGa;
  Cohort cohort = Cohort::kPatient;
  int trial = 1;
};

std::optional<RecordIdentity> ParseRecordName(std::string_view filename);

inline constexpr std::size_t kRecordColumns = 19;
inline constexpr std::size_t kWindowColumns = 18;
inline constexpr std::size_t kDefaultWindowFrames = 500;
inline constexpr double kNominalSampleRate = 100.0;

// One parsed trial. frames is T x 19: time (s), 8 left sensors, 8 right
// sensors, total left, total right (forces in newtons).
struct GrfRecord {
  RecordIdentity id;
  Tensor frames;
  double sample_rate = 0.0;
};

// Throws FormatError naming the 1-based line for a wrong column count,
// unparseable or negative/non-finite values, or non-increasing timestamps.
GrfRecord parse_record(std::string_view text, const RecordIdentity& id);
// Decodes the identity from `name`; an unconventional name is a FormatError
// asking for a manifest entry.
GrfRecord parse_record(std::string_view text, std::string_view name);
GrfRecord load_record(const std::filesystem::path& path,
                      const std::optional<RecordIdentity>& id = std::nullopt);

// Frames per second from the median timestamp delta.
double infer_sample_rate(const Tensor& frames);

// Linear interpolation of every column onto a uniform grid at target_rate
// starting at the first timestamp.
GrfRecord resample_record(const GrfRecord& record, double target_rate);

// Resamples to the nominal 100 Hz only when the inferred rate deviates by more
// than `tolerance` (relative).
GrfRecord conform_sample_rate(const GrfRecord& record, double tolerance = 0.01);

struct DemographicsEntry {
  std::string subject_id;
  WalkGroup group = WalkGroup::kGa;
  Cohort cohort = Cohort::kControl;
  std::optional<double> hoehn_yahr;
};

// Subject table keyed by full subject id (e.g. "GaPt03"). Accepts a CSV with
// a subject_id, group, cohort, hoehn_yahr header, or the tab-separated
// PhysioNet demographics layout (ID, Study, Group, ..., HoehnYahr).
class DemographicsTable {
 public:
  static DemographicsTable Parse(std::string_view text);
  static DemographicsTable Load(const std::filesystem::path& path);

  void Insert(DemographicsEntry entry);
  const DemographicsEntry* Find(std::string_view subject_id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, DemographicsEntry, std::less<>> entries_;
};

class UnsupportedStageError : public FormatError {
 public:
  explicit UnsupportedStageError(const std::string& what) : FormatError(what) {}
};

// control -> Healthy; patient with Hoehn & Yahr 2 / 2.5 / 3 -> PD2 / PD2_5 /
// PD3. Any other patient stage (or none) throws UnsupportedStageError.
ClassLabel label_from_stage(Cohort cohort, std::optional<double> hoehn_yahr);
// Throws FormatError if the subject is missing from the table.
ClassLabel label_record(const GrfRecord& record, const DemographicsTable& demographics);

struct GrfWindow {
  Tensor matrix;  // frames x 18, timestamp dropped
  ClassLabel label = ClassLabel::kHealthy;
  std::string subject_id;
  std::size_t window_index = 0;
  bool normalized = false;
};

struct WindowingResult {
  std::vector<GrfWindow> windows;
  std::size_t discarded_frames = 0;
  std::optional<std::string> warning;
};

// Consecutive windows of window_len frames starting at frame 0, advancing by
// window_len - overlap; the trailing remainder is discarded.
WindowingResult window_record(const GrfRecord& record, ClassLabel label,
                              std::size_t window_len = kDefaultWindowFrames,
                              std::size_t overlap = 0);

// Global min-max scaling over every element of the window; a constant window
// maps to all zeros. Throws StateError if already normalized and
// NumericError on non-finite input.
GrfWindow normalize_window(GrfWindow window);

struct DatasetProvenance {
  std::string source;
  std::string digest;  // hex SHA-256 over the inputs
};

struct LabeledDataset {
  std::vector<GrfWindow> windows;
  std::array<std::size_t, kNumClasses> class_counts{};
  DatasetProvenance provenance;

  void Add(GrfWindow window);
  std::size_t size() const { return windows.size(); }
  // Throws FormatError if counts disagree with windows, a window is not
  // normalized, or window shapes differ.
  void Validate() const;
};

struct BuildOptions {
  std::size_t window_len = kDefaultWindowFrames;
  std::size_t overlap = 0;
  std::optional<std::filesystem::path> manifest;
  double rate_tolerance = 0.01;
};

struct BuildResult {
  LabeledDataset dataset;
  std::vector<std::string> diagnostics;  // per-file problems, in file order
};

// parse -> label -> window -> normalize for every record in data_dir, in
// lexicographic file-name order. Per-file failures become diagnostics; throws
// FormatError only if no window was produced.
BuildResult build_dataset(const std::filesystem::path& data_dir,
                          const std::filesystem::path& demographics_path,
                          const BuildOptions& options = {});

// Per-class sample counts as an aligned text table and as CSV.
std::string format_summary_text(const LabeledDataset& dataset);
std::string format_summary_csv(const LabeledDataset& dataset);

std::string sha256_hex(std::string_view bytes);

}  // namespace grfcnn
