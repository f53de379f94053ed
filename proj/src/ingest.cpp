#include "grfcnn/ingest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace grfcnn {
namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Splits on runs of blanks, tabs and commas.
std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const auto sep = [](char c) { return c == ' ' || c == '\t' || c == ',' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !sep(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> SplitExact(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delim) {
      out.push_back(Trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::optional<double> ParseDouble(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Fn>
void ForEachLine(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(line_no, text.substr(start, end - start));
    start = end + 1;
  }
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw StateError("cannot initialise SHA-256");
    }
  }

  void Update(std::string_view bytes) {
    EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
  }

  std::string HexDigest() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
      os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

Cohort ParseCohort(std::string_view text) {
  const std::string v = Lower(Trim(text));
  if (v == "patient" || v == "pd" || v == "pt" || v == "1") return Cohort::kPatient;
  if (v == "control" || v == "co" || v == "healthy" || v == "2") return Cohort::kControl;
  throw FormatError("unknown cohort '" + std::string(text) + "'");
}

std::string NormalizeSubjectId(std::string_view raw, std::optional<WalkGroup> group) {
  std::string id(Trim(raw));
  const std::string lower = Lower(id);
  if (group && (lower.rfind("pt", 0) == 0 || lower.rfind("co", 0) == 0)) {
    id = WalkGroupName(*group) + id;
  }
  return id;
}

}  // namespace

std::string WalkGroupName(WalkGroup group) {
  switch (group) {
    case WalkGroup::kGa: return "Ga";
    case WalkGroup::kJu: return "Ju";
    case WalkGroup::kSi: return "Si";
  }
  return "?";
}

WalkGroup ParseWalkGroup(std::string_view text) {
  const std::string v = Lower(Trim(text));
  if (v == "ga") return WalkGroup::kGa;
  if (v == "ju") return WalkGroup::kJu;
  if (v == "si") return WalkGroup::kSi;
  throw FormatError("unknown walking group '" + std::string(text) + "'");
}

std::optional<RecordIdentity> ParseRecordName(std::string_view filename) {
  static const std::regex kPattern(R"(^(Ga|Ju|Si)(Pt|Co)(\d+)_(\d+)\.txt$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(filename.begin(), filename.end(), m, kPattern)) return std::nullopt;
  RecordIdentity id;
  id.group = ParseWalkGroup(m[1].str());
  id.cohort = m[2].str() == "Pt" ? Cohort::kPatient : Cohort::kControl;
  id.subject_id = m[1].str() + m[2].str() + m[3].str();
  id.trial = std::stoi(m[4].str());
  if (id.trial < 1) return std::nullopt;
  return id;
}

GrfRecord parse_record(std::string_view text, const RecordIdentity& id) {
  std::vector<double> values;
  std::size_t rows = 0;
  double last_time = -std::numeric_limits<double>::infinity();
  ForEachLine(text, [&](std::size_t line_no, std::string_view line) {
    const auto fields = SplitFields(line);
    if (fields.empty()) return;
    const std::string where = id.subject_id + " line " + std::to_string(line_no);
    if (fields.size() != kRecordColumns) {
      throw FormatError(where + ": expected " + std::to_string(kRecordColumns) +
                        " columns, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < kRecordColumns; ++c) {
      const std::optional<double> v = ParseDouble(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw FormatError(where + ": bad numeric value '" + std::string(fields[c]) + "'");
      }
      if (c == 0) {
        if (!(*v > last_time)) {
          throw FormatError(where + ": timestamps must be strictly increasing");
        }
        last_time = *v;
      } else if (*v < 0.0) {
        throw FormatError(where + ": negative force value in column " + std::to_string(c + 1));
      }
      values.push_back(*v);
    }
    ++rows;
  });
  if (rows < 2) throw FormatError(id.subject_id + ": record needs at least two frames");
  GrfRecord record;
  record.id = id;
  record.frames = Tensor({rows, kRecordColumns}, std::move(values));
  record.sample_rate = infer_sample_rate(record.frames);
  return record;
}

GrfRecord parse_record(std::string_view text, std::string_view name) {
  const std::optional<RecordIdentity> id = ParseRecordName(name);
  if (!id) {
    throw FormatError("file name '" + std::string(name) +
                      "' does not follow <Group><Pt|Co><NN>_<MM>.txt; "
                      "supply a manifest entry for it");
  }
  return parse_record(text, *id);
}

GrfRecord load_record(const std::filesystem::path& path,
                      const std::optional<RecordIdentity>& id) {
  const std::string text = ReadFile(path);
  if (id) return parse_record(text, *id);
  return parse_record(text, path.filename().string());
}

double infer_sample_rate(const Tensor& frames) {
  if (frames.rank() != 2 || frames.dim(0) < 2) {
    throw FormatError("need at least two frames to infer a sample rate");
  }
  const std::size_t n = frames.dim(0), cols = frames.dim(1);
  std::vector<double> deltas(n - 1);
  for (std::size_t i = 1; i < n; ++i) deltas[i - 1] = frames[i * cols] - frames[(i - 1) * cols];
  std::sort(deltas.begin(), deltas.end());
  const std::size_t m = deltas.size();
  const double median = m % 2 ? deltas[m / 2] : 0.5 * (deltas[m / 2 - 1] + deltas[m / 2]);
  return 1.0 / median;
}

GrfRecord resample_record(const GrfRecord& record, double target_rate) {
  if (!(target_rate > 0.0)) throw UsageError("target sample rate must be positive");
  const Tensor& f = record.frames;
  const std::size_t n = f.dim(0), cols = f.dim(1);
  const double t0 = f[0], t_end = f[(n - 1) * cols];
  const double dt = 1.0 / target_rate;
  const std::size_t out_n =
      static_cast<std::size_t>(std::floor((t_end - t0) / dt + 1e-9)) + 1;

  std::vector<double> out(out_n * cols);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < out_n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    while (seg + 2 < n && f[(seg + 1) * cols] <= t) ++seg;
    const double ta = f[seg * cols], tb = f[(seg + 1) * cols];
    const double alpha = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    out[k * cols] = t;
    for (std::size_t c = 1; c < cols; ++c) {
      const double a = f[seg * cols + c], b = f[(seg + 1) * cols + c];
      out[k * cols + c] = a + alpha * (b - a);
    }
  }
  GrfRecord r;
  r.id = record.id;
  r.frames = Tensor({out_n, cols}, std::move(out));
  r.sample_rate = target_rate;
  return r;
}

GrfRecord conform_sample_rate(const GrfRecord& record, double tolerance) {
  if (std::abs(record.sample_rate - kNominalSampleRate) / kNominalSampleRate <= tolerance) {
    return record;
  }
  return resample_record(record, kNominalSampleRate);
}

DemographicsTable DemographicsTable::Parse(std::string_view text) {
  DemographicsTable table;
  std::vector<std::string> header;
  char delim = 0;
  int id_col = -1, group_col = -1, cohort_col = -1, study_col = -1, hy_col = -1;

  ForEachLine(text, [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') return;
    if (header.empty()) {
      delim = line.find(',') != std::string_view::npos ? ','
              : line.find('\t') != std::string_view::npos ? '\t' : ' ';
      const auto cols = delim == ' ' ? SplitFields(line) : SplitExact(line, delim);
      for (std::size_t i = 0; i < cols.size(); ++i) {
        std::string key;
        for (char ch : Lower(cols[i]))
          if (std::isalnum(static_cast<unsigned char>(ch))) key += ch;
        header.push_back(key);
        const int idx = static_cast<int>(i);
        if (key == "subjectid" || key == "id") id_col = idx;
        else if (key == "group") group_col = idx;
        else if (key == "cohort") cohort_col = idx;
        else if (key == "study") study_col = idx;
        else if (key == "hoehnyahr" || key == "hy") hy_col = idx;
      }
      if (id_col < 0) throw FormatError("demographics header has no subject id column");
      return;
    }
    const auto cols = delim == ' ' ? SplitFields(raw) : SplitExact(raw, delim);
    const auto field = [&](int idx) -> std::string_view {
      return idx >= 0 && static_cast<std::size_t>(idx) < cols.size() ? cols[idx]
                                                                     : std::string_view{};
    };
    const std::string where = "demographics line " + std::to_string(line_no);
    try {
      // PhysioNet layout: Study holds Ga/Ju/Si and Group holds PD/CO.
      const int walk_col = study_col >= 0 ? study_col : group_col;
      const int cohort_src = study_col >= 0 ? group_col : cohort_col;
      DemographicsEntry e;
      std::optional<WalkGroup> group;
      if (!field(walk_col).empty()) group = ParseWalkGroup(field(walk_col));
      e.subject_id = NormalizeSubjectId(field(id_col), group);
      if (e.subject_id.empty()) return;
      if (!group) {
        const auto parsed = ParseRecordName(e.subject_id + "_01.txt");
        if (!parsed) throw FormatError("cannot determine walking group of " + e.subject_id);
        group = parsed->group;
      }
      e.group = *group;
      if (!field(cohort_src).empty()) {
        e.cohort = ParseCohort(field(cohort_src));
      } else if (const auto parsed = ParseRecordName(e.subject_id + "_01.txt")) {
        e.cohort = parsed->cohort;
      } else {
        throw FormatError("no cohort for " + e.subject_id);
      }
      const std::string hy = Lower(field(hy_col));
      if (!hy.empty() && hy != "nan" && hy != "na" && hy != "-") {
        const std::optional<double> v = ParseDouble(hy);
        if (!v) throw FormatError("bad Hoehn & Yahr value '" + hy + "'");
        e.hoehn_yahr = *v;
      }
      table.Insert(std::move(e));
    } catch (const FormatError& err) {
      throw FormatError(where + ": " + err.what());
    }
  });
  if (header.empty()) throw FormatError("demographics table is empty");
  return table;
}

DemographicsTable DemographicsTable::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

void DemographicsTable::Insert(DemographicsEntry entry) {
  std::string key = entry.subject_id;
  entries_.insert_or_assign(std::move(key), std::move(entry));
}

const DemographicsEntry* DemographicsTable::Find(std::string_view subject_id) const {
  const auto it = entries_.find(subject_id);
  return it == entries_.end() ? nullptr : &it->second;
}

ClassLabel label_from_stage(Cohort cohort, std::optional<double> hoehn_yahr) {
  if (cohort == Cohort::kControl) return ClassLabel::kHealthy;
  if (hoehn_yahr) {
    if (*hoehn_yahr == 2.0) return ClassLabel::kPD2;
    if (*hoehn_yahr == 2.5) return ClassLabel::kPD2_5;
    if (*hoehn_yahr == 3.0) return ClassLabel::kPD3;
  }
  std::ostringstream os;
  os << "unsupported stage: patient Hoehn & Yahr score ";
  if (hoehn_yahr) os << *hoehn_yahr; else os << "missing";
  os << " (supported: 2, 2.5, 3)";
  throw UnsupportedStageError(os.str());
}

ClassLabel label_record(const GrfRecord& record, const DemographicsTable& demographics) {
  const DemographicsEntry* e = demographics.Find(record.id.subject_id);
  if (e == nullptr) {
    throw FormatError("subject " + record.id.subject_id + " missing from demographics");
  }
  try {
    return label_from_stage(e->cohort, e->hoehn_yahr);
  } catch (const UnsupportedStageError& err) {
    throw UnsupportedStageError(record.id.subject_id + ": " + err.what());
  }
}

WindowingResult window_record(const GrfRecord& record, ClassLabel label,
                              std::size_t window_len, std::size_t overlap) {
  if (window_len == 0) throw UsageError("window length must be >= 1");
  if (overlap >= window_len) throw UsageError("window overlap must be smaller than the window");
  const Tensor& f = record.frames;
  if (f.rank() != 2 || f.dim(1) != kRecordColumns) {
    throw ShapeError("record frames must be T x 19");
  }
  const std::size_t total = f.dim(0);
  WindowingResult result;
  if (total < window_len) {
    result.discarded_frames = total;
    result.warning = record.id.subject_id + " trial " + std::to_string(record.id.trial) +
                     ": only " + std::to_string(total) + " frames, shorter than one " +
                     std::to_string(window_len) + "-frame window";
    return result;
  }
  const std::size_t step = window_len - overlap;
  const std::size_t count = (total - window_len) / step + 1;
  for (std::size_t w = 0; w < count; ++w) {
    std::vector<double> data(window_len * kWindowColumns);
    const std::size_t first = w * step;
    for (std::size_t r = 0; r < window_len; ++r) {
      const double* src = f.data().data() + (first + r) * kRecordColumns + 1;
      std::copy(src, src + kWindowColumns, data.begin() + r * kWindowColumns);
    }
    result.windows.push_back(GrfWindow{Tensor({window_len, kWindowColumns}, std::move(data)),
                                       label, record.id.subject_id, w, false});
  }
  result.discarded_frames = total - ((count - 1) * step + window_len);
  return result;
}

GrfWindow normalize_window(GrfWindow window) {
  if (window.normalized) throw StateError("window is already normalized");
  if (window.matrix.empty()) throw ShapeError("cannot normalize an empty window");
  if (!window.matrix.AllFinite()) {
    throw NumericError("non-finite value in window " + std::to_string(window.window_index) +
                       " of " + window.subject_id);
  }
  auto d = window.matrix.data();
  const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    window.matrix.Fill(0.0);
  } else {
    const double range = hi - lo;
    for (double& v : d) v = (v - lo) / range;
  }
  window.normalized = true;
  return window;
}

void LabeledDataset::Add(GrfWindow window) {
  class_counts[ClassIndex(window.label)] += 1;
  windows.push_back(std::move(window));
}

void LabeledDataset::Validate() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const GrfWindow& w : windows) {
    counts[ClassIndex(w.label)] += 1;
    if (!w.normalized) throw FormatError("dataset holds an unnormalized window");
    if (w.matrix.shape() != windows.front().matrix.shape()) {
      throw FormatError("dataset windows have inconsistent shapes");
    }
  }
  if (counts != class_counts) throw FormatError("dataset class counts disagree with its windows");
}

namespace {

struct ManifestEntry {
  RecordIdentity id;
  std::optional<ClassLabel> label;
};

std::map<std::string, ManifestEntry> LoadManifest(const std::string& text) {
  std::map<std::string, ManifestEntry> out;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& [name, e] : j.at("files").items()) {
      ManifestEntry m;
      m.id.subject_id = e.at("subject_id").get<std::string>();
      m.id.group = ParseWalkGroup(e.value("group", std::string("Ga")));
      m.id.cohort = ParseCohort(e.value("cohort", std::string("patient")));
      m.id.trial = e.value("trial", 1);
      if (e.contains("label")) m.label = ParseClassLabel(e.at("label").get<std::string>());
      out.emplace(name, std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
  return out;
}

bool SamePath(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::error_code ec;
  const bool same = std::filesystem::equivalent(a, b, ec);
  return !ec && same;
}

}  // namespace

BuildResult build_dataset(const std::filesystem::path& data_dir,
                          const std::filesystem::path& demographics_path,
                          const BuildOptions& options) {
  if (!std::filesystem::is_directory(data_dir)) {
    throw IoError("data directory " + data_dir.string() + " does not exist");
  }
  const std::string demo_text = ReadFile(demographics_path);
  const DemographicsTable demographics = DemographicsTable::Parse(demo_text);
  std::string manifest_text;
  std::map<std::string, ManifestEntry> manifest;
  if (options.manifest) {
    manifest_text = ReadFile(*options.manifest);
    manifest = LoadManifest(manifest_text);
  }

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir)) {
    if (!entry.is_regular_file()) continue;
    if (SamePath(entry.path(), demographics_path)) continue;
    if (options.manifest && SamePath(entry.path(), *options.manifest)) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });

  BuildResult result;
  Sha256 digest;
  for (const auto& path : files) {
    const std::string name = path.filename().string();
    std::optional<RecordIdentity> id;
    std::optional<ClassLabel> forced;
    if (const auto it = manifest.find(name); it != manifest.end()) {
      id = it->second.id;
      forced = it->second.label;
    } else {
      id = ParseRecordName(name);
    }
    if (!id) {
      result.diagnostics.push_back(name + ": skipped, name does not follow the "
                                          "record convention and has no manifest entry");
      continue;
    }
    try {
      const std::string text = ReadFile(path);
      GrfRecord record = conform_sample_rate(parse_record(text, *id), options.rate_tolerance);
      const ClassLabel label = forced ? *forced : label_record(record, demographics);
      WindowingResult windows = window_record(record, label, options.window_len, options.overlap);
      if (windows.warning) result.diagnostics.push_back(name + ": " + *windows.warning);
      digest.Update(name);
      digest.Update(std::string_view("\0", 1));
      digest.Update(std::to_string(text.size()));
      digest.Update(std::string_view("\0", 1));
      digest.Update(text);
      for (GrfWindow& w : windows.windows) result.dataset.Add(normalize_window(std::move(w)));
    } catch (const Error& e) {
      result.diagnostics.push_back(name + ": " + e.what());
    }
  }
  digest.Update(demo_text);
  digest.Update(manifest_text);

  if (result.dataset.size() == 0) {
    throw FormatError("zero windows produced from " + data_dir.string() + " (" +
                      std::to_string(result.diagnostics.size()) + " diagnostics)");
  }
  result.dataset.provenance = {data_dir.generic_string(), digest.HexDigest()};
  return result;
}

std::string format_summary_text(const LabeledDataset& dataset) {
  std::ostringstream os;
  os << std::left << std::setw(26) << "Data class" << "Number of samples\n";
  std::size_t total = 0;
  for (ClassLabel c : kAllClasses) {
    os << std::setw(26) << ClassSummaryCaption(c) << dataset.class_counts[ClassIndex(c)] << '\n';
    total += dataset.class_counts[ClassIndex(c)];
  }
  os << std::setw(26) << "Total" << total << '\n';
  return os.str();
}

std::string format_summary_csv(const LabeledDataset& dataset) {
  std::ostringstream os;
  os << "data_class,samples\n";
  std::size_t total = 0;
  for (ClassLabel c : kAllClasses) {
    os << ClassName(c) << ',' << dataset.class_counts[ClassIndex(c)] << '\n';
    total += dataset.class_counts[ClassIndex(c)];
  }
  os << "Total," << total << '\n';
  return os.str();
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.Update(bytes);
  return h.HexDigest();
}

}  // namespace grfcnn
