#include "grfcnn/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "grfcnn/checkpoint.hpp"
#include "grfcnn/dataset_io.hpp"
#include "grfcnn/errors.hpp"
#include "grfcnn/metrics.hpp"
#include "grfcnn/spectrogram.hpp"

namespace grfcnn {
namespace {

namespace fs = std::filesystem;

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::size_t ParseSize(std::string_view key, std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(std::string(key) + ": expected a non-negative integer, got '" +
                     std::string(text) + "'");
  }
  return v;
}

double ParseDouble(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw UsageError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

bool ParseBool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw UsageError(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
}

std::optional<double> ParseOptional(std::string_view key, std::string_view text) {
  if (text == "none" || text.empty()) return std::nullopt;
  return ParseDouble(key, text);
}

// Shortest text that reads back to the same double.
std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string FormatOptional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : "none";
}

std::string FormatBool(bool b) { return b ? "true" : "false"; }

template <typename Member>
ConfigField StringField(std::string key, std::string help, Member member) {
  return {key, std::move(help),
          [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

template <typename Ref>
ConfigField SizeField(std::string key, std::string help,
                      Ref ref) {
  return {key, std::move(help),
          [key, ref](RunConfig& c, std::string_view v) { ref(c) = ParseSize(key, v); },
          [ref](const RunConfig& c) {
            return std::to_string(ref(c));
          }};
}

template <typename Ref>
ConfigField DoubleField(std::string key, std::string help,
                        Ref ref) {
  return {key, std::move(help),
          [key, ref](RunConfig& c, std::string_view v) { ref(c) = ParseDouble(key, v); },
          [ref](const RunConfig& c) { return FormatDouble(ref(c)); }};
}

template <typename Ref>
ConfigField BoolField(std::string key, std::string help, Ref ref) {
  return {key, std::move(help),
          [key, ref](RunConfig& c, std::string_view v) { ref(c) = ParseBool(key, v); },
          [ref](const RunConfig& c) { return FormatBool(ref(c)); }};
}

template <typename Ref>
ConfigField SeedField(std::string key, std::string help,
                      Ref ref) {
  return {key, std::move(help),
          [key, ref](RunConfig& c, std::string_view v) { ref(c) = ParseSize(key, v); },
          [ref](const RunConfig& c) { return std::to_string(ref(c)); }};
}

std::vector<ConfigField> BuildFields() {
  std::vector<ConfigField> f;
  f.push_back(StringField("data_dir", "directory of raw gait records", &RunConfig::data_dir));
  f.push_back(StringField("demographics", "subject demographics table", &RunConfig::demographics));
  f.push_back(StringField("manifest", "optional JSON file-label manifest", &RunConfig::manifest));
  f.push_back(StringField("dataset", "dataset container (default <out_dir>/dataset.grfds)",
                          &RunConfig::dataset));
  f.push_back(StringField("checkpoint", "weights file (default <out_dir>/checkpoint.grfw)",
                          &RunConfig::checkpoint));
  f.push_back(StringField("record", "raw record for predict", &RunConfig::record));
  f.push_back(StringField("out_dir", "output directory", &RunConfig::out_dir));

  f.push_back(SizeField("window_len", "frames per window",
                        [](auto& c) -> auto& { return c.window_len; }));
  f.push_back(SizeField("window_overlap", "frames shared by consecutive windows",
                        [](auto& c) -> auto& { return c.window_overlap; }));

  f.push_back(DoubleField("train_fraction", "share of windows used for training",
                          [](auto& c) -> auto& { return c.split.train_fraction; }));
  f.push_back({"split_strategy", "by_window or by_subject",
               [](RunConfig& c, std::string_view v) { c.split.strategy = ParseSplitStrategy(v); },
               [](const RunConfig& c) { return SplitStrategyName(c.split.strategy); }});
  f.push_back(BoolField("stratified", "split each class separately",
                        [](auto& c) -> auto& { return c.split.stratified; }));
  f.push_back(BoolField("three_way_split", "halve the holdout into validation and test",
                        [](auto& c) -> auto& { return c.split.three_way; }));
  f.push_back(SeedField("split_seed", "seed for the train/holdout split",
                        [](auto& c) -> auto& { return c.split.seed; }));

  f.push_back({"conv_filters", "filters per conv stage, comma separated",
               [](RunConfig& c, std::string_view v) {
                 std::array<std::size_t, kConvStages> filters{};
                 std::size_t i = 0;
                 std::string item;
                 std::istringstream is{std::string(v)};
                 while (std::getline(is, item, ',')) {
                   if (i == kConvStages) throw UsageError("conv_filters: expected 4 values");
                   filters[i++] = ParseSize("conv_filters", Trim(item));
                 }
                 if (i != kConvStages) throw UsageError("conv_filters: expected 4 values");
                 c.model.conv_filters = filters;
               },
               [](const RunConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < kConvStages; ++i)
                   s += (i ? "," : "") + std::to_string(c.model.conv_filters[i]);
                 return s;
               }});
  f.push_back(SizeField("dense_units", "hidden dense width",
                        [](auto& c) -> auto& { return c.model.dense_units; }));
  f.push_back(SizeField("scale_divisor", "divides filter counts and dense width",
                        [](auto& c) -> auto& { return c.model.scale_divisor; }));

  f.push_back(DoubleField("lr", "Adam learning rate",
                          [](auto& c) -> auto& { return c.adam.lr; }));
  f.push_back(DoubleField("beta1", "Adam first-moment decay",
                          [](auto& c) -> auto& { return c.adam.beta1; }));
  f.push_back(DoubleField("beta2", "Adam second-moment decay",
                          [](auto& c) -> auto& { return c.adam.beta2; }));
  f.push_back(DoubleField("epsilon", "Adam denominator guard",
                          [](auto& c) -> auto& { return c.adam.epsilon; }));
  f.push_back(SizeField("batch_size", "windows per gradient step",
                        [](auto& c) -> auto& { return c.batch_size; }));
  f.push_back(BoolField("lr_plateau_halving", "halve lr when holdout loss stalls",
                        [](auto& c) -> auto& { return c.lr_plateau_halving; }));
  f.push_back(BoolField("class_weighted", "inverse-frequency class weights",
                        [](auto& c) -> auto& { return c.class_weighted; }));

  f.push_back(SizeField("patience", "epochs without improvement before stopping",
                        [](auto& c) -> auto& { return c.policy.patience; }));
  f.push_back(DoubleField("min_delta", "smallest holdout-loss drop counted as improvement",
                          [](auto& c) -> auto& { return c.policy.min_delta; }));
  f.push_back({"target_accuracy", "stop once holdout accuracy reaches this (none disables)",
               [](RunConfig& c, std::string_view v) {
                 c.policy.target_accuracy = ParseOptional("target_accuracy", v);
               },
               [](const RunConfig& c) { return FormatOptional(c.policy.target_accuracy); }});
  f.push_back({"target_loss", "stop once holdout loss falls to this (none disables)",
               [](RunConfig& c, std::string_view v) {
                 c.policy.target_loss = ParseOptional("target_loss", v);
               },
               [](const RunConfig& c) { return FormatOptional(c.policy.target_loss); }});
  f.push_back(SizeField("max_epochs", "hard epoch limit",
                        [](auto& c) -> auto& { return c.policy.max_epochs; }));

  f.push_back(SeedField("seed", "weight init and batch shuffle seed",
                        [](auto& c) -> auto& { return c.seed; }));
  f.push_back(BoolField("deterministic", "fixed reduction order, single thread",
                        [](auto& c) -> auto& { return c.deterministic; }));
  f.push_back(SizeField("threads", "worker threads when not deterministic",
                        [](auto& c) -> auto& { return c.threads; }));

  f.push_back(SizeField("synth_windows_per_class", "synthetic windows per class",
                        [](auto& c) -> auto& { return c.synth.windows_per_class; }));
  f.push_back(DoubleField("synth_noise", "synthetic noise standard deviation",
                          [](auto& c) -> auto& { return c.synth.noise; }));
  f.push_back(SeedField("synth_seed", "synthetic generator seed",
                        [](auto& c) -> auto& { return c.synth.seed; }));

  f.push_back(SizeField("gradcheck_trials", "seeded trials per layer",
                        [](auto& c) -> auto& { return c.gradcheck.trials; }));
  f.push_back(DoubleField("gradcheck_epsilon", "central-difference step",
                          [](auto& c) -> auto& { return c.gradcheck.epsilon; }));
  f.push_back(DoubleField("gradcheck_tolerance", "per-layer relative error bound",
                          [](auto& c) -> auto& { return c.gradcheck.tolerance; }));
  f.push_back(DoubleField("gradcheck_network_tolerance", "whole-network relative error bound",
                          [](auto& c) -> auto& { return c.gradcheck.network_tolerance; }));
  f.push_back(SizeField("gradcheck_scale_divisor", "model scale for gradcheck",
                        [](auto& c) -> auto& { return c.gradcheck.scale_divisor; }));
  f.push_back(SeedField("gradcheck_seed", "gradcheck seed",
                        [](auto& c) -> auto& { return c.gradcheck.seed; }));
  return f;
}

const ConfigField& FindField(std::string_view key) {
  for (const ConfigField& f : config_fields())
    if (f.key == key) return f;
  throw UsageError("unknown config key '" + std::string(key) + "'");
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw IoError("cannot write " + path.string());
}

void PrepareOutDir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.out_dir + ": " + ec.message());
  WriteText(fs::path(config.out_dir) / "resolved_config.txt", format_run_config(config));
}

ModelConfig EffectiveModel(const RunConfig& config, const LabeledDataset& ds) {
  ModelConfig m = config.model;
  if (!ds.windows.empty()) {
    m.input_height = ds.windows.front().matrix.dim(0);
    m.input_width = ds.windows.front().matrix.dim(1);
  }
  m.Validate();
  return m;
}

LabeledDataset LoadValidDataset(const RunConfig& config) {
  LabeledDataset ds = LoadDataset(config.DatasetPath());
  ds.Validate();
  return ds;
}

// The set reported on: the dedicated test part of a three-way split,
// otherwise the holdout.
const std::vector<std::size_t>& ReportIndices(const DatasetSplit& split) {
  return split.test.empty() ? split.holdout : split.test;
}

void WriteReports(const RunConfig& config, const EvalResult& eval, std::ostream& out) {
  const fs::path dir(config.out_dir);
  const ClassReport r = report(eval.confusion);
  WriteText(dir / "confusion_matrix.csv", format_confusion_csv(eval.confusion));
  WriteText(dir / "report.txt", format_report_text(r));
  WriteText(dir / "report.csv", format_report_csv(r));
  out << format_report_text(r);
}

std::string SafeName(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  return s;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kUsage: return kExitUsage;
      case ErrorKind::kFormat:
      case ErrorKind::kShape: return kExitDataFormat;
      case ErrorKind::kNumeric: return kExitNumeric;
      case ErrorKind::kIo: return kExitIo;
      case ErrorKind::kState: return kExitInternal;
    }
  }
  return kExitInternal;
}

fs::path RunConfig::DatasetPath() const {
  return dataset.empty() ? fs::path(out_dir) / "dataset.grfds" : fs::path(dataset);
}

fs::path RunConfig::CheckpointPath() const {
  return checkpoint.empty() ? fs::path(out_dir) / "checkpoint.grfw" : fs::path(checkpoint);
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = BuildFields();
  return fields;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  FindField(key).set(config, Trim(value));
}

std::string get_config_value(const RunConfig& config, std::string_view key) {
  return FindField(key).get(config);
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(base, Trim(trimmed.substr(0, eq)), trimmed.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string format_run_config(const RunConfig& config) {
  std::string s;
  for (const ConfigField& f : config_fields()) s += f.key + " = " + f.get(config) + "\n";
  return s;
}

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.data_dir.empty()) throw UsageError("ingest needs data_dir");
  if (config.demographics.empty()) throw UsageError("ingest needs demographics");
  if (!fs::is_regular_file(config.demographics)) {
    throw UsageError("demographics file not found: " + config.demographics);
  }
  if (!fs::is_directory(config.data_dir)) {
    throw UsageError("data directory not found: " + config.data_dir);
  }
  PrepareOutDir(config);
  BuildOptions options;
  options.window_len = config.window_len;
  options.overlap = config.window_overlap;
  if (!config.manifest.empty()) options.manifest = config.manifest;
  const BuildResult result = build_dataset(config.data_dir, config.demographics, options);
  for (const std::string& d : result.diagnostics) err << d << "\n";
  SaveDataset(result.dataset, config.DatasetPath());
  WriteText(fs::path(config.out_dir) / "summary.txt", format_summary_text(result.dataset));
  WriteText(fs::path(config.out_dir) / "summary.csv", format_summary_csv(result.dataset));
  out << format_summary_text(result.dataset);
  return kExitOk;
}

int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream&) {
  PrepareOutDir(config);
  SyntheticSpec spec = config.synth;
  spec.frames = config.window_len;
  const LabeledDataset ds = make_synthetic_dataset(spec);
  SaveDataset(ds, config.DatasetPath());
  WriteText(fs::path(config.out_dir) / "summary.txt", format_summary_text(ds));
  WriteText(fs::path(config.out_dir) / "summary.csv", format_summary_csv(ds));
  out << format_summary_text(ds);
  return kExitOk;
}

int cmd_export_images(const RunConfig& config, std::ostream& out, std::ostream&) {
  const LabeledDataset ds = LoadValidDataset(config);
  PrepareOutDir(config);
  const fs::path dir = fs::path(config.out_dir) / "images";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < ds.windows.size(); ++i) {
    const GrfWindow& w = ds.windows[i];
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "%06zu_", i);
    export_spectrogram(w, dir / (prefix + SafeName(ClassName(w.label)) + "_" +
                                 SafeName(w.subject_id) + "_w" +
                                 std::to_string(w.window_index) + ".png"));
  }
  out << "wrote " << ds.windows.size() << " images to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream&) {
  const LabeledDataset ds = LoadValidDataset(config);
  const ModelConfig model = EffectiveModel(config, ds);
  PrepareOutDir(config);
  const DatasetSplit split = split_dataset(ds, config.split);

  TrainConfig tc;
  tc.adam = config.adam;
  tc.batch_size = config.batch_size;
  tc.policy = config.policy;
  tc.shuffle_seed = config.seed;
  tc.class_weighted = config.class_weighted;
  tc.lr_plateau_halving = config.lr_plateau_halving;
  tc.deterministic = config.deterministic;
  tc.threads = config.threads;
  tc.on_epoch = [&out](const EpochRecord& r) {
    char line[160];
    std::snprintf(line, sizeof(line),
                  "epoch %3zu  train_loss %.4f  train_acc %.4f  val_loss %.4f  val_acc %.4f\n",
                  r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy);
    out << line << std::flush;
  };

  out << "train " << split.train.size() << "  holdout " << split.holdout.size();
  if (!split.test.empty()) out << "  test " << split.test.size();
  out << "  parameters " << Network(model, config.seed).ParameterCount() << "\n";

  Network net(model, config.seed);
  const TrainHistory history = train(net, ds, split.train, split.holdout, tc);
  out << "stopped: " << StopReasonName(history.stop_reason) << " after "
      << history.epochs.size() << " epochs; best epoch " << history.best_epoch << "\n";

  SaveCheckpoint(net, config.CheckpointPath());
  WriteText(fs::path(config.out_dir) / "history.csv", format_history_csv(history));
  WriteReports(config, evaluate(net, ds, ReportIndices(split), tc.deterministic ? 1 : tc.threads),
               out);
  return kExitOk;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream&) {
  const Network net = LoadCheckpoint(config.CheckpointPath());
  const LabeledDataset ds = LoadValidDataset(config);
  const ModelConfig& m = net.config();
  if (ds.windows.front().matrix.dim(0) != m.input_height ||
      ds.windows.front().matrix.dim(1) != m.input_width) {
    throw ShapeError("dataset windows do not match the checkpoint input shape");
  }
  PrepareOutDir(config);
  const DatasetSplit split = split_dataset(ds, config.split);
  WriteReports(config,
               evaluate(net, ds, ReportIndices(split), config.deterministic ? 1 : config.threads),
               out);
  return kExitOk;
}

int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err) {
  if (config.record.empty()) throw UsageError("predict needs record");
  const Network net = LoadCheckpoint(config.CheckpointPath());
  const GrfRecord record = conform_sample_rate(load_record(config.record), 0.01);
  // The label is a placeholder; predict never looks at it.
  const WindowingResult windows =
      window_record(record, ClassLabel::kHealthy, net.config().input_height, config.window_overlap);
  if (windows.warning) err << *windows.warning << "\n";
  if (windows.windows.empty()) throw FormatError("record too short for a single window");
  PrepareOutDir(config);

  std::ostringstream csv;
  csv << "window_index,label";
  for (ClassLabel c : kAllClasses) csv << ",p_" << ClassName(c);
  csv << "\n";
  std::vector<ClassLabel> labels;
  char buf[32];
  for (const GrfWindow& raw : windows.windows) {
    const Prediction p = predict(net, normalize_window(raw));
    labels.push_back(p.label);
    csv << raw.window_index << "," << ClassName(p.label);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.6f", p.probs[c]);
      csv << buf;
    }
    csv << "\n";
  }
  WriteText(fs::path(config.out_dir) / "predictions.csv", csv.str());
  const Verdict v = majority_vote(labels);
  out << "verdict: " << ClassName(v.label) << " (" << v.votes << "/" << v.total << ")\n";
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& config, std::ostream& out, std::ostream&) {
  PrepareOutDir(config);
  const std::vector<GradcheckRow> rows = run_gradcheck(config.gradcheck);
  const std::string table = format_gradcheck_table(rows);
  WriteText(fs::path(config.out_dir) / "gradcheck.txt", table);
  out << table;
  for (const GradcheckRow& r : rows)
    if (!r.passed) return kExitNumeric;
  return kExitOk;
}

}  // namespace grfcnn
