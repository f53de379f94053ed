#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "grfcnn/gradcheck.hpp"
#include "grfcnn/network.hpp"
#include "grfcnn/optim.hpp"
#include "grfcnn/synthetic.hpp"
#include "grfcnn/trainer.hpp"

namespace grfcnn {

// Process exit codes. Stable; documented in the README.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;  // internal or state errors
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDataFormat = 3;  // malformed inputs, shape mismatches
inline constexpr int kExitNumeric = 4;     // non-finite values, failed gradcheck
inline constexpr int kExitIo = 5;

int exit_code_for(const std::exception& e);

struct RunConfig {
  // Inputs and outputs. Empty dataset/checkpoint paths default to files
  // inside out_dir.
  std::string data_dir;
  std::string demographics;
  std::string manifest;
  std::string dataset;
  std::string checkpoint;
  std::string record;
  std::string out_dir = "out";

  std::size_t window_len = kDefaultWindowFrames;
  std::size_t window_overlap = 0;

  SplitSpec split;
  ModelConfig model;
  AdamConfig adam;
  std::size_t batch_size = 32;
  bool lr_plateau_halving = false;
  bool class_weighted = false;
  EarlyStopPolicy policy;

  std::uint64_t seed = 42;
  bool deterministic = true;
  std::size_t threads = 1;

  SyntheticSpec synth;
  GradcheckOptions gradcheck;

  std::filesystem::path DatasetPath() const;
  std::filesystem::path CheckpointPath() const;
};

struct ConfigField {
  std::string key;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Every configurable key, in resolved-config order.
const std::vector<ConfigField>& config_fields();

// Throw UsageError for unknown keys or unparsable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

// "key = value" lines; '#' starts a comment; blank lines are ignored.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string format_run_config(const RunConfig& config);

// Subcommands. Each writes its artifacts under config.out_dir, including
// resolved_config.txt, prints a human summary to `out` and returns an exit
// code. Failures are thrown; map them with exit_code_for.
int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_export_images(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace grfcnn
