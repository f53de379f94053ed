// grfcnn: gait-record ingestion, CNN training and evaluation.
//
//   grfcnn <command> [--config FILE] [--<key> VALUE ...]
//
// Every RunConfig key is also a flag (underscores become dashes). Flags
// override the config file.

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "grfcnn/cli.hpp"
#include "grfcnn/errors.hpp"

namespace {

using Command = int (*)(const grfcnn::RunConfig&, std::ostream&, std::ostream&);

struct Subcommand {
  const char* name;
  const char* help;
  Command run;
};

constexpr Subcommand kSubcommands[] = {
    {"ingest", "parse, label, window and normalize raw records into a dataset",
     grfcnn::cmd_ingest},
    {"synth", "generate a synthetic four-class dataset", grfcnn::cmd_synth},
    {"export-images", "write every dataset window as a PNG", grfcnn::cmd_export_images},
    {"train", "split, train, and report on the holdout", grfcnn::cmd_train},
    {"eval", "evaluate a checkpoint on the configured split", grfcnn::cmd_eval},
    {"predict", "classify each window of one record and vote", grfcnn::cmd_predict},
    {"gradcheck", "compare analytic gradients with finite differences", grfcnn::cmd_gradcheck},
};

std::string FlagName(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parkinson's gait classification from ground reaction force records"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "list every flag of every command");

  std::string config_path;
  // Keys in field order, so overrides are applied deterministically.
  std::map<std::string, std::optional<std::string>> overrides;
  for (const grfcnn::ConfigField& f : grfcnn::config_fields()) overrides[f.key];

  const Subcommand* chosen = nullptr;
  for (const Subcommand& sub : kSubcommands) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->add_option("--config", config_path, "key = value config file");
    for (const grfcnn::ConfigField& f : grfcnn::config_fields()) {
      cmd->add_option(FlagName(f.key), overrides[f.key], f.help)->type_name("VALUE");
    }
    cmd->callback([&chosen, &sub] { chosen = &sub; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : grfcnn::kExitUsage;
  }

  try {
    grfcnn::RunConfig config;
    if (!config_path.empty()) config = grfcnn::load_run_config(config_path);
    for (const grfcnn::ConfigField& f : grfcnn::config_fields()) {
      if (const auto& v = overrides[f.key]) grfcnn::set_config_value(config, f.key, *v);
    }
    return chosen->run(config, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return grfcnn::exit_code_for(e);
  }
}
