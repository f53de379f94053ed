#include "grfcnn/cli.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "grfcnn/checkpoint.hpp"
#include "grfcnn/dataset_io.hpp"
#include "grfcnn/errors.hpp"
#include "grfcnn/spectrogram.hpp"
#include "test_support.hpp"

namespace grfcnn {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

const fs::path kData = GRFCNN_TEST_DATA;

int RunCli(const std::string& args) {
  const std::string cmd = std::string(GRFCNN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string ReadText(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TEST(RunConfigTest, EveryFieldRoundTripsThroughResolvedText) {
  RunConfig c;
  c.out_dir = "/tmp/x";
  c.model.scale_divisor = 8;
  c.policy.target_accuracy.reset();
  c.policy.target_loss = 0.15;
  c.adam.lr = 3e-4;
  c.split.strategy = SplitStrategy::kBySubject;
  const RunConfig back = parse_run_config(format_run_config(c));
  EXPECT_EQ(format_run_config(back), format_run_config(c));
  EXPECT_EQ(back.model.scale_divisor, 8u);
  EXPECT_FALSE(back.policy.target_accuracy);
  EXPECT_EQ(back.policy.target_loss, 0.15);
  EXPECT_EQ(back.adam.lr, 3e-4);
}

TEST(RunConfigTest, DefaultsMatchLibraryDefaults) {
  const RunConfig c;
  EXPECT_EQ(get_config_value(c, "conv_filters"), "128,256,512,1024");
  EXPECT_EQ(get_config_value(c, "dense_units"), "512");
  EXPECT_EQ(get_config_value(c, "train_fraction"), "0.8");
  EXPECT_EQ(get_config_value(c, "lr"), "0.001");
  EXPECT_EQ(get_config_value(c, "max_epochs"), "12");
  EXPECT_EQ(get_config_value(c, "target_accuracy"), "0.97");
  EXPECT_EQ(get_config_value(c, "deterministic"), "true");
  for (const ConfigField& f : config_fields()) EXPECT_FALSE(f.help.empty()) << f.key;
}

TEST(RunConfigTest, CommentsBlankLinesAndOverrides) {
  const RunConfig c = parse_run_config("# run\n\nlr = 0.01  # faster\nbatch_size=8\n");
  EXPECT_EQ(c.adam.lr, 0.01);
  EXPECT_EQ(c.batch_size, 8u);
  RunConfig o = c;
  set_config_value(o, "batch_size", "16");
  EXPECT_EQ(o.batch_size, 16u);
}

TEST(RunConfigTest, UnknownKeysAndBadValuesAreUsageErrors) {
  EXPECT_THROW(parse_run_config("learning_rate = 0.1\n"), UsageError);
  EXPECT_THROW(parse_run_config("batch_size = -3\n"), UsageError);
  EXPECT_THROW(parse_run_config("deterministic = maybe\n"), UsageError);
  EXPECT_THROW(parse_run_config("conv_filters = 1,2,3\n"), UsageError);
  EXPECT_THROW(parse_run_config("just words\n"), UsageError);
}

TEST(ExitCodeTest, DistinctCodesPerFailureClass) {
  EXPECT_EQ(exit_code_for(UsageError("u")), kExitUsage);
  EXPECT_EQ(exit_code_for(FormatError("f")), kExitDataFormat);
  EXPECT_EQ(exit_code_for(ShapeError("s")), kExitDataFormat);
  EXPECT_EQ(exit_code_for(NumericError("n")), kExitNumeric);
  EXPECT_EQ(exit_code_for(IoError("i")), kExitIo);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitInternal);
}

TEST(CliBinaryTest, MissingDemographicsIsUsageError) {
  TempDir dir("cli_demo");
  EXPECT_EQ(RunCli("ingest --data-dir " + kData.string() + " --demographics " +
                   (dir.path() / "none.txt").string() + " --out-dir " + dir.path().string()),
            kExitUsage);
}

TEST(CliBinaryTest, UnknownFlagAndMissingCommandAreUsageErrors) {
  EXPECT_EQ(RunCli("train --no-such-flag 1"), kExitUsage);
  EXPECT_EQ(RunCli(""), kExitUsage);
}

TEST(CliBinaryTest, CorruptCheckpointIsDataFormatError) {
  TempDir dir("cli_ckpt");
  std::ofstream(dir.path() / "bad.grfw") << "GRFCNNW";
  EXPECT_EQ(RunCli("predict --checkpoint " + (dir.path() / "bad.grfw").string() + " --record " +
                   (kData / "GaPt03_01.txt").string() + " --out-dir " + dir.path().string()),
            kExitDataFormat);
}

TEST(CliBinaryTest, GradcheckPassesAtScale32) {
  TempDir dir("cli_gc");
  EXPECT_EQ(RunCli("gradcheck --out-dir " + dir.path().string()), kExitOk);
  const std::string table = ReadText(dir.path() / "gradcheck.txt");
  EXPECT_EQ(table.find("FAIL"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "resolved_config.txt"));
}

TEST(CliBinaryTest, ImpossibleGradcheckToleranceExitsNumeric) {
  TempDir dir("cli_gc_fail");
  EXPECT_EQ(RunCli("gradcheck --gradcheck-trials 2 --gradcheck-tolerance 1e-30 --out-dir " +
                   dir.path().string()),
            kExitNumeric);
}

TEST(CliBinaryTest, ExportImagesWritesOnePngPerWindow) {
  TempDir dir("cli_img");
  ASSERT_EQ(RunCli("synth --synth-windows-per-class 3 --out-dir " + dir.path().string()), kExitOk);
  ASSERT_EQ(RunCli("export-images --out-dir " + dir.path().string()), kExitOk);
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(dir.path() / "images")) {
    const RgbImage img = read_png(e.path());
    EXPECT_EQ(img.width, 18u);
    EXPECT_EQ(img.height, 500u);
    ++pngs;
  }
  EXPECT_EQ(pngs, 12u);
}

TEST(CliBinaryTest, TrainEvalPredictPipeline) {
  TempDir dir("cli_train");
  const std::string out = " --out-dir " + dir.path().string();
  ASSERT_EQ(RunCli("synth --synth-windows-per-class 10" + out), kExitOk);
  ASSERT_EQ(RunCli("train --scale-divisor 32 --max-epochs 2 --batch-size 8" + out), kExitOk);
  for (const char* f : {"checkpoint.grfw", "history.csv", "confusion_matrix.csv", "report.txt",
                        "report.csv", "resolved_config.txt", "dataset.grfds"})
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  const std::string report = ReadText(dir.path() / "report.txt");
  for (const char* row : {"Healthy person", "PD stage 2 ", "PD stage 2.5", "PD stage 3"})
    EXPECT_NE(report.find(row), std::string::npos);
  EXPECT_EQ(LoadCheckpoint(dir.path() / "checkpoint.grfw").config().filters(0), 4u);

  const std::string first_report = report;
  ASSERT_EQ(RunCli("eval" + out), kExitOk);
  EXPECT_EQ(ReadText(dir.path() / "report.txt"), first_report);

  // A 1200-frame record at 100 Hz yields two windows to vote on.
  std::ofstream rec(dir.path() / "GaPt03_01.txt");
  for (int t = 0; t < 1200; ++t) {
    rec << t / 100.0;
    for (int s = 0; s < 18; ++s) rec << '\t' << 100.0 + 50.0 * std::sin(0.06 * t + s);
    rec << '\n';
  }
  rec.close();
  ASSERT_EQ(RunCli("predict --record " + (dir.path() / "GaPt03_01.txt").string() + out), kExitOk);
  const std::string preds = ReadText(dir.path() / "predictions.csv");
  EXPECT_EQ(std::count(preds.begin(), preds.end(), '\n'), 3);
}

TEST(CliBinaryTest, ConfigFileWithFlagOverride) {
  TempDir dir("cli_cfg");
  std::ofstream(dir.path() / "run.cfg") << "synth_windows_per_class = 2\nwindow_len = 500\n";
  ASSERT_EQ(RunCli("synth --config " + (dir.path() / "run.cfg").string() +
                   " --synth-windows-per-class 3 --out-dir " + dir.path().string()),
            kExitOk);
  EXPECT_EQ(LoadDataset(dir.path() / "dataset.grfds").size(), 12u);
  EXPECT_NE(ReadText(dir.path() / "resolved_config.txt").find("synth_windows_per_class = 3"),
            std::string::npos);
}

}  // namespace
}  // namespace grfcnn
