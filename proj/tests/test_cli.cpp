#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"

using testing_helpers::read_file;
using testing_helpers::TempDir;
using testing_helpers::write_file;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "drivesig");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = drivesig::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// A small log every subcommand can train on in well under a second.
std::string small_log(const TempDir& dir) {
  const std::string path = dir.file("log.csv");
  const CliRun r = run({"synth", "--out", path, "--drivers", "3", "--trips", "2", "--rows", "240",
                     "--features", "4", "--seed", "5", "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

const std::vector<std::string> kFastModel = {"--window", "8", "--hidden", "4", "--epochs", "2",
                                             "--batch", "32", "--trees", "3"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, HelpMatchesGoldenFile) {
  std::string text = run({"--help"}).out;
  for (const char* sub : {"synth", "prepare", "train", "evaluate", "sweep-noise", "sweep-anomaly",
                          "train-corrupted", "search", "predict"}) {
    const CliRun r = run({sub, "--help"});
    ASSERT_EQ(r.code, 0) << sub;
    text += "\n==== " + std::string(sub) + "\n" + r.out;
  }
  const std::string golden = std::string(DRIVESIG_TEST_DIR) + "/golden/help.txt";
  if (std::getenv("DRIVESIG_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(std::filesystem::path(golden).parent_path());
    write_file(golden, text);
  }
  ASSERT_TRUE(std::filesystem::exists(golden))
      << "missing " << golden << "; rerun with DRIVESIG_UPDATE_GOLDEN=1";
  EXPECT_EQ(text, read_file(golden)) << "help text changed; rerun with DRIVESIG_UPDATE_GOLDEN=1";
}

TEST(Cli, HelpListsEveryFlag) {
  const std::string help = run({"train", "--help"}).out;
  for (const char* flag : {"--seed", "--jobs", "--out-dir", "--data", "--label-col", "--trip-col",
                           "--window", "--overlap", "--split", "--hidden", "--epochs", "--patience",
                           "--batch", "--lr", "--clip-norm", "--trees", "--max-depth", "--model",
                           "--out", "--scale-globally", "--random-split"})
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
}

TEST(Cli, SynthTwiceIdentical) {
  TempDir dir;
  const std::string a = dir.file("a.csv"), b = dir.file("b.csv");
  ASSERT_EQ(run({"synth", "--out", a, "--seed", "7", "--rows", "100", "--out-dir", dir.path().string()}).code, 0);
  ASSERT_EQ(run({"synth", "--out", b, "--seed", "7", "--rows", "100", "--out-dir", dir.path().string()}).code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_FALSE(read_file(a).empty());
}

TEST(Cli, TrainThenEvaluate) {
  TempDir dir;
  const std::string log = small_log(dir);
  const std::string out = dir.path().string();
  for (const char* kind : {"lstm", "tree"}) {
    const std::string model = dir.file(std::string(kind) + ".dsm");
    const CliRun t = run(with({"train", "--model", kind, "--data", log, "--out", model, "--out-dir", out}, kFastModel));
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_EQ(t.out.rfind("seed 0\n", 0), 0u);
    EXPECT_TRUE(std::filesystem::exists(model));

    const CliRun e = run({"evaluate", "--model", model, "--data", log, "--out-dir", out});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("macro precision"), std::string::npos) << e.out;
    EXPECT_NE(e.out.find("macro recall"), std::string::npos);
    EXPECT_NE(e.out.find("macro F1"), std::string::npos);
    const std::string metrics = dir.file(std::string("metrics_") + kind + ".csv");
    ASSERT_TRUE(std::filesystem::exists(metrics));
    EXPECT_NE(read_file(metrics).find(",macro,"), std::string::npos);
  }
  EXPECT_TRUE(std::filesystem::exists(dir.file("history_lstm.csv")));
}

TEST(Cli, MissingModelExitsTwoNamingPath) {
  TempDir dir;
  const std::string log = small_log(dir);
  const CliRun r = run({"evaluate", "--model", dir.file("missing.bin"), "--data", log, "--out-dir",
                     dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(dir.file("missing.bin")), std::string::npos) << r.err;
}

TEST(Cli, MissingDataExitsTwo) {
  TempDir dir;
  const CliRun r = run({"prepare", "--data", dir.file("nope.csv"), "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  const CliRun unknown_sub = run({"frobnicate"});
  EXPECT_EQ(unknown_sub.code, 1);
  EXPECT_FALSE(unknown_sub.err.empty());
  const CliRun unknown_flag = run({"synth", "--bogus"});
  EXPECT_EQ(unknown_flag.code, 1);
  EXPECT_NE(unknown_flag.err.find("--bogus"), std::string::npos) << unknown_flag.err;
  EXPECT_NE(unknown_flag.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"train", "--model", "svm", "--data", "x.csv"}).code, 1);
}

TEST(Cli, BadTrainingConfigExitsThree) {
  TempDir dir;
  const std::string log = small_log(dir);
  const CliRun r = run({"train", "--model", "lstm", "--data", log, "--batch", "0", "--window", "8",
                     "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir;
  const std::string log = small_log(dir);
  const std::string cfg = dir.file("run.ini");
  write_file(cfg, "[train]\nhidden=8,8\nepochs=2\nwindow=8\nbatch=32\n");
  const std::string model = dir.file("m.dsm");
  const CliRun r = run({"--config", cfg, "train", "--model", "lstm", "--data", log, "--hidden", "4",
                     "--out", model, "--out-dir", dir.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string meta = read_file(dir.file("train_lstm.json"));
  EXPECT_NE(meta.find("\"hidden\": \"4\""), std::string::npos) << meta;
  EXPECT_NE(meta.find("\"epochs\": \"2\""), std::string::npos);
  EXPECT_NE(meta.find("\"config_digest\""), std::string::npos);

  write_file(cfg, "[train]\nnot_a_key=1\n");
  EXPECT_EQ(run({"--config", cfg, "train", "--model", "tree", "--data", log, "--out-dir",
                 dir.path().string()}).code,
            1);
}

TEST(Cli, SeedFromEnvironment) {
  TempDir dir;
  ::setenv("DRIVESIG_SEED", "31", 1);
  const CliRun r = run({"synth", "--rows", "100", "--out", dir.file("s.csv"), "--out-dir", dir.path().string()});
  ::unsetenv("DRIVESIG_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("seed 31\n", 0), 0u) << r.out;
  const CliRun flag = run({"synth", "--rows", "100", "--seed", "31", "--out", dir.file("t.csv"),
                        "--out-dir", dir.path().string()});
  EXPECT_EQ(read_file(dir.file("s.csv")), read_file(dir.file("t.csv")));
}

TEST(Cli, MetadataRecordsCommandSeedAndDigest) {
  TempDir dir;
  const std::string log = small_log(dir);
  const std::string meta = read_file(dir.file("synth.json"));
  for (const char* key : {"\"tool_version\"", "\"command\"", "\"dataset_digest\"", "\"seed\": 5",
                          "\"rows\": \"240\"", "\"drivers\": \"3\""})
    EXPECT_NE(meta.find(key), std::string::npos) << key << "\n" << meta;
}

TEST(Cli, SweepCsvByteIdenticalAcrossRuns) {
  TempDir dir;
  const std::string log = small_log(dir);
  const std::string model = dir.file("tree.dsm");
  ASSERT_EQ(run(with({"train", "--model", "tree", "--data", log, "--out", model, "--out-dir",
                      dir.path().string()}, kFastModel)).code,
            0);
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const std::string out = dir.file("run" + std::to_string(i));
    const CliRun r = run({"sweep-anomaly", "--models", model, "--data", log, "--repeats", "3",
                       "--rates", "0,0.4,0.65", "--jobs", i == 0 ? "1" : "3", "--out-dir", out});
    ASSERT_EQ(r.code, 0) << r.err;
    csv[i] = read_file(out + "/sweep_anomaly_rate.csv");
    EXPECT_TRUE(std::filesystem::exists(out + "/sweep_anomaly_rate.svg"));
  }
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(std::count(csv[0].begin(), csv[0].end(), '\n'), 4);
}

TEST(Cli, PredictSingleWindow) {
  TempDir dir;
  const std::string log = small_log(dir);
  const std::string model = dir.file("forest.dsm");
  ASSERT_EQ(run(with({"train", "--model", "forest", "--data", log, "--out", model, "--out-dir",
                      dir.path().string()}, kFastModel)).code,
            0);
  const CliRun r = run({"predict", "--model", model, "--data", log, "--row", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("predicted driver_"), std::string::npos) << r.out;
}
