// End-to-end checks of the mrnet binary: file contracts, exit codes, and
// idempotence. The binary path arrives via MRNET_CLI_BIN (set by CMake).

#include <gtest/gtest.h>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fixtures.hpp"
#include "mrnet/checkpoint.hpp"
#include "mrnet/config.hpp"
#include "mrnet/csv.hpp"
#include "mrnet/edf.hpp"
#include "mrnet/epoch_store.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_bin() {
#ifdef MRNET_CLI_BIN
  return MRNET_CLI_BIN;
#else
  return "mrnet";
#endif
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = cli_bin() + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  while (fgets(buf.data(), buf.size(), pipe)) output += buf.data();
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mrnet_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string tiny_net_flags() {
  return "--set network.num_blocks=3 --set network.base_channels=4"
         " --set network.kernel_length=8 --set network.subsample_blocks=1,2,3"
         " --set network.tap_blocks=1,2,3 --set network.head_hidden=16"
         " --set network.dropout_p=0";
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<std::uint8_t>{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
}

TEST(Cli, FullSyntheticPipelineEmitsAllContracts) {
  const auto dir = temp_dir("pipeline");
  const std::string data = (dir / "data").string();
  const std::string run_dir = (dir / "run").string();
  const std::string preds = (dir / "preds").string();
  const std::string corrected = (dir / "corrected").string();

  auto r = run("synth --out " + data +
               " --set synth.records=2 --set synth.epochs_per_record=30"
               " --set synth.seed=7 --jitter-preds");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "data" / "synth-000" / "epochs.bin"));
  ASSERT_TRUE(fs::exists(dir / "data" / "synth-000" / "labels.csv"));
  ASSERT_TRUE(fs::exists(dir / "data" / "config.echo"));

  r = run("train --data " + data + " --out " + run_dir + " " + tiny_net_flags() +
          " --set train.epochs=2 --set train.batch_size=8 --set train.lr0=0.01");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "run" / "model.mrn1"));
  ASSERT_TRUE(fs::exists(dir / "run" / "train_log.jsonl"));

  r = run("predict --model " + run_dir + "/model.mrn1 --data " + data + " --out " + preds);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "preds" / "synth-000" / "predictions.csv"));

  r = run("correct --preds " + preds + " --train-labels " + data + " --out " + corrected +
          " --set msc.laplace_smoothing=true");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir / "corrected" / "synth-000" / "corrected.csv"));
  ASSERT_TRUE(fs::exists(dir / "corrected" / "transition_matrix.csv"));

  r = run("eval --truth " + data + "/synth-000/labels.csv --pred " + corrected +
          "/synth-000/corrected.csv --raw " + preds + "/synth-000/predictions.csv" +
          " --out " + (dir / "metrics.json").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto metrics = nlohmann::json::parse(std::ifstream(dir / "metrics.json"));
  for (const char* key : {"acc", "mf1", "per_class_f1", "confusion", "transitions_raw",
                          "transitions_corrected"}) {
    EXPECT_TRUE(metrics.contains(key)) << key;
  }

  r = run("plot --truth " + data + "/synth-000/labels.csv --raw " + preds +
          "/synth-000/predictions.csv --corrected " + corrected +
          "/synth-000/corrected.csv --out " + (dir / "hypno.svg").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "hypno.svg"));
  EXPECT_TRUE(fs::exists(dir / "hypno.txt"));
  std::stringstream svg;
  svg << std::ifstream(dir / "hypno.svg").rdbuf();
  EXPECT_NE(svg.str().find("corrected"), std::string::npos);

  fs::remove_all(dir);
}

TEST(Cli, SynthIsIdempotentByteForByte) {
  const auto dir = temp_dir("idempotent");
  const std::string flags =
      " --set synth.records=1 --set synth.epochs_per_record=20 --set synth.seed=11"
      " --jitter-preds";
  ASSERT_EQ(run("synth --out " + (dir / "a").string() + flags).exit_code, 0);
  ASSERT_EQ(run("synth --out " + (dir / "b").string() + flags).exit_code, 0);
  for (const char* rel :
       {"synth-000/epochs.bin", "synth-000/labels.csv", "synth-000/predictions.csv",
        "config.echo"}) {
    EXPECT_EQ(slurp(dir / "a" / rel), slurp(dir / "b" / rel)) << rel;
  }
  fs::remove_all(dir);
}

TEST(Cli, UnknownConfigKeyIsContractViolation) {
  const auto dir = temp_dir("badkey");
  auto r = run("synth --out " + (dir / "x").string() + " --set synth.bogus=1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("synth.bogus"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, IngestFixturesAndWrongChannelListsAvailable) {
  const auto dir = temp_dir("ingest");
  const auto edf_dir = dir / "edf";
  fs::create_directories(edf_dir);

  // 4 records x 30 s = 120 s of signal, annotated W/N1/N2 + a trailing
  // excluded span.
  auto psg = fixtures::make_psg(4);
  std::vector<mrnet::edf::Annotation> anns{{0.0, 60.0, "Sleep stage W"},
                                           {60.0, 30.0, "Sleep stage 1"},
                                           {90.0, 30.0, "Movement time"}};
  auto hyp = fixtures::make_hypnogram(anns, 120.0);
  {
    auto bytes = mrnet::edf::write_edf(psg);
    std::ofstream out(edf_dir / "FX001-PSG.edf", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  {
    auto bytes = mrnet::edf::write_edf(hyp);
    std::ofstream out(edf_dir / "FX001-Hypnogram.edf", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }

  auto r = run("ingest --edf " + edf_dir.string() + " --out " + (dir / "stores").string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto store = mrnet::store::read_store(dir / "stores" / "FX001");
  EXPECT_EQ(store.labels.size(), 3u);  // 2 W + 1 N1; movement excluded
  EXPECT_EQ(store.epochs[0].size(), 3072u);

  auto summary = nlohmann::json::parse(std::ifstream(dir / "stores" / "ingest_summary.json"));
  ASSERT_EQ(summary["records"].size(), 1u);
  EXPECT_EQ(summary["records"][0]["epochs"], 3);
  EXPECT_EQ(summary["records"][0]["excluded"], 1);
  EXPECT_EQ(summary["records"][0]["stage_counts"]["W"], 2);
  EXPECT_EQ(summary["records"][0]["stage_counts"]["N1"], 1);

  r = run("ingest --edf " + edf_dir.string() + " --out " + (dir / "x").string() +
          " --channel \"EEG Cz-Oz\"");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("EEG Fpz-Cz"), std::string::npos);
  EXPECT_NE(r.output.find("EEG Pz-Oz"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, CorrectOnConstantPredictionsIsIdentity) {
  const auto dir = temp_dir("noop");
  // Build a store whose labels provide a transition model.
  ASSERT_EQ(run("synth --out " + (dir / "data").string() +
                " --set synth.records=1 --set synth.epochs_per_record=40")
                .exit_code,
            0);
  // Constant predictions: never triggers.
  std::vector<std::array<double, 5>> probs(12, {0.9, 0.025, 0.025, 0.025, 0.025});
  fs::create_directories(dir / "preds" / "rec");
  mrnet::csv::write_predictions(dir / "preds" / "rec" / "predictions.csv", probs);
  auto r = run("correct --preds " + (dir / "preds").string() + " --train-labels " +
               (dir / "data").string() + " --out " + (dir / "out").string() +
               " --set msc.laplace_smoothing=true");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  auto corrected = mrnet::store::read_labels_csv(dir / "out" / "rec" / "corrected.csv");
  EXPECT_EQ(corrected, mrnet::StageSeq(12, mrnet::Stage::Wake));
  fs::remove_all(dir);
}

TEST(Cli, FilePipelineMatchesInProcessComposition) {
  const auto dir = temp_dir("equiv");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run("synth --out " + data +
                " --set synth.records=1 --set synth.epochs_per_record=15")
                .exit_code,
            0);
  ASSERT_EQ(run("train --data " + data + " --out " + (dir / "run").string() + " " +
                tiny_net_flags() +
                " --set train.epochs=1 --set train.batch_size=8 --set train.lr0=0.005")
                .exit_code,
            0);
  ASSERT_EQ(run("predict --model " + (dir / "run" / "model.mrn1").string() + " --data " +
                data + " --out " + (dir / "preds").string())
                .exit_code,
            0);

  // In-process composition over the same store and checkpoint.
  auto ckpt = mrnet::ckpt::load(dir / "run" / "model.mrn1");
  mrnet::RunConfig cfg;
  for (const auto& [key, value] : ckpt.manifest["config"].items()) {
    if (key.starts_with("network.")) cfg.set(key, value.get<std::string>());
  }
  mrnet::Model<float> model(cfg.model_config(), 0);
  mrnet::ckpt::load_into(ckpt, model);

  auto store = mrnet::store::read_store(dir / "data" / "synth-000");
  auto file_preds = mrnet::csv::read_predictions(dir / "preds" / "synth-000" /
                                                 "predictions.csv");
  const int len = model.config().backbone.input_length;
  ASSERT_EQ(file_preds.probs.size(), store.epochs.size());
  for (std::size_t e = 0; e < store.epochs.size(); ++e) {
    std::vector<float> slice(store.epochs[e].begin(), store.epochs[e].begin() + len);
    auto p = model.infer(mrnet::Grid<float>(len, 1, std::move(slice)));
    for (int c = 0; c < 5; ++c) {
      // Serialization is lossless at 32-bit precision.
      EXPECT_EQ(static_cast<float>(file_preds.probs[e][c]), p[c]) << e << "," << c;
    }
    EXPECT_EQ(file_preds.labels[e],
              mrnet::Model<float>::argmax_stage(std::span<const float>(p.data(), 5)));
  }
  fs::remove_all(dir);
}

TEST(Cli, EvalRejectsMismatchedLengthsWithExitTwo) {
  const auto dir = temp_dir("evalbad");
  mrnet::store::write_labels_csv(dir / "truth.csv", mrnet::StageSeq(5, mrnet::Stage::N2));
  mrnet::store::write_labels_csv(dir / "pred.csv", mrnet::StageSeq(4, mrnet::Stage::N2));
  auto r = run("eval --truth " + (dir / "truth.csv").string() + " --pred " +
               (dir / "pred.csv").string());
  EXPECT_EQ(r.exit_code, 2);
  fs::remove_all(dir);
}

}  // namespace
