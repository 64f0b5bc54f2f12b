#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "etcbench/cli.hpp"
#include "etcbench/corpus.hpp"
#include "json.hpp"

using namespace etcbench;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "etcbench");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "etcbench_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, EncryptDecryptRoundTrip) {
  const fs::path d = fresh_dir("roundtrip");
  write_image(smooth_image(64, 3), d / "plain.png");
  const std::string key = (d / "key.json").string();
  ASSERT_EQ(run({"encrypt", "--in", (d / "plain.png").string(), "--out", (d / "enc.png").string(), "--key", key,
                 "--gen-key"}),
            0);
  EXPECT_TRUE(fs::exists(d / "enc.png.provenance.json"));
  ASSERT_EQ(run({"decrypt", "--in", (d / "enc.png").string(), "--out", (d / "dec.ppm").string(), "--key", key}), 0);
  EXPECT_EQ(load_image(d / "dec.ppm"), load_image(d / "plain.png"));
  EXPECT_NE(load_image(d / "enc.png"), load_image(d / "plain.png"));
}

TEST(Cli, StepsAndInverse) {
  const fs::path d = fresh_dir("steps");
  write_image(smooth_image(32, 4), d / "plain.png");
  const std::string key = (d / "key.json").string();
  ASSERT_EQ(run({"steps", "--in", (d / "plain.png").string(), "--out", (d / "s.png").string(), "--key", key, "--mask",
                 "1,3", "--gen-key"}),
            0);
  ASSERT_EQ(run({"steps", "--decrypt", "--in", (d / "s.png").string(), "--out", (d / "back.png").string(), "--key", key,
                 "--mask", "1,3"}),
            0);
  EXPECT_EQ(load_image(d / "back.png"), load_image(d / "plain.png"));
  EXPECT_EQ(run({"steps", "--in", (d / "plain.png").string(), "--out", (d / "x.png").string(), "--key", key, "--mask",
                 "9"}),
            2);
}

TEST(Cli, OutputIsByteIdenticalAcrossRuns) {
  const fs::path d = fresh_dir("bytes");
  write_image(smooth_image(48, 5), d / "plain.png");
  const std::string key = (d / "key.json").string();
  ASSERT_EQ(run({"encrypt", "--in", (d / "plain.png").string(), "--out", (d / "a.png").string(), "--key", key,
                 "--gen-key"}),
            0);
  ASSERT_EQ(run({"encrypt", "--in", (d / "plain.png").string(), "--out", (d / "b.png").string(), "--key", key}), 0);
  EXPECT_EQ(slurp(d / "a.png"), slurp(d / "b.png"));
  ASSERT_EQ(run({"analyze", "--plain", (d / "plain.png").string(), "--enc", (d / "a.png").string(), "--out",
                 (d / "r1.json").string()}),
            0);
  ASSERT_EQ(run({"analyze", "--plain", (d / "plain.png").string(), "--enc", (d / "a.png").string(), "--out",
                 (d / "r2.json").string()}),
            0);
  EXPECT_EQ(slurp(d / "r1.json"), slurp(d / "r2.json"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"no-such-command"}), 2);
  EXPECT_EQ(run({"keyspace"}), 2);
  EXPECT_EQ(run({"keyspace", "--n", "3"}), 0);
  EXPECT_EQ(run({"keyspace", "--n", "0"}), 2);
  EXPECT_EQ(run({"encrypt", "--in", "/nonexistent.png", "--out", "x.png", "--key", "k.json"}), 2);
  const fs::path d = fresh_dir("codes");
  write_image(smooth_image(32, 1), d / "p.png");
  // Missing key file: the command runs and fails.
  EXPECT_EQ(run({"encrypt", "--in", (d / "p.png").string(), "--out", (d / "e.png").string(), "--key",
                 (d / "missing.json").string()}),
            1);
  EXPECT_EQ(run({"encrypt", "--in", (d / "p.png").string(), "--out", (d / "e.png").string(), "--key",
                 (d / "k.json").string(), "--gen-key", "--block-size", "0"}),
            2);
}

TEST(Cli, KeyspacePrintsExactInteger) {
  testing::internal::CaptureStdout();
  ASSERT_EQ(run({"keyspace", "--n", "2"}), 0);
  const std::string out = testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("K(n) = 18432"), std::string::npos);
  EXPECT_NE(out.find("log2 K(n) = 14.169925"), std::string::npos);
}

TEST(Cli, OutDirEnvironmentVariable) {
  const fs::path d = fresh_dir("envout");
  write_image(smooth_image(32, 2), d / "p.png");
  setenv("ETCBENCH_OUT_DIR", (d / "outputs").c_str(), 1);
  const int rc = run({"encrypt", "--in", (d / "p.png").string(), "--out", "rel.png", "--key", (d / "k.json").string(),
                      "--gen-key"});
  unsetenv("ETCBENCH_OUT_DIR");
  ASSERT_EQ(rc, 0);
  EXPECT_TRUE(fs::exists(d / "outputs" / "rel.png"));
}

TEST(Cli, DatasetTrainAttackPipeline) {
  const fs::path d = fresh_dir("pipeline");
  ASSERT_EQ(run({"gen-dataset", "--count", "24", "--size", "32", "--seed", "3", "--test-fraction", "0.25", "--out-dir",
                 (d / "data").string()}),
            0);
  const std::string manifest = (d / "data" / "manifest.json").string();
  ASSERT_EQ(run({"make-pairs", "--manifest", manifest, "--key-policy", "fresh"}), 0);
  {
    std::ofstream cfg(d / "cfg.json");
    cfg << R"({"epochs": 2, "batch_size": 4, "latent_dim": 8, "hidden_dim": 8, "embed_dim": 8})";
  }
  ASSERT_EQ(run({"train-attack", "--manifest", manifest, "--config", (d / "cfg.json").string(), "--out",
                 (d / "model.json").string()}),
            0);
  const auto m = load_manifest(manifest);
  const std::string enc = m.resolve(m.entries[0].encrypted).string();
  ASSERT_EQ(run({"attack", "--model", (d / "model.json").string(), "--in", enc, "--out", (d / "recon.png").string()}), 0);
  EXPECT_EQ(load_image(d / "recon.png").width(), 32);
  EXPECT_EQ(load_image(d / "recon.thumb.png").width(), 16);
  ASSERT_EQ(run({"eval-attack", "--model", (d / "model.json").string(), "--manifest", manifest, "--out",
                 (d / "scores.json").string()}),
            0);
  const auto scores = nlohmann::json::parse(slurp(d / "scores.json"));
  EXPECT_EQ(scores.at("images").get<int>(), 6);
  EXPECT_TRUE(scores.contains("attribute_correlation"));
  ASSERT_EQ(run({"eval", "--pairs", manifest, "--out", (d / "eval.json").string(), "--csv", (d / "eval.csv").string()}),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(d / "eval.json")).at("pairs").size(), 24u);
  EXPECT_TRUE(fs::exists(d / "eval.csv"));
}

TEST(Cli, PuzzleAttackScoresWithKey) {
  const fs::path d = fresh_dir("puzzle");
  write_image(smooth_image(64, 9), d / "p.png");
  const std::string key = (d / "k.json").string();
  ASSERT_EQ(run({"steps", "--in", (d / "p.png").string(), "--out", (d / "e.png").string(), "--key", key, "--mask", "1",
                 "--gen-key"}),
            0);
  ASSERT_EQ(run({"puzzle-attack", "--enc", (d / "e.png").string(), "--key", key, "--out", (d / "r.json").string(),
                 "--image-out", (d / "r.png").string()}),
            0);
  const auto r = nlohmann::json::parse(slurp(d / "r.json"));
  EXPECT_GE(r.at("direct_accuracy").get<double>(), 0.9);
  ASSERT_EQ(run({"puzzle-attack", "--enc", (d / "e.png").string(), "--truth", (d / "p.png").string(), "--out",
                 (d / "r2.json").string()}),
            0);
}
