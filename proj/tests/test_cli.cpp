#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "lovit/cli.hpp"
#include "lovit/io.hpp"
#include "lovit/transition_map.hpp"

using namespace lovit;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "lovit");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return cli_main(static_cast<int>(args.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lovit_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string toy_config(const fs::path& dir) {
  const std::string path = (dir / "toy.cfg").string();
  io::write_text(path, ModelConfig::toy().to_text());
  return path;
}

}  // namespace

TEST(CliHeatmap, BoundaryPlusTwelve) {
  const fs::path dir = fresh_dir("heatmap");
  PhaseTrack t;
  t.labels = {0, 0, 0};
  t.labels.insert(t.labels.end(), 30, 1);
  io::write_labels((dir / "l.csv").string(), t);
  ASSERT_EQ(run({"heatmap", "--labels", (dir / "l.csv").string(), "--out", (dir / "h.csv").string()}), 0);
  const std::string csv = io::read_text((dir / "h.csv").string());
  // Boundary at position 3 is frame 4; frame 16 is twelve frames later.
  char want[64];
  std::snprintf(want, sizeof want, "\n16,%.9f\n", std::exp(-0.5));
  EXPECT_NE(csv.find(want), std::string::npos) << csv;
  EXPECT_NE(csv.find("\n4,1.000000000\n"), std::string::npos);
  EXPECT_EQ(csv.rfind("frame,heat\n", 0), 0u);
}

TEST(CliVerify, ExitsZero) { EXPECT_EQ(run({"verify"}), 0); }

TEST(CliGen, DeterministicBytes) {
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  const std::string cfg = toy_config(a);
  for (const auto& d : {a, b}) {
    ASSERT_EQ(run({"gen", "--out-dir", d.string(), "--videos", "2", "--frames", "40", "--seed", "3",
                   "--config", cfg, "--weights", (d / "w.lvwt").string()}),
              0);
  }
  for (const char* f : {"video_000.lvfe", "video_001.csv", "w.lvwt"}) {
    EXPECT_EQ(io::read_bytes((a / f).string()), io::read_bytes((b / f).string())) << f;
  }
  EXPECT_NE(io::read_bytes((a / "video_000.lvfe").string()), io::read_bytes((a / "video_001.lvfe").string()));
}

TEST(CliPipeline, InferThenEval) {
  const fs::path d = fresh_dir("pipeline");
  const std::string cfg = toy_config(d);
  const std::string w = (d / "w.lvwt").string();
  ASSERT_EQ(run({"gen", "--out-dir", d.string(), "--videos", "1", "--frames", "60", "--seed", "1",
                 "--config", cfg, "--weights", w}),
            0);
  const std::string pred = (d / "pred.csv").string();
  ASSERT_EQ(run({"infer", "--features", (d / "video_000.lvfe").string(), "--weights", w, "--out", pred,
                 "--config", cfg}),
            0);
  EXPECT_EQ(io::read_phase_column(pred).size(), 60u);
  const std::string per_phase = (d / "pp.csv").string();
  EXPECT_EQ(run({"eval", "--pred", pred, "--gt", (d / "video_000.csv").string(), "--per-phase-csv", per_phase}), 0);
  EXPECT_EQ(io::read_text(per_phase).rfind("phase,precision,recall,jaccard", 0), 0u);
  EXPECT_EQ(run({"eval", "--relaxed", "--pred", pred, "--gt", (d / "video_000.csv").string()}), 0);
}

TEST(CliErrors, NonzeroExitCodes) {
  const fs::path d = fresh_dir("errors");
  EXPECT_NE(run({}), 0);
  EXPECT_NE(run({"nonsense"}), 0);
  EXPECT_NE(run({"infer"}), 0);
  EXPECT_EQ(run({"heatmap", "--labels", (d / "missing.csv").string()}), 2);
  io::write_text((d / "bad.lvfe").string(), "garbage");
  io::write_text((d / "w.lvwt").string(), "garbage");
  EXPECT_EQ(run({"infer", "--features", (d / "bad.lvfe").string(), "--weights", (d / "w.lvwt").string(),
                 "--out", (d / "o.csv").string()}),
            2);
  EXPECT_EQ(run({"bench", "--lengths", "16,x"}), 1);
  EXPECT_EQ(run({"bench", "--mode", "quantum", "--lengths", "16,32"}), 1);
  EXPECT_EQ(run({"eval", "--pred", "a", "b", "--gt", "c"}), 1);
}

TEST(CliBench, SmallRun) { EXPECT_EQ(run({"bench", "--lengths", "16,32", "--reps", "1", "--mode", "sparse"}), 0); }
