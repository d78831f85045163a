#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "marsbid/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"([synthetic]
n_hours = 2400
[split]
train = 2018-01-01:2018-02-28
test1 = 2018-03-01:2018-03-20
test2 = 2018-03-21:2018-04-10
[ppo_base]
total_steps = 1024
steps_per_update = 256
epochs = 2
hidden = 16
[ppo_meta]
total_steps = 512
steps_per_update = 256
epochs = 2
hidden = 16
[eval]
rolling_window = 48
)";

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("marsbid_pipeline_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.ini") << kTinyConfig;
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(MARSBID_CLI) + " --config " + (dir_ / "tiny.ini").string() + " --out " +
                            (dir_ / "out").string() + " " + args + " >> " + (dir_ / "log.txt").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string log() const {
    std::ifstream in(dir_ / "log.txt");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path out(const std::string& rel) const { return dir_ / "out" / rel; }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Pipeline, SmokeRunFinishesQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(run("generate-data"), 0) << log();
  ASSERT_EQ(run("train --phase university"), 0) << log();
  ASSERT_EQ(run("train --phase meta"), 0) << log();
  ASSERT_EQ(run("evaluate --policy mars"), 0) << log();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(60));
  for (const char* f : {"seed_7/safe.ckpt", "seed_7/spec.ckpt", "seed_7/meta_k2.ckpt", "seed_7/train_safe.csv",
                        "eval/mars/test1/aggregate.json", "eval/mars/test1/seed_7_ledger.csv",
                        "eval/mars/test1/seed_7_rolling.csv", "eval/mars/test1/per_seed.csv"}) {
    EXPECT_TRUE(fs::exists(out(f))) << f;
  }
  EXPECT_FALSE(fs::exists(out("seed_7/neutral.ckpt")));
  const auto ledger = read(out("eval/mars/test1/seed_7_ledger.csv"));
  EXPECT_EQ(ledger.rfind("# marsbid config_hash=", 0), 0u);
  EXPECT_NE(ledger.find("w_safe"), std::string::npos);
}

TEST_F(Pipeline, ThreeWorkerEnsembleWritesThreeCheckpoints) {
  ASSERT_EQ(run("generate-data"), 0) << log();
  ASSERT_EQ(run("--set ensemble.k=3 train --phase university"), 0) << log();
  for (const char* r : {"safe", "spec", "neutral"}) EXPECT_TRUE(fs::exists(out(std::string("seed_7/") + r + ".ckpt")));
}

TEST_F(Pipeline, MetaRefusesWithoutWorkers) {
  ASSERT_EQ(run("generate-data"), 0) << log();
  EXPECT_EQ(run("train --phase meta"), 3);
  EXPECT_NE(log().find("safe"), std::string::npos);
  EXPECT_FALSE(fs::exists(out("seed_7/meta_k2.ckpt")));
}

TEST_F(Pipeline, MissingDataAndBadArguments) {
  EXPECT_EQ(run("train --phase university"), 3);
  ASSERT_EQ(run("generate-data"), 0) << log();
  EXPECT_EQ(run("evaluate --policy rolling_opt --split validation"), 2);
  EXPECT_EQ(run("evaluate --policy nonsense"), 2);
  EXPECT_EQ(run("train --phase nonsense"), 2);
  EXPECT_EQ(run("--set nosuch.key=1 config"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
}

TEST_F(Pipeline, StaticNeedsNoMetaAndRollingOptIsSeedInvariant) {
  ASSERT_EQ(run("generate-data"), 0) << log();
  ASSERT_EQ(run("--seed 1 --seed 2 train --phase university"), 0) << log();
  ASSERT_EQ(run("--seed 1 --seed 2 evaluate --policy static"), 0) << log();
  EXPECT_FALSE(fs::exists(out("seed_1/meta_k2.ckpt")));
  ASSERT_EQ(run("--seed 1 --seed 2 evaluate --policy rolling_opt --split test2"), 0) << log();
  EXPECT_EQ(read(out("eval/rolling_opt/test2/seed_1_ledger.csv")).substr(read(out("eval/rolling_opt/test2/seed_1_ledger.csv")).find('\n')),
            read(out("eval/rolling_opt/test2/seed_2_ledger.csv")).substr(read(out("eval/rolling_opt/test2/seed_2_ledger.csv")).find('\n')));
  const auto agg = nlohmann::json::parse(read(out("eval/rolling_opt/test2/aggregate.json")));
  EXPECT_EQ(agg.at("std").at("sharpe").get<double>(), 0.0);
}

TEST_F(Pipeline, PairedEpisodeStartsAcrossPolicies) {
  ASSERT_EQ(run("generate-data"), 0) << log();
  ASSERT_EQ(run("--set eval.episodes=4 --set eval.rolling_window=24 train --phase university"), 0) << log();
  ASSERT_EQ(run("--set eval.episodes=4 --set eval.rolling_window=24 evaluate --policy safe"), 0) << log();
  ASSERT_EQ(run("--set eval.episodes=4 --set eval.rolling_window=24 evaluate --policy rolling_opt"), 0) << log();
  const auto timestamps = [&](const std::string& pol) {
    std::ifstream in(out("eval/" + pol + "/test1/seed_7_ledger.csv"));
    std::string line, ts;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) ts += line.substr(0, line.find(',')) + "\n";
    return ts;
  };
  EXPECT_EQ(timestamps("safe"), timestamps("rolling_opt"));
}

TEST_F(Pipeline, AblationHasOneRowPerConfiguration) {
  ASSERT_EQ(run("generate-data"), 0) << log();
  ASSERT_EQ(run("ablate"), 0) << log();
  std::ifstream in(out("ablate/ablation.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  }
  ASSERT_EQ(rows.size(), 1 + marsbid::ablation_matrix().size());
  for (std::size_t i = 0; i < marsbid::ablation_matrix().size(); ++i) {
    EXPECT_EQ(rows[i + 1].rfind(marsbid::ablation_matrix()[i].first + ",", 0), 0u);
  }
  ASSERT_EQ(run("report"), 0) << log();
  EXPECT_TRUE(fs::exists(out("report.csv")));
  // A second ablate reuses every checkpoint and reproduces the table.
  const auto first = read(out("ablate/ablation.csv"));
  const auto ckpt_time = fs::last_write_time(out("seed_7/meta_k3.ckpt"));
  ASSERT_EQ(run("ablate"), 0) << log();
  EXPECT_EQ(read(out("ablate/ablation.csv")), first);
  EXPECT_EQ(fs::last_write_time(out("seed_7/meta_k3.ckpt")), ckpt_time);
}

TEST_F(Pipeline, PeriodicCheckpoints) {
  ASSERT_EQ(run("generate-data"), 0) << log();
  ASSERT_EQ(run("--set io.checkpoint_every=2 train --phase vanilla"), 0) << log();
  EXPECT_TRUE(fs::exists(out("seed_7/vanilla_u2.ckpt")));
  EXPECT_TRUE(fs::exists(out("seed_7/vanilla_u4.ckpt")));
  EXPECT_TRUE(fs::exists(out("seed_7/vanilla.ckpt")));
}
