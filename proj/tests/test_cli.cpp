#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "isa/checkpoint.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("isa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" ISA_CLI "' " + args + " >out.txt 2>err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::size_t lines(const std::string& name) const {
    const std::string s = read(name);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  }

  void gen() const {
    ASSERT_EQ(run("gen-circles --per-class 8 --len 12:20 --seed 7"), 0) << read("err.txt");
  }

  fs::path dir_;
};

TEST_F(Cli, GenCirclesCountsAndDeterminism) {
  ASSERT_EQ(run("gen-circles --per-class 100 --loops 2,3 --len 50:200 --seed 7 --split 1"), 0);
  EXPECT_EQ(lines("circles.jsonl"), 200u);
  const std::string first = read("circles.jsonl");
  ASSERT_EQ(run("gen-circles --per-class 100 --loops 2,3 --len 50:200 --seed 7 --split 1"), 0);
  EXPECT_EQ(read("circles.jsonl"), first);
  ASSERT_EQ(run("gen-circles --per-class 4 --loops 2,3,4 --seed 1 --split 1 --prefix three"), 0);
  EXPECT_NE(read("three.jsonl").find("\"label\":2"), std::string::npos);
  const auto manifest = nlohmann::json::parse(read("three-manifest.json"));
  EXPECT_EQ(manifest.at("command"), "gen-circles");
  EXPECT_EQ(manifest.at("seed"), 1);
}

TEST_F(Cli, TrainEncodeEvalPipeline) {
  gen();
  ASSERT_EQ(run("train --train circles-train.jsonl --val circles-val.jsonl --out m.ckpt --hidden 6 "
                "--epochs 2 --stop linear --seed 3 --plot loss.svg"),
            0)
      << read("err.txt");
  EXPECT_EQ(lines("m.ckpt.history.csv"), 3u);
  EXPECT_EQ(read("loss.svg").rfind("<svg", 0), 0u);
  const auto manifest = nlohmann::json::parse(read("m.ckpt.manifest.json"));
  EXPECT_EQ(manifest.at("config").at("hidden_size"), 6);
  EXPECT_EQ(manifest.at("config").at("stop").at("mechanism"), "linear");

  ASSERT_EQ(run("encode --model m.ckpt --input circles-test.jsonl --out reps.jsonl --csv reps.csv"), 0);
  EXPECT_EQ(read("reps.csv").substr(0, 30), "id,label,z0,z1,z2,z3,z4,z5\ncir");
  ASSERT_EQ(run("encode --model m.ckpt --input circles-train.jsonl --out train-reps.jsonl"), 0);
  ASSERT_EQ(run("eval --representations --train train-reps.jsonl --test reps.jsonl --out a.csv"), 0);
  ASSERT_EQ(run("eval --model m.ckpt --train circles-train.jsonl --test circles-test.jsonl --out b.csv"), 0);
  EXPECT_EQ(read("a.csv"), read("b.csv"));
  EXPECT_EQ(read("a.csv").rfind("k,train_size,test_size,accuracy\n1,", 0), 0u);
}

TEST_F(Cli, ManifestReproducesCheckpoint) {
  gen();
  ASSERT_EQ(run("train --train circles-train.jsonl --out a.ckpt --hidden 5 --epochs 2 --stop tanh "
                "--gamma 2 --precision single --seed 4"),
            0);
  ASSERT_EQ(run("train --config a.ckpt.manifest.json --train circles-train.jsonl --out b.ckpt"), 0);
  EXPECT_EQ(read("a.ckpt"), read("b.ckpt"));
  ASSERT_EQ(run("--workers 2 train --config a.ckpt.manifest.json --train circles-train.jsonl --out c.ckpt"), 0);
  EXPECT_EQ(isa::load_checkpoint(dir_ / "c.ckpt").params, isa::load_checkpoint(dir_ / "a.ckpt").params);
}

TEST_F(Cli, ReconstructWritesStopTrace) {
  gen();
  ASSERT_EQ(run("train --train circles-train.jsonl --out m.ckpt --hidden 4 --epochs 1 --stop exp --gamma 3"), 0);
  ASSERT_EQ(run("reconstruct --model m.ckpt --input circles-test.jsonl --out rec.jsonl --plot s.svg"), 0)
      << read("err.txt");
  EXPECT_EQ(lines("rec.jsonl"), lines("circles-test.jsonl"));
  const std::string trace = read("rec.jsonl.trace.csv");
  EXPECT_EQ(trace.rfind("id,t,stop_observed,stop_reconstructed,sequence_mse\n", 0), 0u);
  EXPECT_NE(read("s.svg").find("polyline"), std::string::npos);
}

TEST_F(Cli, DtwAndSemisup) {
  gen();
  ASSERT_EQ(run("dtw --vocab circles-val.jsonl --input circles-test.jsonl --out d.jsonl --band 5"), 0);
  EXPECT_EQ(lines("d.jsonl"), lines("circles-test.jsonl"));
  ASSERT_EQ(run("semisup --train circles-train.jsonl --test circles-test.jsonl --hidden 4 --epochs 1 "
                "--fractions 0.5,1 --out s.csv"),
            0)
      << read("err.txt");
  EXPECT_EQ(lines("s.csv"), 3u);
  EXPECT_EQ(read("s.csv").rfind("fraction,train_size,accuracy\n0.5,", 0), 0u);
}

TEST_F(Cli, TuneWritesBestConfig) {
  gen();
  ASSERT_EQ(run("tune --train circles-train.jsonl --val circles-val.jsonl --hidden-grid 3,4 --epochs 1 "
                "--stop-grid none,tanh --gamma-grid 1,2 --out best.json"),
            0)
      << read("err.txt");
  EXPECT_EQ(lines("best.json.losses.csv"), 7u);
  EXPECT_NO_THROW(nlohmann::json::parse(read("best.json")).at("hidden_size"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("train --out x"), 1);
  EXPECT_EQ(run("train --train missing.jsonl --out x"), 2);
  EXPECT_NE(read("err.txt").find("missing.jsonl"), std::string::npos);
  gen();
  EXPECT_EQ(run("train --train circles-train.jsonl --out x --alpha 2"), 1);
  {
    std::ofstream bad(dir_ / "bad.ckpt");
    bad << "ISACKPT";
  }
  EXPECT_EQ(run("encode --model bad.ckpt --input circles-test.jsonl --out r.jsonl"), 2);
  {
    std::ofstream nan(dir_ / "nan.jsonl");
    nan << "{\"id\":\"a\",\"features\":[[0,0],[1e308,1e308],[-1e308,1e308]]}\n";
  }
  EXPECT_EQ(run("train --train nan.jsonl --out n.ckpt --no-normalize --epochs 1 --hidden 2"), 3)
      << read("err.txt");
}

TEST_F(Cli, DataDirEnvironment) {
  gen();
  const std::string cmd = "cd / && ISA_DATA_DIR='" + dir_.string() + "' '" ISA_CLI
                          "' gen-circles --per-class 2 --split 1 --prefix env >/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "env.jsonl"));
}

}  // namespace
