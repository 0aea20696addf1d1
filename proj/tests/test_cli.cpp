#include "thnn/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(THNN_CLI_PATH) + " " + args + " 2>&1";
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("thnn_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void generate() {
    const Outcome r = run("generate --vertices 60 --order 3 --noise 0.1 --seed 1 --hypergraph " +
                          path("h.txt") + " --features " + path("f.txt"));
    ASSERT_EQ(r.code, 0) << r.out;
  }

  std::string train_args(const std::string& out) const {
    return "train --hypergraph " + path("h.txt") + " --features " + path("f.txt") +
           " --rank 4 --hidden 4 --epochs 5 --out-dir " + path(out);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, BuildUniformKnn) {
  generate();
  const Outcome r = run("build --features " + path("f.txt") + " --k 4 --out " + path("knn.txt"));
  ASSERT_EQ(r.code, 0) << r.out;
  const thnn::Hypergraph h = thnn::load_hypergraph(path("knn.txt"));
  EXPECT_EQ(thnn::is_uniform(h), 4);
  EXPECT_EQ(h.num_vertices(), 60);
}

TEST_F(Cli, BernoulliBuildIsSeeded) {
  generate();
  const std::string base = "build --features " + path("f.txt") + " --k 4 --mode bernoulli ";
  ASSERT_EQ(run(base + "--seed 7 --out " + path("a.txt")).code, 0);
  ASSERT_EQ(run(base + "--seed 7 --out " + path("b.txt")).code, 0);
  EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
}

TEST_F(Cli, MalformedFeatureFileReportsLine) {
  std::ofstream(path("bad.txt")) << "features v1 2 1 2\n0.5\nfoo\n0\n1\ntrain\ntest\n";
  const Outcome r = run("build --features " + path("bad.txt") + " --k 2 --out " + path("o.txt"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find(":3:"), std::string::npos) << r.out;
}

TEST_F(Cli, TrainWritesArtifactsAndEvaluateAgrees) {
  generate();
  const Outcome r = run(train_args("run"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"model.json", "metrics.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
  }
  const std::string metrics = slurp(dir_ / "run" / "metrics.csv");
  EXPECT_EQ(metrics.rfind("epoch,loss,train_acc,val_acc,test_acc\n", 0), 0u);
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 6);

  const Outcome e = run("evaluate --model " + path("run/model.json") + " --hypergraph " +
                        path("h.txt") + " --features " + path("f.txt"));
  ASSERT_EQ(e.code, 0) << e.out;
  const auto test_line = [](const std::string& s) {
    const auto at = s.find("test accuracy");
    return s.substr(at, s.find('\n', at) - at);
  };
  EXPECT_EQ(test_line(e.out), test_line(r.out));
}

TEST_F(Cli, TrainBaselineModel) {
  generate();
  const Outcome r = run(train_args("hgnn") + " --model hgnn");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("model hgnn"), std::string::npos) << r.out;
}

TEST_F(Cli, MixedEdgeSizesNeedAnExtension) {
  generate();
  std::ofstream(path("h.txt"), std::ios::app) << "0 1\n5 6 7 8\n";
  const Outcome bad = run(train_args("u"));
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("global-node"), std::string::npos) << bad.out;
  EXPECT_NE(bad.out.find("multi-uniform"), std::string::npos) << bad.out;
  const Outcome ok = run(train_args("m") + " --nonuniform-mode multi-uniform");
  EXPECT_EQ(ok.code, 0) << ok.out;
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  generate();
  std::ofstream(path("cfg.toml")) << "epochs = 3\nrank = 2\n";
  const Outcome r = run(train_args("c") + " --config " + path("cfg.toml"));
  ASSERT_EQ(r.code, 0) << r.out;
  // --epochs 5 on the command line wins over the file.
  const std::string metrics = slurp(dir_ / "c" / "metrics.csv");
  EXPECT_EQ(std::count(metrics.begin(), metrics.end(), '\n'), 6);
  std::ofstream(path("bad.toml")) << "width = 3\n";
  EXPECT_EQ(run(train_args("d") + " --config " + path("bad.toml")).code, 2);
}

TEST_F(Cli, MetricsAreByteIdenticalAcrossRuns) {
  generate();
  ASSERT_EQ(run(train_args("a")).code, 0);
  ASSERT_EQ(run(train_args("b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.csv"), slurp(dir_ / "b" / "metrics.csv"));
}

TEST_F(Cli, CheckManifest) {
  generate();
  ASSERT_EQ(run(train_args("run")).code, 0);
  Outcome r = run("check-manifest " + path("run/manifest.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("manifest ok"), std::string::npos);
  std::ofstream(path("f.txt"), std::ios::app) << "# edited\n";
  r = run("check-manifest " + path("run/manifest.json"));
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("f.txt"), std::string::npos) << r.out;
}

TEST_F(Cli, Sweep) {
  generate();
  const Outcome r = run("sweep --hypergraph " + path("h.txt") + " --features " + path("f.txt") +
                        " --hidden 4 --epochs 3 --axis rank --values 2,4 --seeds 0,1 --out " +
                        path("sweep.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(path("sweep.csv"));
  EXPECT_EQ(csv.rfind("axis_value,seed,test_acc\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST_F(Cli, VerifyPassesAndDetectsPlantedFault) {
  const Outcome ok = run("verify");
  EXPECT_EQ(ok.code, 0) << ok.out;
  const Outcome bad = run("verify --plant-fault");
  EXPECT_EQ(bad.code, 1) << bad.out;
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos) << bad.out;
}

TEST_F(Cli, BenchReportsParameterRatio) {
  const Outcome r = run("bench --orders 4 --edges 20,40 --out " + path("bench.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream csv(slurp(path("bench.csv")));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "order,edges,vertices,rank,dim,seconds,cp_params,naive_params,param_ratio");
  const double ratio = std::stod(row.substr(row.rfind(',') + 1));
  EXPECT_GT(ratio, 1000.0);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("bench --edges ''").code, 2);
  EXPECT_EQ(run("bench --orders 3,,4").code, 2);
  EXPECT_EQ(run("train --rank 4").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
}
