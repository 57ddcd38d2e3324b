#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/run.hpp"

namespace fs = std::filesystem;
using namespace covtest::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "covtest");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("covtest_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, BadObservationProbabilityIsConfigError) {
  write("bad.ini", "[sample]\na = 1.5\nn = 10\n[model]\np = 8\n");
  const auto r = invoke({"simulate", "--config", path("bad.ini").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("sample.a"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("(0,1]"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.rfind("error: {", 0), 0u) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, SetOverridesConfigFile) {
  write("ok.ini", "[sample]\na = 1.5\nn = 4\n[model]\np = 3\n");
  const auto r = invoke({"simulate", "--config", path("ok.ini").string(), "--set", "sample.a=0.5"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
}

TEST_F(CliTest, UnknownCommandAndMissingKeys) {
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitConfig);
  const auto r = invoke({"test", "--set", "sample.n=10", "--set", "model.p=20"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("test.alpha"), std::string::npos) << r.err;
}

TEST_F(CliTest, PreconditionAndIoExitCodes) {
  const auto pre = invoke({"stat", "--set", "sample.n=5", "--set", "model.p=6", "--set", "stat.m=6"});
  EXPECT_EQ(pre.code, kExitPrecondition) << pre.err;
  const auto io = invoke({"stat", "--set", "sample.path=" + path("missing.csv").string(), "--set", "stat.m=2"});
  EXPECT_EQ(io.code, kExitIo) << io.err;
  const auto bad_out = invoke({"simulate", "--set", "sample.n=3", "--set", "model.p=3", "--out",
                               (dir_ / "no" / "such" / "dir.csv").string()});
  EXPECT_EQ(bad_out.code, kExitIo);
}

TEST_F(CliTest, SameSeedGivesByteIdenticalFiles) {
  const std::vector<std::string> base{"simulate", "--set", "sample.n=20", "--set", "sample.a=0.7",
                                      "--set", "model.source=extremal_toeplitz", "--set", "model.p=30",
                                      "--set", "model.alpha=1", "--set", "model.phi=0.2"};
  auto with = [&](const std::string& seed, const std::string& file) {
    auto args = base;
    args.insert(args.end(), {"--seed", seed, "--out", path(file).string()});
    return invoke(args);
  };
  ASSERT_EQ(with("41", "a.csv").code, kExitOk);
  ASSERT_EQ(with("41", "b.csv").code, kExitOk);
  ASSERT_EQ(with("42", "c.csv").code, kExitOk);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(CliTest, TestOnStoredSampleAndModelGivesOneRow) {
  const auto sim = invoke({"simulate", "--set", "sample.n=40", "--set", "sample.a=0.8", "--set",
                           "model.source=toeplitz", "--set", "model.diagonals=1,0.3,0.1,0,0,0,0,0,0,0,0,0,0,0,0,0",
                           "--set", "model.out=" + path("model.csv").string(), "--set", "model.out_form=toeplitz",
                           "--out", path("sample.csv").string(), "--seed", "3"});
  ASSERT_EQ(sim.code, kExitOk) << sim.err;
  write("test.ini",
        "[model]\nsource = file\npath = " + path("model.csv").string() + "\n[sample]\npath = " +
            path("sample.csv").string() + "\na = 0.8\n[test]\nkind = toeplitz\nalpha = 1\nphi = 0.3\n");
  const auto r = invoke({"test", "--config", path("test.ini").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string header;
  std::string row;
  std::string extra;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_FALSE(std::getline(lines, extra));
  EXPECT_EQ(header, "kind,mode,n,p,a,alpha,phi,m_or_grid,statistic,threshold,reject");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 10);
  EXPECT_TRUE(row.back() == '0' || row.back() == '1') << row;
  EXPECT_EQ(row.rfind("toeplitz,gaussian,40,16,", 0), 0u) << row;
}

TEST_F(CliTest, AdaptJsonlListsLevels) {
  const auto r = invoke({"adapt", "--set", "sample.n=50", "--set", "model.p=100", "--set", "sample.a=0.8",
                         "--format", "jsonl"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("\"per_level\""), std::string::npos);
  EXPECT_NE(r.out.find("\"mode\":\"adaptive\""), std::string::npos);
}

TEST_F(CliTest, SweepIsThreadInvariant) {
  write("sweep.ini",
        "[run]\nseed = 11\n[sweep]\nmode = bisect\nkind = general\nn = 30, 60\np = 64\na = 0.8\nalpha = 1\n"
        "R = 80\nsteps = 3\nclamp_bandwidth = true\n");
  const auto one = invoke({"sweep", "--config", path("sweep.ini").string(), "--threads", "1", "--out",
                           path("one.csv").string()});
  const auto three = invoke({"sweep", "--config", path("sweep.ini").string(), "--threads", "3", "--out",
                             path("three.csv").string()});
  ASSERT_EQ(one.code, kExitOk) << one.err;
  ASSERT_EQ(three.code, kExitOk) << three.err;
  const auto text = slurp(path("one.csv"));
  EXPECT_EQ(text, slurp(path("three.csv")));
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "scenario_id,kind,n,p,a,alpha,phi,C,R,eta_hat,beta_hat,gamma_hat,se_eta,se_beta,wall_ms");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST_F(CliTest, SweepRejectsInvalidListEntry) {
  const auto r = invoke({"sweep", "--set", "sweep.n=30,40", "--set", "sweep.p=64", "--set", "sweep.a=0.5,1.2"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("sweep.a"), std::string::npos);
}

TEST_F(CliTest, SelftestPasses) {
  const auto r = invoke({"selftest", "--seed", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("PASS oracle_equivalence"), std::string::npos);
}

TEST(ConfigFile, ParsesSectionsAndComments) {
  std::istringstream is("# leading comment\n[run]\nseed = 5\n[sweep]\nn = 10, 20 ,30\nflag = true\n");
  const auto cfg = ConfigFile::parse(is);
  EXPECT_EQ(cfg.get_u64("run.seed"), 5u);
  EXPECT_EQ(cfg.get_ints("sweep.n"), (std::vector<int>{10, 20, 30}));
  EXPECT_TRUE(cfg.get_bool("sweep.flag"));
  EXPECT_EQ(cfg.get_int("sweep.missing", 7), 7);
  try {
    cfg.get_double("sweep.flag");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "sweep.flag");
  }
}
