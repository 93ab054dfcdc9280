#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = hsnbench::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json csv_config(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# config: ", 0) == 0) return Json::parse(line.substr(10));
  }
  return {};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("hsnbench_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    unsetenv(hsnbench::kOutputDirEnv);
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, SynthWritesHashedCsv) {
  const auto r = invoke({"synth", "--dim", "3", "--n", "500", "--reps", "2", "--seed", "5", "--out", path("o")});
  ASSERT_EQ(r.code, hsnbench::kOk) << r.err;
  const auto cfg = csv_config(dir_ / "o" / "synth.csv");
  EXPECT_EQ(cfg["model"]["dim"], 3);
  EXPECT_EQ(cfg["model"]["n"], 500);
  EXPECT_EQ(cfg["seeds"]["seed"], 5);
  EXPECT_FALSE(fs::exists(dir_ / "o" / "synth.csv.tmp"));
}

TEST_F(CliTest, RerunsAreByteIdenticalAcrossWorkerCounts) {
  const std::vector<std::string> base = {"compare", "--dim", "3", "--n", "400", "--reps", "3", "--seed", "9"};
  auto a = base, b = base;
  a.insert(a.end(), {"--workers", "1", "--out", path("a")});
  b.insert(b.end(), {"--workers", "3", "--out", path("b")});
  ASSERT_EQ(invoke(a).code, hsnbench::kOk);
  ASSERT_EQ(invoke(b).code, hsnbench::kOk);
  for (const char* f : {"compare.csv", "compare.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  setenv(hsnbench::kOutputDirEnv, path("env").c_str(), 1);
  ASSERT_EQ(invoke({"synth", "--dim", "2", "--n", "100", "--reps", "1", "--name", "run1"}).code, hsnbench::kOk);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "run1.csv"));
  ASSERT_EQ(invoke({"synth", "--dim", "2", "--n", "100", "--reps", "1", "--out", path("flag")}).code, hsnbench::kOk);
  EXPECT_TRUE(fs::exists(dir_ / "flag" / "synth.csv"));
}

TEST_F(CliTest, InvalidCltWeightsExitTwoWithoutOutput) {
  const auto r = invoke({"clt", "--alpha", "0.3", "--beta", "0.3", "--out", path("clt")});
  EXPECT_EQ(r.code, hsnbench::kInvalidConfig);
  const Json e = Json::parse(r.err);
  EXPECT_EQ(e["error"]["kind"], "invalid_config");
  EXPECT_TRUE(e["error"].contains("field"));
  EXPECT_FALSE(fs::exists(dir_ / "clt"));
}

TEST_F(CliTest, InvalidArgumentsExitTwo) {
  EXPECT_EQ(invoke({"synth", "--dim", "0", "--out", path("x")}).code, hsnbench::kInvalidConfig);
  EXPECT_EQ(invoke({"synth", "--bogus"}).code, hsnbench::kInvalidConfig);
  EXPECT_EQ(invoke({}).code, hsnbench::kInvalidConfig);
  EXPECT_EQ(invoke({"synth", "--algo", "adam", "--out", path("x")}).code, hsnbench::kInvalidConfig);
  EXPECT_EQ(invoke({"synth", "--cadence", "log:0", "--out", path("x")}).code, hsnbench::kInvalidConfig);
  EXPECT_EQ(invoke({"synth", "--profile", "paper-real", "--out", path("x")}).code, hsnbench::kInvalidConfig);
  EXPECT_EQ(invoke({"qsl", "--n", "100", "--out", path("x")}).code, hsnbench::kInvalidConfig);
  EXPECT_FALSE(fs::exists(dir_ / "x"));
}

TEST_F(CliTest, HelpAndVersion) {
  const auto h = invoke({"--help"});
  EXPECT_EQ(h.code, hsnbench::kOk);
  EXPECT_NE(h.out.find("synth"), std::string::npos);
  EXPECT_EQ(invoke({"--version"}).out, "0.1.0\n");
}

TEST_F(CliTest, ConfigFileProfileAndFlagPrecedence) {
  {
    std::ofstream f(dir_ / "run.toml");
    f << "[synth]\ndim = 4\nn = 300\nreps = 1\n";
  }
  ASSERT_EQ(invoke({"--config", path("run.toml"), "synth", "--n", "200", "--out", path("c")}).code, hsnbench::kOk);
  auto cfg = csv_config(dir_ / "c" / "synth.csv");
  EXPECT_EQ(cfg["model"]["dim"], 4);
  EXPECT_EQ(cfg["model"]["n"], 200);

  // Profile values fill only what neither the file nor the flags set.
  ASSERT_EQ(invoke({"--config", path("run.toml"), "synth", "--profile", "paper-d100", "--out", path("p")}).code,
            hsnbench::kOk);
  cfg = csv_config(dir_ / "p" / "synth.csv");
  EXPECT_EQ(cfg["model"]["dim"], 4);
  EXPECT_EQ(cfg["optimizer"]["alpha"], 0.25);
  EXPECT_EQ(cfg["optimizer"]["beta"], 0.75);
  EXPECT_EQ(cfg["profile"], "paper-d100");
}

TEST_F(CliTest, ProfilesTable) {
  const auto& table = hsnbench::profiles();
  auto find = [&](const std::string& name) {
    for (const auto& p : table) {
      if (p.name == name) return p;
    }
    ADD_FAILURE() << name;
    return hsnbench::Profile{};
  };
  EXPECT_EQ(find("paper-d10").dim, 10);
  EXPECT_EQ(find("paper-d10").alpha, 1e-10);
  EXPECT_EQ(find("paper-d50").beta, 1.0 - 1e-10);
  EXPECT_EQ(find("paper-d100").alpha, 0.25);
  EXPECT_EQ(find("paper-d200").alpha, 0.9);
  EXPECT_EQ(find("paper-d200").beta, 0.1);
  EXPECT_EQ(find("paper-real").alpha, 1.0 - 1e-10);
}

TEST_F(CliTest, RealDataWithSeparateTestFile) {
  const fs::path fixtures = HSN_FIXTURE_DIR;
  const auto r = invoke({"real", "--train", (fixtures / "adult_train.csv").string(), "--test",
                         (fixtures / "adult_test.csv").string(), "--label", "income", "--positive", ">50K",
                         "--positive", ">50K.", "--categorical", "workclass", "--categorical", "education",
                         "--reps", "2", "--cadence", "every:10", "--out", path("real")});
  ASSERT_EQ(r.code, hsnbench::kOk) << r.err;
  const Json doc = Json::parse(slurp(dir_ / "real" / "real.json"));
  EXPECT_EQ(doc["config"]["data"]["train"], "adult_train.csv");
  EXPECT_EQ(doc["config"]["data"]["test_rows"], 20);
  EXPECT_EQ(doc["reference"]["provenance"], "batch-newton-fit");
  EXPECT_TRUE(doc["final_excess_risk"].contains("hsn"));
}

TEST_F(CliTest, RealDataErrors) {
  const fs::path fixtures = HSN_FIXTURE_DIR;
  EXPECT_EQ(invoke({"real", "--train", path("missing.csv"), "--label", "y", "--positive", "1", "--out", path("r")}).code,
            hsnbench::kIoError);
  EXPECT_EQ(invoke({"real", "--train", (fixtures / "adult_train.csv").string(), "--label", "nope", "--positive", "1",
                    "--out", path("r")})
                .code,
            hsnbench::kIoError);
  EXPECT_EQ(invoke({"real", "--train", (fixtures / "adult_train.csv").string(), "--out", path("r")}).code,
            hsnbench::kInvalidConfig);
  EXPECT_FALSE(fs::exists(dir_ / "r"));
}

TEST_F(CliTest, SelftestDetectsTamperedFiles) {
  ASSERT_EQ(invoke({"synth", "--dim", "2", "--n", "100", "--reps", "1", "--out", path("s")}).code, hsnbench::kOk);
  const auto file = (dir_ / "s" / "synth.csv").string();
  const auto ok = invoke({"selftest", file});
  ASSERT_EQ(ok.code, hsnbench::kOk) << ok.out;
  EXPECT_TRUE(Json::parse(ok.out)["pass"].get<bool>());

  std::string text = slurp(file);
  const auto pos = text.find("\"dim\":2");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 7, "\"dim\":3");
  {
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    f << text;
  }
  const auto bad = invoke({"selftest", file});
  EXPECT_EQ(bad.code, hsnbench::kDiagnosticFailure);
  EXPECT_FALSE(Json::parse(bad.out)["hash_checks"][0]["pass"].get<bool>());
}

}  // namespace
