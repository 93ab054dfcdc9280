#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "hsn/errors.hpp"
#include "hsn/report_io.hpp"
#include "hsn/rng.hpp"

namespace hsn {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("hsn_report_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Json sample_config() {
  return Json{{"subcommand", "synth"}, {"seed", 42}, {"alpha", 1e-10}, {"beta", 0.9999999999}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(ConfigHash, KeyOrderIndependentAndSensitive) {
  const Json a = Json::parse(R"({"b": 1, "a": [1, 2]})");
  const Json b = Json::parse(R"({"a": [1, 2], "b": 1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_NE(config_hash(a), config_hash(Json::parse(R"({"a": [2, 1], "b": 1})")));
  EXPECT_EQ(config_hash(a), fnv1a64(a.dump()));
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1e-10), "1e-10");
  EXPECT_EQ(format_number(-2.0), "-2");
  EXPECT_EQ(format_number(kNaN), "nan");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(SeriesCsv, Layout) {
  std::ostringstream out;
  const Series a = {{0, 1.0}, {10, 0.5}};
  const Series b = {{0, 2.0}, {10, kNaN}};
  write_series_csv(out, {{"hsn", a}, {"sgd", b}}, sample_config());
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "# config_hash: " + hash_hex(config_hash(sample_config())));
  EXPECT_EQ(lines[1], "# config: " + sample_config().dump());
  EXPECT_EQ(lines[2], "iteration,hsn,sgd");
  EXPECT_EQ(lines[3], "0,1,2");
  EXPECT_EQ(lines[4], "10,0.5,nan");
}

TEST(SeriesCsv, RejectsMismatchedColumns) {
  std::ostringstream out;
  const Series a = {{0, 1.0}, {10, 0.5}};
  EXPECT_THROW(write_series_csv(out, {{"a", a}, {"b", {{0, 1.0}}}}, sample_config()), InvalidArgument);
  EXPECT_THROW(write_series_csv(out, {{"a", a}, {"b", {{0, 1.0}, {11, 1.0}}}}, sample_config()), InvalidArgument);
  EXPECT_THROW(write_series_csv(out, {}, sample_config()), InvalidArgument);
  EXPECT_TRUE(out.str().empty());
}

TEST(RecordsCsv, Layout) {
  std::ostringstream out;
  RunRecord r;
  r.iteration = 4;
  r.sq_error = 0.25;
  write_records_csv(out, {r}, sample_config());
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[2], "iteration,sq_error,excess_risk,sbar_dist,sbar_inv_dist,hbar_dist,sigbar_dist,hbar_sigbar_dist");
  EXPECT_EQ(lines[3], "4,0.25,nan,nan,nan,nan,nan,nan");
}

TEST(ReportJson, NonFiniteValuesBecomeNull) {
  DiagnosticReport rep;
  rep.name = "demo";
  rep.checks.push_back(DiagnosticCheck::band("slope", -1.0, -1.0, -1.2, -0.7));
  rep.info["missing"] = kNaN;
  rep.trend.push_back({10, {{"mse", 0.5}}});
  rep.seeds = {1, 2};
  std::ostringstream out;
  write_report_json(out, rep, sample_config());
  const Json doc = Json::parse(out.str());
  EXPECT_EQ(doc["config_hash"], hash_hex(config_hash(sample_config())));
  EXPECT_EQ(doc["config"], sample_config());
  const Json& r = doc["report"];
  EXPECT_TRUE(r["pass"].get<bool>());
  EXPECT_TRUE(r["checks"][0]["tolerance"].is_null());
  EXPECT_EQ(r["checks"][0]["lower"], -1.2);
  EXPECT_TRUE(r["info"]["missing"].is_null());
  EXPECT_EQ(r["trend"][0]["iteration"], 10);
  EXPECT_EQ(r["trend"][0]["mse"], 0.5);
  EXPECT_EQ(r["seeds"], Json::array({1, 2}));
}

TEST(VerifyEmbeddedHash, RoundTripAndTamperDetection) {
  const TempDir dir;
  const auto csv = dir.path() / "a.csv";
  const auto json = dir.path() / "a.json";
  {
    std::ofstream f(csv);
    write_series_csv(f, {{"mse", {{1, 1.0}}}}, sample_config());
    std::ofstream g(json);
    write_json_document(g, Json{{"x", 1}}, sample_config());
  }
  EXPECT_TRUE(verify_embedded_hash(csv).ok());
  EXPECT_TRUE(verify_embedded_hash(json).ok());

  std::string text;
  {
    std::ifstream f(csv);
    text.assign(std::istreambuf_iterator<char>(f), {});
  }
  const auto pos = text.find("\"seed\":42");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 9, "\"seed\":43");
  {
    std::ofstream f(csv);
    f << text;
  }
  const auto check = verify_embedded_hash(csv);
  EXPECT_FALSE(check.ok());
  EXPECT_NE(check.stored, check.recomputed);

  const auto plain = dir.path() / "plain.csv";
  {
    std::ofstream f(plain);
    f << "iteration,mse\n1,2\n";
  }
  EXPECT_THROW(verify_embedded_hash(plain), DataError);
  EXPECT_THROW(verify_embedded_hash(dir.path() / "missing.json"), DataError);
}

}  // namespace
}  // namespace hsn
