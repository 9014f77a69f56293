#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "energyecon/runner.hpp"
#include "energyecon/scenario_io.hpp"
#include "fixtures.hpp"

namespace {

using namespace energyecon;
using namespace energyecon::testing;
namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A fresh directory per test, removed afterwards.
class CliIo : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("energyecon_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_scenario(const std::string& name, const EconomyScenario& s) {
    fs::path p = dir_ / name;
    write_file_atomic(p, serialize_scenario(s));
    return p;
  }

  int run(Command c, std::vector<fs::path> files, const fs::path& out, ReportFormat format = ReportFormat::kBoth) {
    RunOptions o;
    o.out = out;
    o.format = format;
    stdout_.str("");
    stderr_.str("");
    return run_scenario(c, files, o, stdout_, stderr_);
  }

  fs::path scenario_path(const std::string& name) const { return fs::path(ENERGYECON_SCENARIO_DIR) / name; }

  fs::path dir_;
  std::ostringstream stdout_, stderr_;
};

TEST(ScenarioIo, RoundTripPreservesHash) {
  EconomyScenario s = village();
  EconomyScenario back = parse_scenario(serialize_scenario(s));
  EXPECT_EQ(scenario_hash(back), scenario_hash(s));
  EXPECT_EQ(serialize_scenario(back), serialize_scenario(s));
}

TEST(ScenarioIo, HashKnownVector) {
  // FNV-1a 64 offset basis for the empty string, and a published vector.
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(ScenarioIo, StructuralErrorsNameTheField) {
  nlohmann::json doc = scenario_to_json(village());
  doc["prime_movers"][0].erase("epsilon");
  try {
    scenario_from_json(doc);
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
  EXPECT_EQ(error_code_of([] { parse_scenario("{not json"); }), ErrorCode::kValidation);
  EXPECT_EQ(error_code_of([] { load_scenario("/nonexistent/scenario.json"); }), ErrorCode::kIoFailure);
}

TEST_F(CliIo, SolveAutarkyWritesArtifacts) {
  EXPECT_EQ(run(Command::kSolveAutarky, {scenario_path("default.json")}, dir_), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "solution.json"));
  EXPECT_TRUE(fs::exists(dir_ / "prices.csv"));
  EXPECT_TRUE(stderr_.str().empty());
  nlohmann::json doc = nlohmann::json::parse(slurp(dir_ / "solution.json"));
  EXPECT_EQ(doc.at("scenario_hash").get<std::string>(), scenario_hash(village()));
}

TEST_F(CliIo, FormatFlagSelectsFiles) {
  EXPECT_EQ(run(Command::kSolveAutarky, {scenario_path("default.json")}, dir_, ReportFormat::kCsv), kExitOk);
  EXPECT_FALSE(fs::exists(dir_ / "solution.json"));
  EXPECT_TRUE(fs::exists(dir_ / "prices.csv"));
}

TEST_F(CliIo, InvalidDepreciationExitsOneAndNamesField) {
  EconomyScenario s = village();
  s.prime_movers[0].depreciation = 1.2;
  fs::path p = write_scenario("bad.json", s);
  EXPECT_EQ(run(Command::kSolveAutarky, {p}, dir_ / "out"), kExitInvalid);
  nlohmann::json err = nlohmann::json::parse(stderr_.str());
  EXPECT_EQ(err.at("error").get<std::string>(), "ValidationError");
  bool named = false;
  for (const auto& v : err.at("violations")) {
    named = named || v.at("field").get<std::string>().find("depreciation") != std::string::npos;
  }
  EXPECT_TRUE(named);
}

TEST_F(CliIo, MissingFileExitsWithIoCode) {
  EXPECT_EQ(run(Command::kSolveAutarky, {dir_ / "absent.json"}, dir_), kExitIo);
  EXPECT_EQ(stderr_.str().find('\n'), stderr_.str().size() - 1);  // one line
}

TEST_F(CliIo, WrongArityIsInvalid) {
  EXPECT_EQ(run(Command::kSolveExchange, {scenario_path("default.json")}, dir_), kExitInvalid);
}

TEST_F(CliIo, RepeatedRunsAreByteIdentical) {
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(run(Command::kPriceReport, {scenario_path("default.json")}, dir_ / sub), kExitOk);
  }
  for (const char* file : {"price_report.json", "prices.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / file), slurp(dir_ / "b" / file)) << file;
  }
}

TEST_F(CliIo, SingleGoodReportsDegenerateFitAndStillWrites) {
  EconomyScenario s = load("proportionality_demo.json");
  s.final_goods.resize(1);
  s.technologies.erase(std::remove_if(s.technologies.begin(), s.technologies.end(),
                                      [&](const ProductionTech& t) { return !s.find_good(t.good).has_value(); }),
                       s.technologies.end());
  fs::path p = write_scenario("one_good.json", s);
  ASSERT_EQ(run(Command::kPriceReport, {p}, dir_ / "out"), kExitOk) << stderr_.str();
  nlohmann::json doc = nlohmann::json::parse(slurp(dir_ / "out" / "price_report.json"));
  EXPECT_EQ(doc.at("proportionality").at("error").get<std::string>(), "DegenerateFit");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "prices.csv"));
}

TEST_F(CliIo, DemoScenarioHasExactProportionality) {
  ASSERT_EQ(run(Command::kPriceReport, {scenario_path("proportionality_demo.json")}, dir_), kExitOk);
  nlohmann::json doc = nlohmann::json::parse(slurp(dir_ / "price_report.json"));
  EXPECT_NEAR(doc.at("proportionality").at("r_squared").get<double>(), 1.0, 1e-9);
}

TEST_F(CliIo, FiatMoneyIsRejectedByPriceReport) {
  EconomyScenario s = village();
  s.money->fiat = true;
  fs::path p = write_scenario("fiat.json", s);
  EXPECT_EQ(run(Command::kPriceReport, {p}, dir_ / "out"), kExitInvalid);
  EXPECT_NE(stderr_.str().find("FiatMoney"), std::string::npos);
}

TEST_F(CliIo, AtomicWriteReplacesWholeFile) {
  fs::path p = dir_ / "file.txt";
  write_file_atomic(p, "first version, longer\n");
  write_file_atomic(p, "second\n");
  EXPECT_EQ(slurp(p), "second\n");
  for (const auto& entry : fs::directory_iterator(dir_)) EXPECT_EQ(entry.path().filename(), "file.txt");  // no temporaries
  write_file_atomic(dir_ / "nested" / "x.txt", "x");  // parents are created
  EXPECT_EQ(slurp(dir_ / "nested" / "x.txt"), "x");
  // A regular file cannot serve as a directory.
  EXPECT_EQ(error_code_of([&] { write_file_atomic(p / "x.txt", "x"); }), ErrorCode::kIoFailure);
}

TEST(ExitCodes, MapErrorsToCodes) {
  EXPECT_EQ(exit_code_for(ErrorCode::kValidation), kExitInvalid);
  EXPECT_EQ(exit_code_for(ErrorCode::kNoConvergence), kExitNoConvergence);
  EXPECT_EQ(exit_code_for(ErrorCode::kInfeasible), kExitInfeasible);
  EXPECT_EQ(exit_code_for(ErrorCode::kIoFailure), kExitIo);
  nlohmann::json line = nlohmann::json::parse(error_line(ErrorCode::kInfeasible, "no plan"));
  EXPECT_EQ(line.at("message").get<std::string>(), "no plan");
}

TEST(Commands, NamesRoundTrip) {
  for (Command c : {Command::kSolveAutarky, Command::kSolveExchange, Command::kPriceReport, Command::kVerify}) {
    EXPECT_EQ(parse_command(to_string(c)), c);
  }
  EXPECT_FALSE(parse_command("solve").has_value());
}

}  // namespace
