#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mlrel/errors.hpp"
#include "mlrel/generator.hpp"
#include "mlrel/io.hpp"
#include "support/systems.hpp"

using namespace mlrel;
using nlohmann::json;

namespace {

System sample_system(bool repair) {
  GrowthConfig cfg;
  cfg.target_components = 12;
  cfg.seed = 21;
  cfg.shape = 0.5;
  if (repair) cfg.repair_rate = 0.05;
  return grow(cfg);
}

std::string error_of(std::string_view text) {
  try {
    parse_system(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("mlrel_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(3.0), "3");
  EXPECT_EQ(format_double(kNever), "inf");
  EXPECT_EQ(format_double(-kNever), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(SystemFile, RoundTrip) {
  for (bool repair : {false, true}) {
    const auto sys = sample_system(repair);
    const auto text = dump_system(sys);
    EXPECT_EQ(parse_system(text), sys);
    EXPECT_EQ(dump_system(parse_system(text)), text);
  }
}

TEST(SystemFile, CutsetsAndLogAreOptional) {
  auto sys = sample_system(false);
  sys.cutsets.clear();
  sys.move_log.clear();
  const auto text = dump_system(sys);
  const auto j = json::parse(text);
  EXPECT_FALSE(j.contains("cutsets"));
  EXPECT_FALSE(j.contains("move_log"));
  EXPECT_EQ(parse_system(text), sys);
}

TEST(SystemFile, Schema) {
  const auto j = json::parse(dump_system(sample_system(true)));
  EXPECT_EQ(j["source"], 0);
  EXPECT_EQ(j["sink"], 13);
  ASSERT_EQ(j["components"].size(), 12u);
  EXPECT_EQ(j["components"][0]["id"], 1);
  EXPECT_EQ(j["components"][0]["lifetime"]["kind"], "weibull");
  EXPECT_EQ(j["components"][0]["repair"]["kind"], "exponential");
  EXPECT_EQ(j["components"][0]["repair"]["rate"], 0.05);
  EXPECT_TRUE(j["edges"][0].is_array());
  EXPECT_TRUE(j["cutsets"][0].is_array());
}

TEST(SystemFile, ErrorsNameTheField) {
  const auto good = dump_system(testsys::with_lifetimes(testsys::chain(2),
                                                        Distribution::weibull(0.5, 3.0)));
  EXPECT_NE(error_of("{"), "");
  EXPECT_NE(error_of("[]").find("system"), std::string::npos);
  EXPECT_NE(error_of(replace(good, "\"shape\": 0.5", "\"shape\": -1"))
                .find("system.components[0].lifetime"),
            std::string::npos);
  EXPECT_NE(error_of(replace(good, "\"shape\": 0.5", "\"shape\": \"x\""))
                .find("system.components[0].lifetime.shape"),
            std::string::npos);
  EXPECT_NE(error_of(replace(good, "\"weibull\"", "\"gamma\"")).find("lifetime.kind"),
            std::string::npos);
  EXPECT_NE(error_of(replace(good, "\"sink\": 3", "\"sink\": 4")).find("system.sink"),
            std::string::npos);
  EXPECT_NE(error_of(replace(good, "\"id\": 2", "\"id\": 5")).find("system.components[1].id"),
            std::string::npos);
  EXPECT_NE(error_of(replace(good, "\"edges\"", "\"links\"")).find("system.edges"),
            std::string::npos);
}

TEST(SystemFile, BadCutSetIsFormatError) {
  auto sys = testsys::with_lifetimes(testsys::chain(2), Distribution::exponential(1.0));
  auto j = json::parse(dump_system(sys));
  j["cutsets"] = json::array({json::array({1, 1})});
  EXPECT_NE(error_of(j.dump()).find("system.cutsets[0]"), std::string::npos);
  j["cutsets"] = json::array({json::array({9})});
  EXPECT_NE(error_of(j.dump()).find("system.cutsets[0][0]"), std::string::npos);
}

TEST(PartitionFile, RoundTripAndFingerprint) {
  const auto sys = sample_system(false);
  LevelPartition p;
  p.cut_count = sys.cutsets.size();
  p.levels.push_back({});
  for (std::uint32_t i = 0; i < p.cut_count; ++i) p.levels[0].push_back(p.cut_count - 1 - i);
  p.added_scores.push_back(std::vector<double>(p.cut_count, 1.5));
  p.pilot_cost = 1234.0;
  const auto fp = cutset_fingerprint(sys.cutsets);
  const auto text = dump_partition(p, fp);
  const auto back = parse_partition(text, fp);
  EXPECT_EQ(back.levels, p.levels);
  EXPECT_EQ(back.added_scores, p.added_scores);
  EXPECT_EQ(back.pilot_cost, p.pilot_cost);
  EXPECT_THROW(parse_partition(text, fp ^ 1), ContractError);

  auto other = sys.cutsets;
  other.pop_back();
  EXPECT_NE(cutset_fingerprint(other), fp);
  EXPECT_THROW(parse_partition("{\"cut_count\": 2}", fp), FormatError);
}

TEST(EstimateFile, SchemaAndTimingNulls) {
  EstimateResult r;
  r.method = "mlmc";
  r.eps = 0.0625;
  r.estimate = 4.0;
  r.variance = 0.001;
  r.bias = 0.01;
  r.pilot_cost = 10;
  r.wall_seconds = 1.5;
  r.levels.resize(2);
  r.levels[0].y.add(1.0);
  r.levels[0].y.add(3.0);
  r.levels[0].work = 4;
  r.levels[0].cut_count = 2;
  r.levels[1].level = 1;
  r.levels[1].y.add(-1.0);
  r.levels[1].y.add(-1.0);
  r.levels[1].work = 8;
  r.levels[1].cut_count = 4;

  const auto quiet = json::parse(dump_estimate(r, false));
  for (const char* key : {"estimate", "variance", "bias", "mse", "cost_proxy", "wall_seconds",
                          "levels", "pilot_cost"})
    EXPECT_TRUE(quiet.contains(key)) << key;
  EXPECT_TRUE(quiet["wall_seconds"].is_null());
  EXPECT_EQ(quiet["cost_proxy"], 22.0);
  EXPECT_EQ(quiet["levels"][1]["N"], 2);
  EXPECT_EQ(quiet["levels"][1]["cost"], 4.0);
  EXPECT_TRUE(quiet["levels"][0]["kappa_seconds"].is_null());

  const auto timed = json::parse(dump_estimate(r, true));
  EXPECT_EQ(timed["wall_seconds"], 1.5);
}

TEST(Csv, ExactBytes) {
  std::vector<LevelStats> levels(2);
  levels[0].y.add(1.0);
  levels[0].y.add(2.0);
  levels[0].work = 6;
  levels[0].cut_count = 3;
  levels[1].level = 1;
  levels[1].y.add(-0.5);
  levels[1].y.add(-0.5);
  levels[1].work = 12;
  levels[1].cut_count = 6;
  EXPECT_EQ(level_csv(levels), "level,N,mean,var,cost,cut_count\n0,2,1.5,0.5,3,3\n1,2,-0.5,0,6,6\n");
  EXPECT_EQ(diagnose_csv(levels, std::vector<double>{3, 6}),
            "level,mean,var,cost_proxy,kappa_seconds\n0,1.5,0.5,3,nan\n1,-0.5,0,6,nan\n");
  const std::vector<SimulatedSample> sims = {{2.5, 0}, {kNever, 7}};
  EXPECT_EQ(simulate_csv(sims), "sample_index,lifetime,n_repairs\n0,2.5,0\n1,inf,7\n");
  const std::vector<SpeedupPoint> pts = {{0.125, 2, 40.5}};
  EXPECT_EQ(speedup_csv(pts), "eps,top_level,speedup\n0.125,2,40.5\n");
}

TEST(Files, AtomicWriteAndRead) {
  TempDir dir;
  const auto target = dir.path() / "out.json";
  write_file_atomic(target, "first\n");
  EXPECT_EQ(read_text_file(target), "first\n");
  write_file_atomic(target, "second\n");
  EXPECT_EQ(read_text_file(target), "second\n");
  EXPECT_FALSE(std::filesystem::exists(target.string() + ".tmp"));
  EXPECT_THROW(read_text_file(dir.path() / "missing.json"), FormatError);
  EXPECT_THROW(write_file_atomic(dir.path() / "no" / "such" / "dir.json", "x"), Error);
}
