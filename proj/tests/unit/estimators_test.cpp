#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mlrel/errors.hpp"
#include "mlrel/estimators.hpp"
#include "mlrel/generator.hpp"
#include "mlrel/level_selection.hpp"
#include "support/oracles.hpp"
#include "support/systems.hpp"

using namespace mlrel;

namespace {

// Level sampler driven by a per-level draw function, with cost #C_l = 2^l.
class FakeLevels final : public LevelSampler {
 public:
  using Draw = std::function<double(int, RngStream&)>;
  FakeLevels(int top, Draw draw) : top_(top), draw_(std::move(draw)) {}

  int top_level() const override { return top_; }
  std::size_t cut_count(int level) const override { return std::size_t{1} << level; }
  bool empirical_cost() const override { return false; }
  void run_batch(int level, std::uint64_t count, RngStream& rng,
                 BatchResult& out) const override {
    for (std::uint64_t i = 0; i < count; ++i) {
      const double y = draw_(level, rng);
      out.y.add(y);
      out.fine.add(y);
    }
    out.work += static_cast<double>(count) * static_cast<double>(cut_count(level));
  }

 private:
  int top_;
  Draw draw_;
};

LevelPartition partition_for(const System& sys, std::uint64_t seed,
                             std::optional<int> top = std::nullopt) {
  RngStream rng(seed, make_stream_id(StreamPurpose::kPilot, 0, 0));
  return build_partition(pilot_scores(sys, kDefaultPilotSamples, rng, false), top);
}

// Series-parallel system (no bridge moves) small enough for the exact oracle.
struct OracleSystem {
  System sys;
  double exact = 0.0;
};

OracleSystem series_parallel_system() {
  for (std::uint64_t seed = 1;; ++seed) {
    GrowthConfig cfg;
    cfg.target_components = 10;
    cfg.p_series = 0.5;
    cfg.p_parallel = 0.5;
    cfg.p_bridge = 0.0;
    cfg.shape = 1.0;
    cfg.seed = seed;
    auto sys = grow(cfg);
    if (sys.cutsets.size() < 6 || sys.cutsets.size() > 14) continue;
    std::vector<std::vector<int>> cuts;
    for (const auto& c : sys.cutsets) cuts.emplace_back(c.begin(), c.end());
    std::vector<double> rates;
    for (const auto& c : sys.components) rates.push_back(1.0 / c.lifetime.scale);
    const double exact = oracle::expected_lifetime_exponential(cuts, rates);
    return {std::move(sys), exact};
  }
}

double total_variance_budget(const EstimateResult& r) {
  double v = 0.0;
  for (const auto& l : r.levels) v += l.variance() / static_cast<double>(l.samples());
  return v;
}

}  // namespace

TEST(Moments, MergeMatchesSequentialAdds) {
  RngStream rng(1, make_stream_id(StreamPurpose::kTest, 0, 0));
  Moments all, a, b, c;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-3.0, 7.0);
    all.add(x);
    (i < 300 ? a : i < 310 ? b : c).add(x);
  }
  Moments merged;
  merged.merge(a);
  merged.merge(b);
  merged.merge(Moments{});
  merged.merge(c);
  EXPECT_EQ(merged.count, all.count);
  EXPECT_NEAR(merged.mean, all.mean, 1e-12);
  EXPECT_NEAR(merged.variance(), all.variance(), 1e-10);
  EXPECT_EQ(Moments{}.variance(), 0.0);
}

TEST(McSampleSize, UnitVarianceAtOneTenth) {
  EXPECT_EQ(mc_sample_size(1.0, 1.96, 0.1), 385u);
  EXPECT_EQ(mc_sample_size(0.0, 1.96, 0.1), 0u);
  EXPECT_THROW(mc_sample_size(1.0, 1.96, 0.0), ParameterError);
  EXPECT_THROW(mc_sample_size(-1.0, 1.96, 0.1), ParameterError);
}

TEST(RunMc, DegenerateLifetimeUsesPilotOnly) {
  FakeLevels fake(0, [](int, RngStream&) { return 3.25; });
  McConfig cfg;
  cfg.eps = 1e-3;
  const auto r = run_mc(fake, cfg, {});
  EXPECT_EQ(r.levels[0].samples(), cfg.pilot_samples);
  EXPECT_EQ(r.estimate, 3.25);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.bias, 0.0);
}

TEST(RunMc, SeriesOfTwoExponentials) {
  const auto sys = testsys::with_lifetimes(testsys::chain(2), Distribution::exponential(1.0));
  McConfig cfg;
  cfg.eps = 0.01;
  RunOptions opt;
  opt.seed = 3;
  const auto r = run_mc(sys, cfg, opt, false);
  EXPECT_NEAR(r.estimate, 0.5, 3 * std::sqrt(r.variance));
  EXPECT_GE(r.levels[0].samples(), 9000u);
  const auto cost = total_cost(r);
  EXPECT_EQ(cost.proxy, static_cast<double>(r.levels[0].samples()) * 2.0);
}

TEST(RunMc, RejectsBadConfig) {
  FakeLevels fake(0, [](int, RngStream&) { return 1.0; });
  McConfig cfg;
  cfg.eps = 0.0;
  EXPECT_THROW(run_mc(fake, cfg, {}), ParameterError);
  cfg.eps = 0.1;
  cfg.pilot_samples = 1;
  EXPECT_THROW(run_mc(fake, cfg, {}), ParameterError);
}

TEST(TotalCost, LevelSumPlusPilot) {
  EstimateResult r;
  r.levels.resize(2);
  r.levels[0].y.count = 100;
  r.levels[0].cut_count = 2;
  r.levels[0].work = 200;
  r.levels[1].y.count = 50;
  r.levels[1].cut_count = 4;
  r.levels[1].work = 200;
  EXPECT_EQ(total_cost(r).proxy, 400.0);
  r.pilot_cost = 30.0;
  const auto c = total_cost(r);
  EXPECT_EQ(c.proxy, 430.0);
  EXPECT_EQ(c.sampling_proxy, 400.0);
  EXPECT_EQ(c.pilot, 30.0);
}

TEST(TotalCost, SingleLevelIsSamplesTimesCuts) {
  const auto sys = testsys::with_lifetimes(testsys::bridge(), Distribution::exponential(1.0));
  McConfig cfg;
  cfg.eps = 0.05;
  const auto r = run_mc(sys, cfg, {}, false);
  EXPECT_EQ(total_cost(r).proxy,
            static_cast<double>(r.levels[0].samples() * sys.cutsets.size()));
}

TEST(RunMlmc, SingleLevelMatchesMc) {
  const auto sys = testsys::with_lifetimes(testsys::bridge(), Distribution::exponential(1.0));
  const auto sampler = make_exact_sampler(sys, false);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunOptions opt;
    opt.seed = seed;
    MlmcConfig ml;
    ml.eps = 0.02;
    const auto a = run_mlmc(*sampler, ml, opt);
    opt.seed = seed + 100;
    McConfig mc;
    mc.eps = 0.02;
    const auto b = run_mc(*sampler, mc, opt);
    ASSERT_EQ(a.levels.size(), 1u);
    EXPECT_EQ(a.bias, 0.0);
    EXPECT_NEAR(a.estimate - b.estimate, 0.0, 3 * std::sqrt(a.variance + b.variance));
  }
}

TEST(RunMlmc, ZeroVarianceLevelKeepsMinimumSamples) {
  FakeLevels fake(3, [](int l, RngStream& rng) {
    if (l == 2) return 0.0;
    return rng.uniform(0.0, 1.0) * std::ldexp(1.0, -l);
  });
  MlmcConfig cfg;
  cfg.eps = 0.01;
  cfg.all_levels = true;
  const auto r = run_mlmc(fake, cfg, {});
  ASSERT_EQ(r.levels.size(), 4u);
  EXPECT_EQ(r.levels[2].samples(), cfg.initial_samples);
  EXPECT_EQ(r.levels[2].mean(), 0.0);
  EXPECT_EQ(r.levels[2].variance(), 0.0);
  EXPECT_GT(r.levels[0].samples(), cfg.initial_samples);
}

TEST(RunMlmc, AllocationFollowsSquareRootRule) {
  // V_l = 4^-l / 12 with weights 2^l: N_l is proportional to 2^(-3l/2).
  FakeLevels fake(4, [](int l, RngStream& rng) {
    return rng.uniform(0.0, 1.0) * std::ldexp(1.0, -l);
  });
  MlmcConfig cfg;
  cfg.eps = 0.002;
  cfg.all_levels = true;
  const auto r = run_mlmc(fake, cfg, {});
  for (int l = 1; l <= 3; ++l) {
    const double ratio = static_cast<double>(r.levels[l - 1].samples()) /
                         static_cast<double>(r.levels[l].samples());
    EXPECT_NEAR(ratio, std::pow(2.0, 1.5), 0.25);
  }
}

TEST(RunMlmc, BiasTestAddsLevelsUntilSmall) {
  // Level means halve from 1: |Y_l| <= eps / 2 first holds at level 6 for eps = 0.05.
  FakeLevels fake(8, [](int l, RngStream& rng) {
    return std::ldexp(1.0, -l) + 1e-3 * (rng.uniform_open() - 0.5);
  });
  MlmcConfig cfg;
  cfg.eps = 0.05;
  const auto r = run_mlmc(fake, cfg, {});
  ASSERT_EQ(r.levels.size(), 7u);
  EXPECT_NEAR(r.bias, 1.0 / 64.0, 1e-3);
  EXPECT_NEAR(r.estimate, 2.0 - 1.0 / 64.0, 1e-3);
}

TEST(RunMlmc, ReachingTopLevelMeansNoBias) {
  FakeLevels fake(3, [](int l, RngStream& rng) {
    return std::ldexp(1.0, -l) + 1e-3 * (rng.uniform_open() - 0.5);
  });
  MlmcConfig cfg;
  cfg.eps = 1.0 / 16.0;
  const auto r = run_mlmc(fake, cfg, {});
  EXPECT_EQ(r.levels.size(), 4u);
  EXPECT_EQ(r.bias, 0.0);
}

TEST(RunMlmc, VarianceBudgetAtTermination) {
  const auto sys = series_parallel_system().sys;
  const auto part = partition_for(sys, 4);
  for (double eps : {0.25, 0.125, 0.0625}) {
    RunOptions opt;
    opt.seed = 7;
    MlmcConfig cfg;
    cfg.eps = eps;
    const auto r = run_mlmc(sys, part, cfg, opt, false);
    EXPECT_LE(total_variance_budget(r), eps * eps / 4.0 * 1.05) << "eps " << eps;
    EXPECT_NEAR(r.variance, total_variance_budget(r), 1e-12);
    EXPECT_NEAR(r.mse(), r.variance + r.bias * r.bias, 1e-15);
  }
}

TEST(RunMlmc, RmseBelowTargetAgainstExactMean) {
  const auto target = series_parallel_system();
  const double eps = 1.0 / 16.0;
  double se2 = 0.0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    const auto part = partition_for(target.sys, 1000 + static_cast<std::uint64_t>(rep));
    RunOptions opt;
    opt.seed = static_cast<std::uint64_t>(rep);
    MlmcConfig cfg;
    cfg.eps = eps;
    const auto r = run_mlmc(target.sys, part, cfg, opt, false);
    se2 += (r.estimate - target.exact) * (r.estimate - target.exact);
  }
  EXPECT_LE(std::sqrt(se2 / reps), eps);
}

TEST(RunMlmc, FullTelescopeIsUnbiased) {
  const auto target = series_parallel_system();
  const auto part = partition_for(target.sys, 5);
  const int reps = 200;
  double sum = 0.0, sq = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    RunOptions opt;
    opt.seed = 500 + static_cast<std::uint64_t>(rep);
    MlmcConfig cfg;
    cfg.eps = 0.25;
    cfg.all_levels = true;
    const auto r = run_mlmc(target.sys, part, cfg, opt, false);
    EXPECT_EQ(r.bias, 0.0);
    sum += r.estimate;
    sq += r.estimate * r.estimate;
  }
  const double mean = sum / reps;
  const double se_ml = std::sqrt((sq / reps - mean * mean) / reps);

  McConfig mc;
  mc.eps = 0.01;
  RunOptions opt;
  opt.seed = 99;
  const auto ref = run_mc(target.sys, mc, opt, false);
  EXPECT_NEAR(mean, ref.estimate, 3 * std::sqrt(se_ml * se_ml + ref.variance));
  EXPECT_NEAR(ref.estimate, target.exact, 3 * std::sqrt(ref.variance));
}

TEST(RunMlmc, LevelDifferencesHaveOneSign) {
  GrowthConfig g;
  g.target_components = 30;
  g.seed = 3;
  g.shape = 0.5;
  const auto sys = grow(g);
  const auto part = partition_for(sys, 3);
  RunOptions opt;
  opt.seed = 1;
  const auto sampler = make_level_sampler(sys, part, false);
  const auto stats = sample_all_levels(*sampler, 2000, opt);
  for (std::size_t l = 1; l < stats.size(); ++l) {
    EXPECT_LE(stats[l].mean(), 0.0);
    EXPECT_EQ(stats[l].coupling_violations, 0u);
    EXPECT_EQ(stats[l].cost_weight, static_cast<double>(part.levels[l].size()));
  }
}

TEST(RunMlmc, CostGrowsAsEpsShrinks) {
  const auto sys = series_parallel_system().sys;
  const auto part = partition_for(sys, 6);
  double previous = 0.0;
  for (double eps : {0.5, 0.25, 0.125, 0.0625, 0.03125}) {
    RunOptions opt;
    opt.seed = 8;
    MlmcConfig cfg;
    cfg.eps = eps;
    const double cost = total_cost(run_mlmc(sys, part, cfg, opt, false)).proxy;
    EXPECT_GE(cost, previous) << "eps " << eps;
    previous = cost;
  }
}

TEST(RunMlmc, WorkerCountDoesNotChangeResults) {
  GrowthConfig g;
  g.target_components = 25;
  g.seed = 2;
  g.shape = 0.5;
  g.repair_rate = 0.05;
  const auto sys = grow(g);
  const auto part = partition_for(sys, 2);
  for (bool repairable : {false, true}) {
    MlmcConfig cfg;
    cfg.eps = repairable ? 2.0 : 0.25;
    RunOptions one;
    one.seed = 11;
    one.batch_size = 64;
    RunOptions four = one;
    four.workers = 4;
    const auto a = run_mlmc(sys, part, cfg, one, repairable);
    const auto b = run_mlmc(sys, part, cfg, four, repairable);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.variance, b.variance);
    ASSERT_EQ(a.levels.size(), b.levels.size());
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
      EXPECT_EQ(a.levels[l].samples(), b.levels[l].samples());
      EXPECT_EQ(a.levels[l].mean(), b.levels[l].mean());
      EXPECT_EQ(a.levels[l].work, b.levels[l].work);
    }
  }
}

TEST(RunMlmc, RepairableUsesMeasuredCost) {
  GrowthConfig g;
  g.target_components = 20;
  g.seed = 5;
  g.shape = 0.5;
  g.repair_rate = 0.05;
  const auto sys = grow(g);
  const auto part = partition_for(sys, 5);
  MlmcConfig cfg;
  cfg.eps = 2.0;
  cfg.all_levels = true;
  const auto r = run_mlmc(sys, part, cfg, {}, true);
  EXPECT_TRUE(r.repairable);
  EXPECT_EQ(r.pilot_cost, part.pilot_cost);
  for (const auto& l : r.levels) {
    EXPECT_EQ(l.cost_weight, l.kappa());
    EXPECT_GE(l.kappa(), static_cast<double>(l.cut_count));
    EXPECT_EQ(l.coupling_violations, 0u);
  }
}

TEST(RunMlmc, ContractViolations) {
  const auto sys = testsys::with_lifetimes(testsys::bridge(), Distribution::exponential(1.0));
  LevelPartition wrong;
  wrong.cut_count = 3;
  wrong.levels = {{0, 1, 2}};
  EXPECT_THROW(run_mlmc(sys, wrong, {}, {}, false), ContractError);
  const auto part = partition_for(sys, 1);
  EXPECT_THROW(run_mlmc(sys, part, {}, {}, true), ContractError);
  MlmcConfig bad;
  bad.eps = -1.0;
  EXPECT_THROW(run_mlmc(sys, part, bad, {}, false), ParameterError);
  RunOptions zero_batch;
  zero_batch.batch_size = 0;
  EXPECT_THROW(run_mlmc(sys, part, {}, zero_batch, false), ParameterError);
}

TEST(LevelStats, TrimmedTiming) {
  LevelStats s;
  EXPECT_TRUE(std::isnan(s.kappa_seconds()));
  s.sample_seconds.assign(198, 1.0);
  s.sample_seconds.push_back(1000.0);
  s.sample_seconds.push_back(-1000.0);
  EXPECT_DOUBLE_EQ(s.kappa_seconds(), 1.0);
}

TEST(LevelStats, TimingFillsReservoir) {
  const auto sys = testsys::with_lifetimes(testsys::bridge(), Distribution::exponential(1.0));
  RunOptions opt;
  opt.timing = true;
  const auto sampler = make_exact_sampler(sys, false);
  const auto stats = sample_all_levels(*sampler, 500, opt);
  EXPECT_EQ(stats[0].sample_seconds.size(), 500u);
  EXPECT_GE(stats[0].kappa_seconds(), 0.0);
}
