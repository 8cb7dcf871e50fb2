#include "mlrel/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <numeric>
#include <thread>

#include "mlrel/errors.hpp"
#include "mlrel/simulator.hpp"

namespace mlrel {

void Moments::merge(const Moments& o) noexcept {
  if (o.count == 0) return;
  if (count == 0) {
    *this = o;
    return;
  }
  const double n_a = static_cast<double>(count);
  const double n_b = static_cast<double>(o.count);
  const double n = n_a + n_b;
  const double d = o.mean - mean;
  mean += d * n_b / n;
  m2 += o.m2 + d * d * n_a * n_b / n;
  count += o.count;
}

double LevelStats::kappa_seconds() const {
  if (sample_seconds.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> s = sample_seconds;
  std::sort(s.begin(), s.end());
  const std::size_t drop = s.size() / 100;
  const auto first = s.begin() + static_cast<std::ptrdiff_t>(drop);
  const auto last = s.end() - static_cast<std::ptrdiff_t>(drop);
  return std::accumulate(first, last, 0.0) / static_cast<double>(last - first);
}

namespace {

using Clock = std::chrono::steady_clock;

// Runs `draw` count times, timing each call when requested.
template <typename Draw>
void sample_loop(std::uint64_t count, BatchResult& out, Draw&& draw) {
  if (!out.timed) {
    for (std::uint64_t i = 0; i < count; ++i) draw();
    return;
  }
  out.sample_seconds.reserve(out.sample_seconds.size() + count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto t0 = Clock::now();
    draw();
    out.sample_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
}

struct LevelCuts {
  std::vector<std::uint32_t> coarse;  // C_{l-1} (empty on level 0)
  std::vector<std::uint32_t> extra;   // C_l minus C_{l-1}
  std::vector<std::uint32_t> fine;    // C_l
  std::vector<std::uint32_t> components;  // members of C_l
};

std::vector<LevelCuts> split_levels(const LevelPartition& partition) {
  std::vector<LevelCuts> out;
  for (int l = 0; l <= partition.top_level(); ++l) {
    LevelCuts lc;
    lc.fine = partition.levels[l];
    if (l > 0) lc.coarse = partition.levels[l - 1];
    lc.extra.assign(lc.fine.begin() + static_cast<std::ptrdiff_t>(lc.coarse.size()),
                    lc.fine.end());
    out.push_back(std::move(lc));
  }
  return out;
}

class OneShotLevels final : public LevelSampler {
 public:
  OneShotLevels(const System& sys, const LevelPartition& partition)
      : sampler_(sys), levels_(split_levels(partition)) {
    for (auto& lc : levels_) lc.components = sampler_.components_of(lc.fine);
  }

  int top_level() const override { return static_cast<int>(levels_.size()) - 1; }
  std::size_t cut_count(int level) const override { return levels_.at(level).fine.size(); }
  bool empirical_cost() const override { return false; }

  void run_batch(int level, std::uint64_t count, RngStream& rng,
                 BatchResult& out) const override {
    const LevelCuts& lc = levels_.at(level);
    std::vector<double> scratch(static_cast<std::size_t>(sampler_.component_count()));
    if (level == 0) {
      sample_loop(count, out, [&] {
        const double t = sampler_.sample(lc.fine, lc.components, rng, scratch);
        out.y.add(t);
        out.fine.add(t);
      });
    } else {
      sample_loop(count, out, [&] {
        const CoupledSample s =
            sampler_.sample_coupled(lc.coarse, lc.extra, lc.components, rng, scratch);
        if (s.fine > s.coarse) ++out.coupling_violations;
        out.y.add(difference(s));
        out.fine.add(s.fine);
      });
    }
    out.work += static_cast<double>(count) * static_cast<double>(lc.fine.size());
  }

  static double difference(const CoupledSample& s) {
    // Both infinite means neither collection ever fails: no contribution.
    return s.fine == s.coarse ? 0.0 : s.fine - s.coarse;
  }

 private:
  LifetimeSampler sampler_;
  std::vector<LevelCuts> levels_;
};

class RepairableLevels final : public LevelSampler {
 public:
  RepairableLevels(const System& sys, const LevelPartition& partition) {
    for (const auto& lc : split_levels(partition)) {
      sizes_.push_back(lc.fine.size());
      engines_.emplace_back(sys, lc.fine, lc.coarse.empty() ? lc.fine : lc.coarse);
    }
  }

  int top_level() const override { return static_cast<int>(engines_.size()) - 1; }
  std::size_t cut_count(int level) const override { return sizes_.at(level); }
  bool empirical_cost() const override { return true; }

  void run_batch(int level, std::uint64_t count, RngStream& rng,
                 BatchResult& out) const override {
    const RepairEngine& engine = engines_.at(level);
    const std::size_t size = sizes_.at(level);
    RepairEngine::Workspace ws;
    sample_loop(count, out, [&] {
      const auto run = engine.run(rng, ws);
      if (run.fine > run.coarse) ++out.coupling_violations;
      if (run.truncated) ++out.truncated;
      const double y = level == 0 ? run.fine
                       : run.fine == run.coarse ? 0.0
                                                : run.fine - run.coarse;
      out.y.add(y);
      out.fine.add(run.fine);
      out.work += static_cast<double>(run.events) * static_cast<double>(size);
    });
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<RepairEngine> engines_;
};

LevelPartition single_level(std::size_t cut_count) {
  LevelPartition p;
  p.cut_count = cut_count;
  p.levels.emplace_back(cut_count);
  std::iota(p.levels[0].begin(), p.levels[0].end(), 0u);
  p.added_scores.emplace_back(cut_count, 0.0);
  return p;
}

// Batched, optionally multi-threaded sampling of levels. Batches use
// streams derived from (seed, level, batch index) and are merged in batch
// order, so results do not depend on the worker count.
class LevelRunner {
 public:
  LevelRunner(const LevelSampler& sampler, const RunOptions& opt)
      : sampler_(sampler), opt_(opt) {
    if (opt_.batch_size == 0) throw ParameterError("batch size must be positive");
  }

  std::vector<LevelStats>& stats() { return stats_; }

  void ensure_levels(int top) {
    while (static_cast<int>(stats_.size()) <= top) {
      LevelStats s;
      s.level = static_cast<int>(stats_.size());
      s.cut_count = sampler_.cut_count(s.level);
      stats_.push_back(std::move(s));
    }
  }

  void top_up(const std::vector<std::uint64_t>& targets) {
    struct Task {
      int level;
      std::uint64_t batch;
      std::uint64_t count;
    };
    std::vector<Task> tasks;
    ensure_levels(static_cast<int>(targets.size()) - 1);
    for (int l = 0; l < static_cast<int>(targets.size()); ++l) {
      std::uint64_t have = stats_[l].samples();
      while (have < targets[l]) {
        const std::uint64_t n = std::min(opt_.batch_size, targets[l] - have);
        tasks.push_back({l, stats_[l].batches++, n});
        have += n;
      }
    }
    std::vector<BatchResult> results(tasks.size());
    auto work = [&](std::size_t i) {
      RngStream rng(opt_.seed, make_stream_id(StreamPurpose::kLevel,
                                              static_cast<std::uint64_t>(tasks[i].level),
                                              tasks[i].batch));
      results[i].timed = opt_.timing;
      sampler_.run_batch(tasks[i].level, tasks[i].count, rng, results[i]);
    };
    const unsigned workers = std::max(1u, opt_.workers);
    if (workers == 1 || tasks.size() <= 1) {
      for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < std::min<std::size_t>(workers, tasks.size()); ++w)
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < tasks.size(); i = next++) work(i);
        });
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      LevelStats& s = stats_[tasks[i].level];
      BatchResult& r = results[i];
      s.y.merge(r.y);
      s.fine.merge(r.fine);
      s.work += r.work;
      s.coupling_violations += r.coupling_violations;
      s.truncated += r.truncated;
      const std::size_t room = kTimingReservoir - std::min(kTimingReservoir, s.sample_seconds.size());
      const std::size_t take = std::min(room, r.sample_seconds.size());
      s.sample_seconds.insert(s.sample_seconds.end(), r.sample_seconds.begin(),
                              r.sample_seconds.begin() + static_cast<std::ptrdiff_t>(take));
    }
  }

 private:
  const LevelSampler& sampler_;
  RunOptions opt_;
  std::vector<LevelStats> stats_;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::unique_ptr<LevelSampler> make_level_sampler(const System& sys,
                                                 const LevelPartition& partition,
                                                 bool repairable) {
  validate_partition(partition, sys.cutsets.size());
  if (repairable) {
    for (const auto& c : sys.components)
      if (!c.repair)
        throw ContractError("repairable sampling needs a repair distribution on every component");
    return std::make_unique<RepairableLevels>(sys, partition);
  }
  return std::make_unique<OneShotLevels>(sys, partition);
}

std::unique_ptr<LevelSampler> make_exact_sampler(const System& sys, bool repairable) {
  if (sys.cutsets.empty()) throw ContractError("system has no cut sets");
  return make_level_sampler(sys, single_level(sys.cutsets.size()), repairable);
}

CostSummary total_cost(const EstimateResult& result) {
  CostSummary c;
  for (const auto& l : result.levels) c.sampling_proxy += l.work;
  c.pilot = result.pilot_cost;
  c.proxy = c.sampling_proxy + c.pilot;
  c.wall_seconds = result.wall_seconds;
  return c;
}

std::uint64_t mc_sample_size(double variance, double z, double eps) {
  if (!(eps > 0.0)) throw ParameterError("target accuracy must be positive");
  if (!(z > 0.0)) throw ParameterError("confidence quantile must be positive");
  if (!(variance >= 0.0)) throw ParameterError("variance must be nonnegative");
  // Guard against representation error pushing an exact integer up by one.
  const double n = z * z * variance / (eps * eps);
  const double r = std::round(n);
  return static_cast<std::uint64_t>(std::abs(n - r) <= 1e-9 * std::max(1.0, r) ? r : std::ceil(n));
}

EstimateResult run_mc(const LevelSampler& sampler, const McConfig& cfg, const RunOptions& opt) {
  if (!(cfg.eps > 0.0)) throw ParameterError("target accuracy must be positive");
  if (cfg.pilot_samples < 2) throw ParameterError("variance pilot needs at least two samples");
  const auto t0 = Clock::now();
  LevelRunner runner(sampler, opt);
  runner.top_up({cfg.pilot_samples});
  const double pilot_var = runner.stats()[0].variance();
  const std::uint64_t n = std::max(cfg.pilot_samples, mc_sample_size(pilot_var, cfg.z, cfg.eps));
  runner.top_up({n});

  EstimateResult r;
  r.method = "mc";
  r.repairable = sampler.empirical_cost();
  r.eps = cfg.eps;
  r.levels = std::move(runner.stats());
  LevelStats& s = r.levels[0];
  s.cost_weight = s.kappa();
  r.estimate = s.mean();
  r.variance = s.variance() / static_cast<double>(s.samples());
  r.bias = 0.0;
  r.wall_seconds = seconds_since(t0);
  return r;
}

EstimateResult run_mc(const System& sys, const McConfig& cfg, const RunOptions& opt,
                      bool repairable) {
  const auto sampler = make_exact_sampler(sys, repairable);
  return run_mc(*sampler, cfg, opt);
}

EstimateResult run_mlmc(const LevelSampler& sampler, const MlmcConfig& cfg,
                        const RunOptions& opt) {
  if (!(cfg.eps > 0.0)) throw ParameterError("target accuracy must be positive");
  if (cfg.initial_samples < 2) throw ParameterError("initial level samples must be >= 2");
  const auto t0 = Clock::now();
  const int top = sampler.top_level();
  int active = cfg.all_levels ? top : std::min(std::max(cfg.initial_top, 0), top);
  const double inv_eps2 = 1.0 / (cfg.eps * cfg.eps);

  LevelRunner runner(sampler, opt);
  auto& stats = runner.stats();
  std::vector<std::uint64_t> target(static_cast<std::size_t>(active) + 1, cfg.initial_samples);
  std::vector<double> variance_guess(target.size(), -1.0);
  runner.top_up(target);

  auto weight = [&](int l) {
    if (!sampler.empirical_cost()) return std::ldexp(1.0, l);
    if (stats[l].samples() > 0 && stats[l].kappa() > 0.0) return stats[l].kappa();
    // Unsampled level: assume the cost doubles.
    double w = 1.0;
    for (int k = l - 1; k >= 0; --k)
      if (stats[k].samples() > 0) {
        w = stats[k].kappa() * std::ldexp(1.0, l - k);
        break;
      }
    return w;
  };
  auto level_variance = [&](int l) {
    if (stats[l].samples() >= 2) return stats[l].variance();
    return std::max(variance_guess[l], 0.0);
  };

  double bias = 0.0;
  for (;;) {
    // Sample-size refinement until no level grows by the tolerance or more.
    for (;;) {
      double sum = 0.0;
      for (int l = 0; l <= active; ++l) sum += std::sqrt(level_variance(l) * weight(l));
      bool grew = false;
      std::vector<std::uint64_t> next = target;
      for (int l = 0; l <= active; ++l) {
        const double want =
            std::ceil(4.0 * inv_eps2 * std::sqrt(level_variance(l) / weight(l)) * sum);
        const std::uint64_t n_hat = static_cast<std::uint64_t>(std::min(want, 9.0e18));
        next[l] = std::max(target[l], n_hat);
        const double old = static_cast<double>(stats[l].samples());
        if (static_cast<double>(next[l]) >= old * (1.0 + cfg.growth_tolerance) &&
            next[l] > stats[l].samples())
          grew = true;
      }
      target = next;
      if (!grew) break;
      runner.top_up(target);
    }

    if (active == top) {
      bias = 0.0;
      break;
    }
    const double last = std::abs(stats[active].mean());
    if (active >= 1 && last <= cfg.eps / 2.0) {
      bias = last;
      break;
    }
    ++active;
    runner.ensure_levels(active);
    variance_guess.push_back(level_variance(active - 1) / 2.0);
    target.push_back(0);
    // The guess only seeds the first allocation; the level gets at least the
    // initial sample count before its own variance is trusted.
    double sum = 0.0;
    for (int l = 0; l <= active; ++l) sum += std::sqrt(level_variance(l) * weight(l));
    const double want =
        std::ceil(4.0 * inv_eps2 * std::sqrt(level_variance(active) / weight(active)) * sum);
    target[active] = std::max<std::uint64_t>(cfg.initial_samples,
                                             static_cast<std::uint64_t>(std::min(want, 9.0e18)));
    runner.top_up(target);
  }

  EstimateResult r;
  r.method = "mlmc";
  r.repairable = sampler.empirical_cost();
  r.eps = cfg.eps;
  r.levels = std::move(stats);
  r.levels.resize(static_cast<std::size_t>(active) + 1);
  for (int l = 0; l <= active; ++l) {
    LevelStats& s = r.levels[l];
    s.cost_weight = sampler.empirical_cost() ? s.kappa() : std::ldexp(1.0, l);
    r.estimate += s.mean();
    r.variance += s.variance() / static_cast<double>(s.samples());
  }
  r.bias = bias;
  r.wall_seconds = seconds_since(t0);
  return r;
}

EstimateResult run_mlmc(const System& sys, const LevelPartition& partition,
                        const MlmcConfig& cfg, const RunOptions& opt, bool repairable) {
  const auto sampler = make_level_sampler(sys, partition, repairable);
  EstimateResult r = run_mlmc(*sampler, cfg, opt);
  r.pilot_cost = partition.pilot_cost;
  return r;
}

std::vector<LevelStats> sample_all_levels(const LevelSampler& sampler, std::uint64_t samples,
                                          const RunOptions& opt) {
  if (samples < 2) throw ParameterError("need at least two samples per level");
  LevelRunner runner(sampler, opt);
  runner.top_up(std::vector<std::uint64_t>(static_cast<std::size_t>(sampler.top_level()) + 1,
                                           samples));
  auto stats = std::move(runner.stats());
  for (auto& s : stats)
    s.cost_weight = sampler.empirical_cost() ? s.kappa() : static_cast<double>(s.cut_count);
  return stats;
}

}  // namespace mlrel
