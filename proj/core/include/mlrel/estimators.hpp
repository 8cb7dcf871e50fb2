#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mlrel/level_selection.hpp"
#include "mlrel/rng.hpp"
#include "mlrel/system.hpp"

namespace mlrel {

/// Streaming mean/variance (Welford, merged with Chan's pairwise update so
/// batch results combine identically in a fixed order).
struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) noexcept;
  /// Unbiased sample variance; zero below two samples.
  double variance() const noexcept {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
};

/// Outcome of one batch of samples on one level.
struct BatchResult {
  Moments y;                          // level difference (T_0 on level 0)
  Moments fine;                       // finer lifetime T_l on its own
  double work = 0.0;                  // cost proxy units
  std::uint64_t coupling_violations = 0;
  std::uint64_t truncated = 0;
  bool timed = false;
  std::vector<double> sample_seconds;  // only filled when timed
};

/// Source of level samples for the estimators. Level l > 0 returns
/// Y_l = T_l - T_{l-1} on common randomness; level 0 returns T_0.
class LevelSampler {
 public:
  virtual ~LevelSampler() = default;
  virtual int top_level() const = 0;
  virtual std::size_t cut_count(int level) const = 0;
  /// True when per-sample cost varies (repairable: one pass over the level's
  /// cut sets per state change); false when it is the fixed cut count.
  virtual bool empirical_cost() const = 0;
  virtual void run_batch(int level, std::uint64_t count, RngStream& rng,
                         BatchResult& out) const = 0;
};

std::unique_ptr<LevelSampler> make_level_sampler(const System& sys,
                                                 const LevelPartition& partition,
                                                 bool repairable);

/// Single-level sampler of the exact system lifetime over all cut sets.
std::unique_ptr<LevelSampler> make_exact_sampler(const System& sys, bool repairable);

struct RunOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t batch_size = 2048;
  bool timing = false;  // per-sample wall clock for kappa_seconds
};

struct LevelStats {
  int level = 0;
  Moments y;
  Moments fine;
  std::size_t cut_count = 0;
  double work = 0.0;
  double cost_weight = 0.0;  // weight used by the sample allocation
  std::uint64_t batches = 0;
  std::uint64_t coupling_violations = 0;
  std::uint64_t truncated = 0;
  std::vector<double> sample_seconds;  // bounded reservoir of raw timings

  std::uint64_t samples() const noexcept { return y.count; }
  double mean() const noexcept { return y.mean; }
  double variance() const noexcept { return y.variance(); }
  /// Mean cost per sample in cut-set evaluations: #C_l for non-repairable
  /// levels, events times #C_l for repairable ones.
  double kappa() const noexcept {
    return y.count ? work / static_cast<double>(y.count) : 0.0;
  }
  /// Mean per-sample wall time with the top and bottom 1% dropped; NaN when
  /// timing was off.
  double kappa_seconds() const;
};

inline constexpr std::size_t kTimingReservoir = 100'000;

struct EstimateResult {
  std::string method;  // "mc" or "mlmc"
  bool repairable = false;
  double eps = 0.0;
  double estimate = 0.0;
  double variance = 0.0;  // estimated variance of the estimator
  double bias = 0.0;      // estimated residual bias
  double pilot_cost = 0.0;
  double wall_seconds = 0.0;
  std::vector<LevelStats> levels;

  double mse() const noexcept { return variance + bias * bias; }
};

struct CostSummary {
  double proxy = 0.0;  // sum of N_l * cost_l plus pilot
  double sampling_proxy = 0.0;
  double pilot = 0.0;
  double wall_seconds = 0.0;
};

CostSummary total_cost(const EstimateResult& result);

struct McConfig {
  double eps = 0.0625;
  double z = 1.96;
  std::uint64_t pilot_samples = 100;
};

/// ceil(z^2 * V * eps^-2).
std::uint64_t mc_sample_size(double variance, double z, double eps);

/// Two-stage standard Monte Carlo on level 0 of a single-level sampler.
EstimateResult run_mc(const LevelSampler& sampler, const McConfig& cfg, const RunOptions& opt);
EstimateResult run_mc(const System& sys, const McConfig& cfg, const RunOptions& opt,
                      bool repairable);

struct MlmcConfig {
  double eps = 0.0625;
  int initial_top = 2;
  std::uint64_t initial_samples = 100;
  double growth_tolerance = 0.01;
  /// Start with every level active (the full telescoping sum, no bias).
  bool all_levels = false;
};

/// Adaptive multilevel estimator. Level costs are weighted 2^l for
/// non-repairable samplers and by measured kappa_l otherwise.
EstimateResult run_mlmc(const LevelSampler& sampler, const MlmcConfig& cfg,
                        const RunOptions& opt);
EstimateResult run_mlmc(const System& sys, const LevelPartition& partition,
                        const MlmcConfig& cfg, const RunOptions& opt, bool repairable);

/// Fixed number of samples on every level, for rate diagnostics.
std::vector<LevelStats> sample_all_levels(const LevelSampler& sampler, std::uint64_t samples,
                                          const RunOptions& opt);

}  // namespace mlrel
