#pragma once

#include <span>
#include <vector>

#include "mlrel/estimators.hpp"

namespace mlrel {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> residuals;
};

/// Ordinary least squares of y on x. Needs two distinct x values.
LinearFit ols(std::span<const double> x, std::span<const double> y);

enum class CostBasis {
  kProxy,    // nominal cut-count proxy #C_L * 2^(l-L)
  kWork,     // measured kappa (work units per sample)
  kSeconds,  // trimmed mean wall time per sample
};

struct RateReport {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  LinearFit mean_fit;   // log2 |Y_l|
  LinearFit var_fit;    // log2 V_l
  LinearFit cost_fit;   // log2 cost_l
  std::vector<int> excluded_levels;  // zero mean or variance, left out of a fit
};

/// Fits over levels l >= 1. Needs at least three levels with two or more
/// samples each.
RateReport fit_rates(std::span<const LevelStats> levels, CostBasis basis);

/// Per-level cost under the given basis.
std::vector<double> level_costs(std::span<const LevelStats> levels, CostBasis basis);

struct SpeedupPoint {
  double eps = 0.0;
  int top_level = 0;  // L_eps
  double speedup = 0.0;
};

/// Earliest l >= 1 with |mean_l| < eps, else the last level.
int level_for_eps(std::span<const double> means, double eps);

/// mc_var * mc_cost / (sum_{l <= L_eps} sqrt(V_l c_l))^2 for every eps.
std::vector<SpeedupPoint> speedup_curve(double mc_var, double mc_cost,
                                        std::span<const double> level_var,
                                        std::span<const double> level_cost,
                                        std::span<const double> level_mean,
                                        std::span<const double> eps_grid);

std::vector<SpeedupPoint> speedup_curve(double mc_var, double mc_cost,
                                        std::span<const LevelStats> levels, CostBasis basis,
                                        std::span<const double> eps_grid);

}  // namespace mlrel
