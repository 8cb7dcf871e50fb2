#include "mlrel/diagnostics.hpp"

#include <cmath>

#include "mlrel/errors.hpp"

namespace mlrel {

LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("regression inputs differ in length");
  if (x.size() < 2) throw ParameterError("regression needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("regression needs two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.x.assign(x.begin(), x.end());
  f.y.assign(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i)
    f.residuals.push_back(y[i] - (f.intercept + f.slope * x[i]));
  return f;
}

std::vector<double> level_costs(std::span<const LevelStats> levels, CostBasis basis) {
  std::vector<double> c;
  if (levels.empty()) return c;
  const int top = static_cast<int>(levels.size()) - 1;
  const double full = static_cast<double>(levels.back().cut_count);
  for (const auto& s : levels) {
    switch (basis) {
      case CostBasis::kProxy: c.push_back(full * std::ldexp(1.0, s.level - top)); break;
      case CostBasis::kWork: c.push_back(s.kappa()); break;
      case CostBasis::kSeconds: c.push_back(s.kappa_seconds()); break;
    }
  }
  return c;
}

namespace {

LinearFit fit_log2(std::span<const LevelStats> levels, std::span<const double> values,
                   std::vector<int>& excluded) {
  std::vector<double> x, y;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    const double v = std::abs(values[l]);
    if (!(v > 0.0) || !std::isfinite(v)) {
      excluded.push_back(static_cast<int>(l));
      continue;
    }
    x.push_back(static_cast<double>(l));
    y.push_back(std::log2(v));
  }
  return ols(x, y);
}

}  // namespace

RateReport fit_rates(std::span<const LevelStats> levels, CostBasis basis) {
  if (levels.size() < 3) throw ParameterError("rate fits need at least three levels");
  for (const auto& s : levels)
    if (s.samples() < 2) throw ParameterError("every level needs at least two samples");
  std::vector<double> means, vars;
  for (const auto& s : levels) {
    means.push_back(s.mean());
    vars.push_back(s.variance());
  }
  const auto costs = level_costs(levels, basis);
  RateReport r;
  std::vector<int> dropped;
  r.mean_fit = fit_log2(levels, means, dropped);
  r.excluded_levels = dropped;
  dropped.clear();
  r.var_fit = fit_log2(levels, vars, dropped);
  r.excluded_levels.insert(r.excluded_levels.end(), dropped.begin(), dropped.end());
  dropped.clear();
  r.cost_fit = fit_log2(levels, costs, dropped);
  r.alpha = -r.mean_fit.slope;
  r.beta = -r.var_fit.slope;
  r.gamma = r.cost_fit.slope;
  return r;
}

int level_for_eps(std::span<const double> means, double eps) {
  if (means.empty()) throw ParameterError("no levels");
  for (std::size_t l = 1; l < means.size(); ++l)
    if (std::abs(means[l]) < eps) return static_cast<int>(l);
  return static_cast<int>(means.size()) - 1;
}

std::vector<SpeedupPoint> speedup_curve(double mc_var, double mc_cost,
                                        std::span<const double> level_var,
                                        std::span<const double> level_cost,
                                        std::span<const double> level_mean,
                                        std::span<const double> eps_grid) {
  if (level_var.size() != level_cost.size() || level_var.size() != level_mean.size())
    throw ParameterError("level series differ in length");
  std::vector<SpeedupPoint> out;
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) throw ParameterError("eps must be positive");
    SpeedupPoint p;
    p.eps = eps;
    p.top_level = level_for_eps(level_mean, eps);
    double sum = 0.0;
    for (int l = 0; l <= p.top_level; ++l) sum += std::sqrt(level_var[l] * level_cost[l]);
    p.speedup = mc_var * mc_cost / (sum * sum);
    out.push_back(p);
  }
  return out;
}

std::vector<SpeedupPoint> speedup_curve(double mc_var, double mc_cost,
                                        std::span<const LevelStats> levels, CostBasis basis,
                                        std::span<const double> eps_grid) {
  std::vector<double> v, m;
  for (const auto& s : levels) {
    v.push_back(s.variance());
    m.push_back(s.mean());
  }
  const auto c = level_costs(levels, basis);
  return speedup_curve(mc_var, mc_cost, v, c, m, eps_grid);
}

}  // namespace mlrel
