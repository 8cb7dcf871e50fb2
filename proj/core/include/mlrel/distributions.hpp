#pragma once

#include <limits>

#include "mlrel/rng.hpp"

namespace mlrel {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

enum class DistKind { kWeibull, kExponential };

/// Lifetime or repair-time distribution.
///
/// Weibull uses (shape, scale); Exponential uses rate, where a rate of zero
/// is a clock that never fires and samples as kNever.
struct Distribution {
  DistKind kind = DistKind::kExponential;
  double shape = 1.0;
  double scale = 1.0;
  double rate = 1.0;

  static Distribution weibull(double shape, double scale);
  static Distribution exponential(double rate);

  /// Throws ParameterError when the parameters leave their domain.
  void validate() const;
  double mean() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

/// Inverse-transform draw for a given uniform u in (0, 1).
double quantile_from_uniform(const Distribution& dist, double u);

/// Remaining life of a unit that has survived to `age`, for a given u.
double conditional_from_uniform(const Distribution& dist, double age, double u);

double sample(const Distribution& dist, RngStream& rng);

/// Draw from (T - age | T > age).
double sample_conditional(const Distribution& dist, double age, RngStream& rng);

}  // namespace mlrel
