#include "mlrel/distributions.hpp"

#include <cmath>
#include <string>

#include "mlrel/errors.hpp"

namespace mlrel {

Distribution Distribution::weibull(double shape, double scale) {
  Distribution d;
  d.kind = DistKind::kWeibull;
  d.shape = shape;
  d.scale = scale;
  d.rate = 0.0;
  d.validate();
  return d;
}

Distribution Distribution::exponential(double rate) {
  Distribution d;
  d.kind = DistKind::kExponential;
  d.rate = rate;
  d.shape = 1.0;
  d.scale = rate > 0.0 ? 1.0 / rate : kNever;
  d.validate();
  return d;
}

void Distribution::validate() const {
  switch (kind) {
    case DistKind::kWeibull:
      if (!(shape > 0.0) || !std::isfinite(shape))
        throw ParameterError("weibull shape must be positive and finite, got " +
                             std::to_string(shape));
      if (!(scale > 0.0) || !std::isfinite(scale))
        throw ParameterError("weibull scale must be positive and finite, got " +
                             std::to_string(scale));
      return;
    case DistKind::kExponential:
      if (!(rate >= 0.0) || !std::isfinite(rate))
        throw ParameterError("exponential rate must be nonnegative and finite, got " +
                             std::to_string(rate));
      return;
  }
  throw ParameterError("unknown distribution kind");
}

double Distribution::mean() const {
  if (kind == DistKind::kWeibull) return scale * std::tgamma(1.0 + 1.0 / shape);
  return rate > 0.0 ? 1.0 / rate : kNever;
}

double quantile_from_uniform(const Distribution& dist, double u) {
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("uniform draw must lie in (0, 1)");
  if (dist.kind == DistKind::kWeibull) {
    return dist.scale * std::pow(-std::log(u), 1.0 / dist.shape);
  }
  if (dist.rate == 0.0) return kNever;
  return -std::log(u) / dist.rate;
}

double conditional_from_uniform(const Distribution& dist, double age, double u) {
  if (!(age >= 0.0)) throw ParameterError("conditioning age must be nonnegative");
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("uniform draw must lie in (0, 1)");
  if (dist.kind == DistKind::kExponential || age == 0.0) {
    return quantile_from_uniform(dist, u);
  }
  // Solves S(age + s) = S(age) * u, i.e. s = scale * ((age/scale)^k - ln u)^(1/k) - age,
  // rewritten around log1p/expm1 so that old ages do not cancel to zero.
  const double k = dist.shape;
  const double x = -std::log(u) / std::pow(age / dist.scale, k);
  return age * std::expm1(std::log1p(x) / k);
}

double sample(const Distribution& dist, RngStream& rng) {
  if (dist.kind == DistKind::kExponential && dist.rate == 0.0) return kNever;
  return quantile_from_uniform(dist, rng.uniform_open());
}

double sample_conditional(const Distribution& dist, double age, RngStream& rng) {
  if (!(age >= 0.0)) throw ParameterError("conditioning age must be nonnegative");
  if (dist.kind == DistKind::kExponential && dist.rate == 0.0) return kNever;
  return conditional_from_uniform(dist, age, rng.uniform_open());
}

}  // namespace mlrel
