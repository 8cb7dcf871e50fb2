#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mlrel/rng.hpp"
#include "mlrel/system.hpp"

namespace mlrel {

/// Random growth of two-terminal systems from the one-component system by
/// series, parallel and bridge moves.
struct GrowthConfig {
  int target_components = 1;
  double p_series = 1.0 / 3.0;
  double p_parallel = 1.0 / 3.0;
  double p_bridge = 1.0 / 3.0;
  double shape = 1.0;
  double scale_min = 2.0;
  double scale_max = 10.0;
  std::optional<double> repair_rate;  // Exponential repair clock when set
  std::uint64_t seed = 0;
  std::size_t cutset_cap = kDefaultCutsetCap;

  /// Throws ParameterError on invalid probabilities or distribution bounds.
  void validate() const;
};

/// Sink marker used for edges recorded in a move log (the sink id shifts as
/// components are added).
inline constexpr int kLoggedSink = -1;

/// Grows a system with exactly cfg.target_components components and fills in
/// its minimal cut sets and move log. Uses the generator stream of cfg.seed.
System grow(const GrowthConfig& cfg);
System grow(const GrowthConfig& cfg, RngStream& rng);

/// Snapshots of one growth run at each of the strictly increasing sizes.
std::vector<System> grow_nested(const GrowthConfig& cfg, std::span<const int> sizes);
std::vector<System> grow_nested(const GrowthConfig& cfg, std::span<const int> sizes,
                                RngStream& rng);

/// Rebuilds the network described by a move log, starting from the
/// one-component system. Throws StructureError on inconsistent logs.
Network replay_moves(std::span<const GrowthMove> moves);

}  // namespace mlrel
