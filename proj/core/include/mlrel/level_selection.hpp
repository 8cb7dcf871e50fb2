#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mlrel/rng.hpp"
#include "mlrel/system.hpp"

namespace mlrel {

/// Pilot failure times of every cut set, used only to rank cut sets.
struct PilotData {
  std::size_t samples = 0;    // N'
  std::size_t cut_count = 0;  // #C
  std::vector<double> times;  // row-major: replicate j, cut i at j * cut_count + i
  std::vector<double> eta;    // mean pilot failure time per cut set
  double cost = 0.0;          // cut-set evaluations spent on the pilot
  bool repairable = false;

  double at(std::size_t replicate, std::size_t cut) const noexcept {
    return times[replicate * cut_count + cut];
  }
};

inline constexpr std::size_t kDefaultPilotSamples = 100;

/// Draws N' pilot replicates. Non-repairable: one lifetime per component and
/// replicate. Repairable: the failure/repair process runs to the first cut
/// set failure, then repairs stop and each cut set's failure time follows
/// from the frozen component times.
PilotData pilot_scores(const System& sys, std::size_t samples, RngStream& rng,
                       bool repairable);

/// Nested cut collections C_0 ⊂ ... ⊂ C_L = C, each a list of indices into
/// the system's cut list. levels[l] is cumulative and lists cuts in the
/// order they were selected.
struct LevelPartition {
  std::size_t cut_count = 0;
  std::vector<std::vector<std::uint32_t>> levels;
  /// Ranking score of each cut added at level l (eta for l = 0, delta after),
  /// parallel to the tail of levels[l] that is new at that level.
  std::vector<std::vector<double>> added_scores;
  double pilot_cost = 0.0;  // cut-set evaluations spent ranking the cut sets

  int top_level() const noexcept { return static_cast<int>(levels.size()) - 1; }
  std::vector<std::size_t> sizes() const;
};

/// ceil(cut_count / 2^(top - level)).
std::size_t level_size(std::size_t cut_count, int top, int level);

/// Largest top level whose level sizes are strictly increasing.
int max_top_level(std::size_t cut_count);

/// floor(log2(cut_count)), clamped by max_top_level.
int default_top_level(std::size_t cut_count);

/// Greedy pilot-based partition. `top` defaults to default_top_level and is
/// clamped to max_top_level. Ties are broken by the smaller pilot mean, then
/// by canonical cut order.
LevelPartition build_partition(const PilotData& pilot, std::optional<int> top = std::nullopt);

/// ContractError unless the partition is nested, ends with all cut sets and
/// follows the ceil-halving size rule.
void validate_partition(const LevelPartition& partition, std::size_t cut_count);

}  // namespace mlrel
