#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mlrel/rng.hpp"
#include "mlrel/system.hpp"

namespace mlrel {

/// Lifetimes of a coarse and a fine cut collection on common randomness.
/// Because the coarse collection is a subset, fine <= coarse on every path.
struct CoupledSample {
  double coarse = kNever;
  double fine = kNever;
};

enum class EventKind { kFail, kRepairComplete };

struct TrajectoryEvent {
  double time = 0.0;
  int component = 0;  // 1-based id
  EventKind kind = EventKind::kFail;
};

struct RepairableOutcome {
  double lifetime = kNever;
  std::uint64_t repairs = 0;  // repair completions before system failure
  bool truncated = false;     // horizon reached before any cut failed
};

/// One lifetime per component, in component-id order.
void draw_component_lifetimes(const System& sys, RngStream& rng, std::span<double> out);

double sample_lifetime(const System& sys, std::span<const CutSet> cuts, RngStream& rng);

/// Throws ContractError unless every coarse cut set also appears in `fine`.
CoupledSample sample_coupled(const System& sys, std::span<const CutSet> coarse,
                             std::span<const CutSet> fine, RngStream& rng);

RepairableOutcome sample_lifetime_repairable(const System& sys, std::span<const CutSet> cuts,
                                             RngStream& rng,
                                             std::optional<double> horizon = std::nullopt);

CoupledSample sample_coupled_repairable(const System& sys, std::span<const CutSet> coarse,
                                        std::span<const CutSet> fine, RngStream& rng);

/// Non-repairable sampler over subsets of a system's cut list, given as
/// indices into sys.cutsets.
class LifetimeSampler {
 public:
  explicit LifetimeSampler(const System& sys);

  int component_count() const noexcept { return static_cast<int>(lifetimes_.size()); }
  const CompiledCuts& cuts() const noexcept { return cuts_; }

  void draw(RngStream& rng, std::span<double> times) const;
  /// Draws only the listed 0-based components, in the given order.
  void draw(std::span<const std::uint32_t> components, RngStream& rng,
            std::span<double> times) const;

  /// Sorted 0-based ids of the components appearing in the selected cuts.
  std::vector<std::uint32_t> components_of(std::span<const std::uint32_t> selection) const;

  double sample(std::span<const std::uint32_t> selection, RngStream& rng,
                std::span<double> scratch) const;

  /// `extra` lists the fine-level cut indices not already in `coarse`.
  CoupledSample sample_coupled(std::span<const std::uint32_t> coarse,
                               std::span<const std::uint32_t> extra, RngStream& rng,
                               std::span<double> scratch) const;

  /// Variants that draw only `components` (from components_of of the finest
  /// selection involved); other entries of `scratch` are left untouched.
  double sample(std::span<const std::uint32_t> selection,
                std::span<const std::uint32_t> components, RngStream& rng,
                std::span<double> scratch) const;
  CoupledSample sample_coupled(std::span<const std::uint32_t> coarse,
                               std::span<const std::uint32_t> extra,
                               std::span<const std::uint32_t> components, RngStream& rng,
                               std::span<double> scratch) const;

 private:
  std::vector<Distribution> lifetimes_;
  CompiledCuts cuts_;
};

/// Failure/repair discrete-event engine for one fine cut collection, part of
/// which is flagged as the coarse collection.
///
/// Components start as good as new. A failed component waits for its repair
/// clock, after which it is renewed with a fresh lifetime. Events are ordered
/// by time with ties broken by component id.
class RepairEngine {
 public:
  struct Workspace {
    std::vector<std::uint32_t> failed_members;
    std::vector<std::uint8_t> down;
    std::vector<double> last_event;
    std::vector<double> pending;
    std::vector<std::pair<double, int>> heap;
  };

  struct Run {
    double fine = kNever;
    double coarse = kNever;
    std::uint64_t repairs = 0;        // completed before the fine failure
    std::uint64_t events = 0;
    std::uint64_t work = 0;           // events plus cut-counter updates
    bool truncated = false;
  };

  /// `fine` and `coarse` are indices into sys.cutsets; coarse must be a
  /// subset of fine (ContractError otherwise). Components without a repair
  /// distribution are never repaired.
  RepairEngine(const System& sys, std::span<const std::uint32_t> fine,
               std::span<const std::uint32_t> coarse);

  /// Simulates one trajectory until a coarse cut set is fully failed (or the
  /// horizon passes). With no cut sets at all, returns kNever immediately.
  Run run(RngStream& rng, Workspace& ws, std::optional<double> horizon = std::nullopt,
          std::vector<TrajectoryEvent>* trajectory = nullptr) const;

  /// Runs until the first fine failure, then freezes repairs: failed
  /// components keep their last failure time, working ones keep their
  /// already-scheduled failure time (a draw from the conditional lifetime
  /// given survival so far). Writes those per-component times to `times`.
  Run run_then_freeze(RngStream& rng, Workspace& ws, std::span<double> times) const;

  int component_count() const noexcept { return static_cast<int>(lifetimes_.size()); }

 private:
  template <bool kFreeze>
  Run simulate(RngStream& rng, Workspace& ws, std::optional<double> horizon,
               std::vector<TrajectoryEvent>* trajectory, std::span<double> times) const;

  std::vector<Distribution> lifetimes_;
  std::vector<std::optional<Distribution>> repairs_;
  std::vector<std::uint32_t> cut_size_;      // per local cut
  std::vector<std::uint8_t> cut_is_coarse_;  // per local cut
  std::vector<std::uint32_t> incidence_offsets_;
  std::vector<std::uint32_t> incidence_;     // component -> local cuts
};

}  // namespace mlrel
