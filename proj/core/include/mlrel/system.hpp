#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlrel/distributions.hpp"

namespace mlrel {

/// Directed two-terminal network. Components are nodes 1..component_count,
/// the source terminal is node 0 and the sink is node component_count + 1.
/// Terminals and edges are perfectly reliable.
struct Network {
  int component_count = 0;
  std::vector<std::pair<int, int>> edges;

  int source() const noexcept { return 0; }
  int sink() const noexcept { return component_count + 1; }
  int node_count() const noexcept { return component_count + 2; }

  friend bool operator==(const Network&, const Network&) = default;
};

/// Set of component ids (1-based), kept sorted and duplicate free.
class CutSet {
 public:
  CutSet() = default;
  /// Sorts the ids; throws IndexError on duplicates, empty input or ids < 1.
  explicit CutSet(std::vector<int> ids);
  CutSet(std::initializer_list<int> ids) : CutSet(std::vector<int>(ids)) {}

  std::span<const int> members() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }
  bool contains(int id) const;

  friend bool operator==(const CutSet&, const CutSet&) = default;
  /// Canonical order: by size, then lexicographically.
  friend std::strong_ordering operator<=>(const CutSet& a, const CutSet& b);

 private:
  std::vector<int> ids_;
};

struct Component {
  Distribution lifetime;
  std::optional<Distribution> repair;

  friend bool operator==(const Component&, const Component&) = default;
};

enum class MoveKind { kSeries, kParallel, kBridge };

/// One step of random system growth. `target` is the replaced component for
/// series/parallel moves; bridge moves record the two bridged edges.
struct GrowthMove {
  MoveKind kind = MoveKind::kSeries;
  int target = 0;
  std::pair<int, int> edge_a{0, 0};
  std::pair<int, int> edge_b{0, 0};
  int added = 0;  // id of the component created by this move

  friend bool operator==(const GrowthMove&, const GrowthMove&) = default;
};

struct System {
  Network network;
  std::vector<Component> components;  // index i holds component id i + 1
  std::vector<CutSet> cutsets;        // minimal cut sets, canonical order
  std::vector<GrowthMove> move_log;

  int component_count() const noexcept { return network.component_count; }

  friend bool operator==(const System&, const System&) = default;
};

/// 1 = working, 0 = failed; index i is component i + 1.
using StatusVector = std::vector<std::uint8_t>;

/// min over cut sets of the max member failure time; kNever for no cuts.
/// `failure_times[i]` belongs to component i + 1.
double eval_lifetime(std::span<const CutSet> cuts, std::span<const double> failure_times);

/// True iff some cut set has all members failed.
bool is_failed(std::span<const CutSet> cuts, std::span<const std::uint8_t> status);

/// Flattened cut sets with 0-based member indices for the sampling hot paths.
class CompiledCuts {
 public:
  CompiledCuts() = default;
  CompiledCuts(std::span<const CutSet> cuts, int component_count);

  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const std::uint32_t> members(std::size_t cut) const noexcept {
    return {members_.data() + offsets_[cut], members_.data() + offsets_[cut + 1]};
  }
  std::size_t total_members() const noexcept { return members_.size(); }

  /// Failure time of one cut set.
  double cut_time(std::size_t cut, std::span<const double> times) const noexcept;

  /// min over the selected cut indices of their failure times, starting from
  /// `bound` (cuts that cannot beat `bound` are abandoned early).
  double min_over(std::span<const std::uint32_t> selection, std::span<const double> times,
                  double bound = kNever) const noexcept;

  double min_over_all(std::span<const double> times) const noexcept;

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> members_;
};

/// Throws StructureError unless the network is a DAG whose components all
/// lie on some source-to-sink path.
void validate_network(const Network& net);

/// Source-to-sink reachability through working components only.
class ConnectivityOracle {
 public:
  explicit ConnectivityOracle(const Network& net);
  bool connected(std::span<const std::uint8_t> status) const;

 private:
  int component_count_;
  std::vector<std::vector<int>> out_;
  mutable std::vector<int> stack_;
  mutable std::vector<std::uint8_t> seen_;
};

inline constexpr std::size_t kDefaultCutsetCap = 1'000'000;

enum class CutsetMethod {
  /// Walks the lattice of minimal source/sink separators: each separator's
  /// source side is grown by one separator vertex and re-closed. Cost is
  /// linear in the number of cut sets.
  kSeparatorLattice,
  /// Enumerates every simple source-to-sink path and computes the minimal
  /// hitting sets of the path family by Berge's incremental dualisation.
  /// Exponential in the path count; kept as an independent cross-check.
  kPathDualization,
};

/// Minimal vertex cut sets separating source from sink, canonical order.
/// Throws StructureError for invalid networks and CapacityError once the
/// number of paths or cut sets exceeds `cap`.
std::vector<CutSet> enumerate_min_cutsets(const Network& net,
                                          std::size_t cap = kDefaultCutsetCap,
                                          CutsetMethod method = CutsetMethod::kSeparatorLattice);

struct ValidationReport {
  std::vector<std::string> violations;
  bool exhaustive = false;  // completeness checked over all 2^n states

  bool ok() const noexcept { return violations.empty(); }
};

inline constexpr int kExhaustiveLimit = 20;

ValidationReport validate_system(const System& sys);

/// Positions of `subset` inside `superset` (both canonical); ContractError if
/// some cut set of `subset` is missing.
std::vector<std::uint32_t> index_of(std::span<const CutSet> superset,
                                    std::span<const CutSet> subset);

}  // namespace mlrel
