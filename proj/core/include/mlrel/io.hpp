#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlrel/diagnostics.hpp"
#include "mlrel/estimators.hpp"
#include "mlrel/level_selection.hpp"
#include "mlrel/system.hpp"

namespace mlrel {

/// Shortest decimal that reads back to the same double; "inf", "-inf" and
/// "nan" for the non-finite values.
std::string format_double(double x);

/// UTF-8 JSON system file. Component ids run 1..n, the source is 0 and the
/// sink n + 1. Cut sets and move log are optional.
std::string dump_system(const System& sys);
/// Throws FormatError naming the offending field.
System parse_system(std::string_view text);

/// FNV-1a hash of the canonical cut list, used to tie partitions to systems.
std::uint64_t cutset_fingerprint(std::span<const CutSet> cuts);

std::string dump_partition(const LevelPartition& partition, std::uint64_t fingerprint);
/// Throws FormatError on malformed input and ContractError when the
/// partition was built for a different cut list.
LevelPartition parse_partition(std::string_view text, std::uint64_t expected_fingerprint);

/// Estimate document. Wall-clock fields are null unless `timing` is set so
/// that untimed runs are reproducible byte for byte.
std::string dump_estimate(const EstimateResult& result, bool timing);

/// level,N,mean,var,cost,cut_count
std::string level_csv(std::span<const LevelStats> levels);

struct SimulatedSample {
  double lifetime = 0.0;
  std::uint64_t repairs = 0;
};

/// sample_index,lifetime,n_repairs
std::string simulate_csv(std::span<const SimulatedSample> samples);

/// level,mean,var,cost_proxy,kappa_seconds
std::string diagnose_csv(std::span<const LevelStats> levels, std::span<const double> cost_proxy);

std::string dump_rates(const RateReport& report);

/// eps,top_level,speedup
std::string speedup_csv(std::span<const SpeedupPoint> points);

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace mlrel
