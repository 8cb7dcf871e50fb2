#include "mlrel/level_selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "mlrel/errors.hpp"
#include "mlrel/simulator.hpp"

namespace mlrel {

PilotData pilot_scores(const System& sys, std::size_t samples, RngStream& rng,
                       bool repairable) {
  if (samples < 1) throw ParameterError("pilot needs at least one replicate");
  PilotData pilot;
  pilot.samples = samples;
  pilot.cut_count = sys.cutsets.size();
  pilot.repairable = repairable;
  pilot.times.resize(samples * pilot.cut_count);
  pilot.eta.assign(pilot.cut_count, 0.0);

  const CompiledCuts cuts(sys.cutsets, sys.component_count());
  std::vector<double> component_times(static_cast<std::size_t>(sys.component_count()));

  std::optional<RepairEngine> engine;
  RepairEngine::Workspace ws;
  if (repairable) {
    std::vector<std::uint32_t> all(pilot.cut_count);
    std::iota(all.begin(), all.end(), 0u);
    engine.emplace(sys, all, all);
  }
  const LifetimeSampler direct(sys);

  for (std::size_t j = 0; j < samples; ++j) {
    if (engine) {
      const auto run = engine->run_then_freeze(rng, ws, component_times);
      pilot.cost += static_cast<double>(run.events) * static_cast<double>(pilot.cut_count);
    } else {
      direct.draw(rng, component_times);
    }
    double* row = pilot.times.data() + j * pilot.cut_count;
    for (std::size_t i = 0; i < pilot.cut_count; ++i) {
      row[i] = cuts.cut_time(i, component_times);
      pilot.eta[i] += row[i];
    }
    pilot.cost += static_cast<double>(pilot.cut_count);
  }
  for (auto& e : pilot.eta) e /= static_cast<double>(samples);
  return pilot;
}

std::vector<std::size_t> LevelPartition::sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : levels) out.push_back(l.size());
  return out;
}

std::size_t level_size(std::size_t cut_count, int top, int level) {
  if (top < 0 || level < 0 || level > top) throw ParameterError("level outside partition");
  const int shift = top - level;
  if (shift >= 63) return cut_count == 0 ? 0 : 1;
  const std::size_t div = std::size_t{1} << shift;
  return (cut_count + div - 1) / div;
}

int max_top_level(std::size_t cut_count) {
  if (cut_count <= 1) return 0;
  int top = 0;
  for (int candidate = 1; candidate < 63; ++candidate) {
    bool increasing = true;
    for (int l = 1; l <= candidate && increasing; ++l)
      increasing = level_size(cut_count, candidate, l) > level_size(cut_count, candidate, l - 1);
    if (!increasing) break;
    top = candidate;
  }
  return top;
}

int default_top_level(std::size_t cut_count) {
  if (cut_count <= 1) return 0;
  const int log2_floor = static_cast<int>(std::bit_width(cut_count)) - 1;
  return std::min(log2_floor, max_top_level(cut_count));
}

LevelPartition build_partition(const PilotData& pilot, std::optional<int> top) {
  const std::size_t count = pilot.cut_count;
  if (count == 0) throw ContractError("cannot partition an empty cut list");
  if (pilot.eta.size() != count || pilot.times.size() != pilot.samples * count)
    throw ContractError("pilot data is inconsistent with its cut count");
  int L = top ? *top : default_top_level(count);
  if (L < 0) throw ParameterError("level count must be nonnegative");
  L = std::min(L, max_top_level(count));

  LevelPartition part;
  part.cut_count = count;
  part.pilot_cost = pilot.cost;

  std::vector<std::uint32_t> order(count);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return pilot.eta[a] < pilot.eta[b];
  });
  const std::size_t first = level_size(count, L, 0);
  std::vector<std::uint8_t> chosen(count, 0);
  std::vector<std::uint32_t> current(order.begin(), order.begin() + first);
  std::vector<double> scores;
  for (auto i : current) {
    chosen[i] = 1;
    scores.push_back(pilot.eta[i]);
  }
  part.levels.push_back(current);
  part.added_scores.push_back(scores);

  // Pilot lifetime of the previous level, per replicate.
  std::vector<double> previous(pilot.samples, kNever);
  auto absorb = [&](std::span<const std::uint32_t> added) {
    for (std::size_t j = 0; j < pilot.samples; ++j)
      for (auto i : added) previous[j] = std::min(previous[j], pilot.at(j, i));
  };
  absorb(current);

  std::vector<double> delta(count, 0.0);
  std::vector<std::uint32_t> candidates;
  for (int level = 1; level <= L; ++level) {
    candidates.clear();
    for (std::uint32_t i = 0; i < count; ++i) {
      if (chosen[i]) continue;
      double acc = 0.0;
      for (std::size_t j = 0; j < pilot.samples; ++j) {
        const double t = pilot.at(j, i);
        if (t < previous[j]) acc += previous[j] - t;
      }
      delta[i] = acc / static_cast<double>(pilot.samples);
      candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (delta[a] != delta[b]) return delta[a] > delta[b];
      return pilot.eta[a] < pilot.eta[b];
    });
    const std::size_t need = level_size(count, L, level) - current.size();
    std::vector<std::uint32_t> added(candidates.begin(), candidates.begin() + need);
    scores.clear();
    for (auto i : added) {
      chosen[i] = 1;
      scores.push_back(delta[i]);
    }
    current.insert(current.end(), added.begin(), added.end());
    absorb(added);
    part.levels.push_back(current);
    part.added_scores.push_back(scores);
  }
  return part;
}

void validate_partition(const LevelPartition& partition, std::size_t cut_count) {
  if (partition.cut_count != cut_count)
    throw ContractError("partition was built for " + std::to_string(partition.cut_count) +
                        " cut sets, system has " + std::to_string(cut_count));
  if (partition.levels.empty()) throw ContractError("partition has no levels");
  const int L = partition.top_level();
  std::vector<std::uint8_t> seen(cut_count, 0);
  std::size_t prev = 0;
  for (int l = 0; l <= L; ++l) {
    const auto& lvl = partition.levels[l];
    if (lvl.size() != level_size(cut_count, L, l))
      throw ContractError("level " + std::to_string(l) + " has " + std::to_string(lvl.size()) +
                          " cut sets, expected " + std::to_string(level_size(cut_count, L, l)));
    if (l > 0 && lvl.size() <= prev)
      throw ContractError("level sizes must increase strictly");
    if (!std::equal(partition.levels[l > 0 ? l - 1 : 0].begin(),
                    partition.levels[l > 0 ? l - 1 : 0].begin() + prev, lvl.begin()))
      throw ContractError("level " + std::to_string(l) + " does not extend level " +
                          std::to_string(l - 1));
    for (std::size_t k = prev; k < lvl.size(); ++k) {
      if (lvl[k] >= cut_count) throw ContractError("cut index out of range in partition");
      if (seen[lvl[k]]) throw ContractError("cut index repeated in partition");
      seen[lvl[k]] = 1;
    }
    prev = lvl.size();
  }
}

}  // namespace mlrel
