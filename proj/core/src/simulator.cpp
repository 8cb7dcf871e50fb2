#include "mlrel/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

#include "mlrel/errors.hpp"

namespace mlrel {

namespace {

std::vector<Distribution> lifetime_list(const System& sys) {
  if (sys.components.size() != static_cast<std::size_t>(sys.component_count()))
    throw ContractError("system component list does not match its network");
  std::vector<Distribution> out;
  out.reserve(sys.components.size());
  for (const auto& c : sys.components) out.push_back(c.lifetime);
  return out;
}

std::vector<CutSet> canonical(std::span<const CutSet> cuts) {
  std::vector<CutSet> out(cuts.begin(), cuts.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// System copy whose cut list is `fine`, plus the coarse/fine index lists.
struct Restricted {
  System sys;
  std::vector<std::uint32_t> fine;
  std::vector<std::uint32_t> coarse;
};

Restricted restrict_to(const System& sys, std::span<const CutSet> coarse,
                       std::span<const CutSet> fine) {
  Restricted r;
  r.sys.network = sys.network;
  r.sys.components = sys.components;
  r.sys.cutsets = canonical(fine);
  r.fine.resize(r.sys.cutsets.size());
  for (std::size_t i = 0; i < r.fine.size(); ++i) r.fine[i] = static_cast<std::uint32_t>(i);
  const auto coarse_sorted = canonical(coarse);
  r.coarse = index_of(r.sys.cutsets, coarse_sorted);
  return r;
}

}  // namespace

void draw_component_lifetimes(const System& sys, RngStream& rng, std::span<double> out) {
  for (std::size_t i = 0; i < sys.components.size(); ++i) out[i] = sample(sys.components[i].lifetime, rng);
}

double sample_lifetime(const System& sys, std::span<const CutSet> cuts, RngStream& rng) {
  std::vector<double> t(sys.components.size());
  draw_component_lifetimes(sys, rng, t);
  return eval_lifetime(cuts, t);
}

CoupledSample sample_coupled(const System& sys, std::span<const CutSet> coarse,
                             std::span<const CutSet> fine, RngStream& rng) {
  const auto fine_sorted = canonical(fine);
  (void)index_of(fine_sorted, canonical(coarse));  // subset check
  std::vector<double> t(sys.components.size());
  draw_component_lifetimes(sys, rng, t);
  return {eval_lifetime(coarse, t), eval_lifetime(fine, t)};
}

RepairableOutcome sample_lifetime_repairable(const System& sys, std::span<const CutSet> cuts,
                                             RngStream& rng, std::optional<double> horizon) {
  const auto r = restrict_to(sys, cuts, cuts);
  RepairEngine engine(r.sys, r.fine, r.coarse);
  RepairEngine::Workspace ws;
  const auto run = engine.run(rng, ws, horizon);
  return {run.fine, run.repairs, run.truncated};
}

CoupledSample sample_coupled_repairable(const System& sys, std::span<const CutSet> coarse,
                                        std::span<const CutSet> fine, RngStream& rng) {
  const auto r = restrict_to(sys, coarse, fine);
  RepairEngine engine(r.sys, r.fine, r.coarse);
  RepairEngine::Workspace ws;
  const auto run = engine.run(rng, ws);
  return {run.coarse, run.fine};
}

LifetimeSampler::LifetimeSampler(const System& sys)
    : lifetimes_(lifetime_list(sys)), cuts_(sys.cutsets, sys.component_count()) {}

void LifetimeSampler::draw(RngStream& rng, std::span<double> times) const {
  for (std::size_t i = 0; i < lifetimes_.size(); ++i) times[i] = mlrel::sample(lifetimes_[i], rng);
}

void LifetimeSampler::draw(std::span<const std::uint32_t> components, RngStream& rng,
                           std::span<double> times) const {
  for (std::uint32_t c : components) times[c] = mlrel::sample(lifetimes_[c], rng);
}

std::vector<std::uint32_t> LifetimeSampler::components_of(
    std::span<const std::uint32_t> selection) const {
  std::vector<std::uint8_t> used(lifetimes_.size(), 0);
  for (std::uint32_t cut : selection) {
    if (cut >= cuts_.size()) throw IndexError("cut index out of range");
    for (std::uint32_t m : cuts_.members(cut)) used[m] = 1;
  }
  std::vector<std::uint32_t> out;
  for (std::size_t c = 0; c < used.size(); ++c)
    if (used[c]) out.push_back(static_cast<std::uint32_t>(c));
  return out;
}

double LifetimeSampler::sample(std::span<const std::uint32_t> selection,
                               std::span<const std::uint32_t> components, RngStream& rng,
                               std::span<double> scratch) const {
  draw(components, rng, scratch);
  return cuts_.min_over(selection, scratch);
}

CoupledSample LifetimeSampler::sample_coupled(std::span<const std::uint32_t> coarse,
                                              std::span<const std::uint32_t> extra,
                                              std::span<const std::uint32_t> components,
                                              RngStream& rng, std::span<double> scratch) const {
  draw(components, rng, scratch);
  CoupledSample s;
  s.coarse = cuts_.min_over(coarse, scratch);
  s.fine = cuts_.min_over(extra, scratch, s.coarse);
  return s;
}

double LifetimeSampler::sample(std::span<const std::uint32_t> selection, RngStream& rng,
                               std::span<double> scratch) const {
  draw(rng, scratch);
  return cuts_.min_over(selection, scratch);
}

CoupledSample LifetimeSampler::sample_coupled(std::span<const std::uint32_t> coarse,
                                              std::span<const std::uint32_t> extra,
                                              RngStream& rng, std::span<double> scratch) const {
  draw(rng, scratch);
  CoupledSample s;
  s.coarse = cuts_.min_over(coarse, scratch);
  s.fine = cuts_.min_over(extra, scratch, s.coarse);
  assert(s.fine <= s.coarse);
  return s;
}

RepairEngine::RepairEngine(const System& sys, std::span<const std::uint32_t> fine,
                           std::span<const std::uint32_t> coarse)
    : lifetimes_(lifetime_list(sys)) {
  repairs_.reserve(sys.components.size());
  for (const auto& c : sys.components) repairs_.push_back(c.repair);

  std::vector<std::uint32_t> fine_sorted(fine.begin(), fine.end());
  std::vector<std::uint32_t> coarse_sorted(coarse.begin(), coarse.end());
  std::sort(fine_sorted.begin(), fine_sorted.end());
  std::sort(coarse_sorted.begin(), coarse_sorted.end());
  fine_sorted.erase(std::unique(fine_sorted.begin(), fine_sorted.end()), fine_sorted.end());
  coarse_sorted.erase(std::unique(coarse_sorted.begin(), coarse_sorted.end()),
                      coarse_sorted.end());
  if (!std::includes(fine_sorted.begin(), fine_sorted.end(), coarse_sorted.begin(),
                     coarse_sorted.end()))
    throw ContractError("coarse cut collection is not a subset of the fine collection");

  const std::size_t n = lifetimes_.size();
  std::vector<std::vector<std::uint32_t>> per_component(n);
  for (std::size_t local = 0; local < fine_sorted.size(); ++local) {
    const std::uint32_t global = fine_sorted[local];
    if (global >= sys.cutsets.size()) throw IndexError("cut index out of range");
    const CutSet& cut = sys.cutsets[global];
    cut_size_.push_back(static_cast<std::uint32_t>(cut.size()));
    cut_is_coarse_.push_back(
        std::binary_search(coarse_sorted.begin(), coarse_sorted.end(), global) ? 1 : 0);
    for (int id : cut) {
      if (id < 1 || static_cast<std::size_t>(id) > n)
        throw IndexError("cut set references unknown component");
      per_component[id - 1].push_back(static_cast<std::uint32_t>(local));
    }
  }
  incidence_offsets_.push_back(0);
  for (const auto& l : per_component) {
    incidence_.insert(incidence_.end(), l.begin(), l.end());
    incidence_offsets_.push_back(static_cast<std::uint32_t>(incidence_.size()));
  }
}

RepairEngine::Run RepairEngine::run(RngStream& rng, Workspace& ws, std::optional<double> horizon,
                                    std::vector<TrajectoryEvent>* trajectory) const {
  return simulate<false>(rng, ws, horizon, trajectory, {});
}

RepairEngine::Run RepairEngine::run_then_freeze(RngStream& rng, Workspace& ws,
                                                std::span<double> times) const {
  return simulate<true>(rng, ws, std::nullopt, nullptr, times);
}

template <bool kFreeze>
RepairEngine::Run RepairEngine::simulate(RngStream& rng, Workspace& ws,
                                         std::optional<double> horizon,
                                         std::vector<TrajectoryEvent>* trajectory,
                                         std::span<double> times) const {
  const std::size_t n = lifetimes_.size();
  Run result;
  ws.failed_members.assign(cut_size_.size(), 0);
  ws.down.assign(n, 0);
  ws.last_event.assign(n, 0.0);
  ws.pending.assign(n, kNever);
  ws.heap.clear();

  // Initial lifetimes are drawn in id order, exactly as the one-shot sampler does.
  for (std::size_t c = 0; c < n; ++c) {
    ws.pending[c] = sample(lifetimes_[c], rng);
    if (ws.pending[c] < kNever) ws.heap.emplace_back(ws.pending[c], static_cast<int>(c));
  }
  if (cut_size_.empty()) {
    if constexpr (kFreeze) std::copy(ws.pending.begin(), ws.pending.end(), times.begin());
    return result;
  }
  const auto later = std::greater<std::pair<double, int>>{};
  std::make_heap(ws.heap.begin(), ws.heap.end(), later);

  bool fine_failed = false;
  while (!ws.heap.empty()) {
    std::pop_heap(ws.heap.begin(), ws.heap.end(), later);
    const auto [t, c] = ws.heap.back();
    ws.heap.pop_back();
    if (horizon && t > *horizon) {
      result.truncated = true;
      if (!fine_failed) result.fine = kNever;
      result.coarse = kNever;
      return result;
    }
    ++result.events;
    ++result.work;
    const std::uint32_t* inc = incidence_.data() + incidence_offsets_[c];
    const std::uint32_t* inc_end = incidence_.data() + incidence_offsets_[c + 1];
    result.work += static_cast<std::uint64_t>(inc_end - inc);
    ws.last_event[c] = t;

    if (!ws.down[c]) {
      ws.down[c] = 1;
      if (trajectory) trajectory->push_back({t, c + 1, EventKind::kFail});
      bool coarse_hit = false;
      for (; inc != inc_end; ++inc) {
        if (++ws.failed_members[*inc] == cut_size_[*inc]) {
          fine_failed = true;
          coarse_hit = coarse_hit || cut_is_coarse_[*inc];
        }
      }
      if (fine_failed && result.fine == kNever) {
        result.fine = t;
        if constexpr (kFreeze) {
          for (std::size_t k = 0; k < n; ++k)
            times[k] = ws.down[k] ? ws.last_event[k] : ws.pending[k];
          result.coarse = t;
          return result;
        }
      }
      if (coarse_hit) {
        result.coarse = t;
        return result;
      }
      if (repairs_[c]) {
        const double r = sample(*repairs_[c], rng);
        ws.pending[c] = t + r;
        if (r < kNever) {
          ws.heap.emplace_back(t + r, c);
          std::push_heap(ws.heap.begin(), ws.heap.end(), later);
        }
      } else {
        ws.pending[c] = kNever;
      }
    } else {
      ws.down[c] = 0;
      if (!fine_failed) ++result.repairs;
      if (trajectory) trajectory->push_back({t, c + 1, EventKind::kRepairComplete});
      for (; inc != inc_end; ++inc) --ws.failed_members[*inc];
      const double life = sample(lifetimes_[c], rng);
      ws.pending[c] = t + life;
      ws.heap.emplace_back(t + life, c);
      std::push_heap(ws.heap.begin(), ws.heap.end(), later);
    }
  }
  // Every remaining clock is infinite: the coarse collection never fails.
  if constexpr (kFreeze) {
    for (std::size_t k = 0; k < n; ++k) times[k] = ws.down[k] ? ws.last_event[k] : kNever;
  }
  return result;
}

}  // namespace mlrel
