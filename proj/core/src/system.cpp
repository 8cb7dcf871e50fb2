#include "mlrel/system.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_set>

#include "mlrel/errors.hpp"

namespace mlrel {

CutSet::CutSet(std::vector<int> ids) : ids_(std::move(ids)) {
  if (ids_.empty()) throw IndexError("cut set must be nonempty");
  std::sort(ids_.begin(), ids_.end());
  if (ids_.front() < 1) throw IndexError("component ids start at 1");
  if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
    throw IndexError("duplicate component id in cut set");
}

bool CutSet::contains(int id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

std::strong_ordering operator<=>(const CutSet& a, const CutSet& b) {
  if (auto c = a.ids_.size() <=> b.ids_.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(a.ids_.begin(), a.ids_.end(), b.ids_.begin(),
                                                b.ids_.end());
}

double eval_lifetime(std::span<const CutSet> cuts, std::span<const double> failure_times) {
  double best = kNever;
  for (const auto& cut : cuts) {
    double worst = 0.0;
    for (int id : cut) {
      if (id < 1 || static_cast<std::size_t>(id) > failure_times.size())
        throw IndexError("cut set references component " + std::to_string(id) +
                         " without a failure time");
      worst = std::max(worst, failure_times[id - 1]);
    }
    best = std::min(best, worst);
  }
  return best;
}

bool is_failed(std::span<const CutSet> cuts, std::span<const std::uint8_t> status) {
  bool failed = false;
  for (const auto& cut : cuts) {
    bool all_down = true;
    for (int id : cut) {
      if (id < 1 || static_cast<std::size_t>(id) > status.size())
        throw IndexError("cut set references component " + std::to_string(id) +
                         " without a status");
      all_down = all_down && status[id - 1] == 0;
    }
    failed = failed || all_down;
  }
  return failed;
}

CompiledCuts::CompiledCuts(std::span<const CutSet> cuts, int component_count) {
  offsets_.reserve(cuts.size() + 1);
  offsets_.push_back(0);
  for (const auto& cut : cuts) {
    for (int id : cut) {
      if (id < 1 || id > component_count)
        throw IndexError("cut set references component " + std::to_string(id) + " of " +
                         std::to_string(component_count));
      members_.push_back(static_cast<std::uint32_t>(id - 1));
    }
    offsets_.push_back(static_cast<std::uint32_t>(members_.size()));
  }
}

double CompiledCuts::cut_time(std::size_t cut, std::span<const double> times) const noexcept {
  double worst = 0.0;
  for (auto m : members(cut)) worst = std::max(worst, times[m]);
  return worst;
}

double CompiledCuts::min_over(std::span<const std::uint32_t> selection,
                              std::span<const double> times, double bound) const noexcept {
  double best = bound;
  for (auto cut : selection) {
    const std::uint32_t* it = members_.data() + offsets_[cut];
    const std::uint32_t* last = members_.data() + offsets_[cut + 1];
    double worst = 0.0;
    for (; it != last; ++it) {
      worst = std::max(worst, times[*it]);
      if (worst >= best) break;
    }
    best = std::min(best, worst);
  }
  return best;
}

double CompiledCuts::min_over_all(std::span<const double> times) const noexcept {
  double best = kNever;
  for (std::size_t c = 0; c < size(); ++c) {
    double worst = 0.0;
    for (std::uint32_t i = offsets_[c]; i < offsets_[c + 1]; ++i) {
      worst = std::max(worst, times[members_[i]]);
      if (worst >= best) break;
    }
    best = std::min(best, worst);
  }
  return best;
}

namespace {

std::vector<std::vector<int>> out_lists(const Network& net) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(net.node_count()));
  for (auto [a, b] : net.edges) out[a].push_back(b);
  for (auto& l : out) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return out;
}

}  // namespace

void validate_network(const Network& net) {
  const int n = net.component_count;
  if (n < 1) throw StructureError("network needs at least one component");
  const int nodes = net.node_count();
  for (auto [a, b] : net.edges) {
    if (a < 0 || a >= nodes || b < 0 || b >= nodes)
      throw StructureError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                           ") references an unknown node");
    if (b == net.source()) throw StructureError("edge into the source terminal");
    if (a == net.sink()) throw StructureError("edge out of the sink terminal");
    if (a == b) throw StructureError("self loop at node " + std::to_string(a));
  }
  const auto out = out_lists(net);

  // Kahn's algorithm detects cycles.
  std::vector<int> indeg(nodes, 0);
  for (const auto& l : out)
    for (int b : l) ++indeg[b];
  std::vector<int> queue;
  for (int v = 0; v < nodes; ++v)
    if (indeg[v] == 0) queue.push_back(v);
  std::size_t head = 0;
  while (head < queue.size()) {
    int v = queue[head++];
    for (int b : out[v])
      if (--indeg[b] == 0) queue.push_back(b);
  }
  if (queue.size() != static_cast<std::size_t>(nodes))
    throw StructureError("network contains a cycle");

  std::vector<std::vector<int>> in(nodes);
  for (int v = 0; v < nodes; ++v)
    for (int b : out[v]) in[b].push_back(v);
  auto sweep = [nodes](const std::vector<std::vector<int>>& adj, int start) {
    std::vector<std::uint8_t> seen(nodes, 0);
    std::vector<int> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int b : adj[v])
        if (!seen[b]) {
          seen[b] = 1;
          stack.push_back(b);
        }
    }
    return seen;
  };
  const auto from_source = sweep(out, net.source());
  const auto to_sink = sweep(in, net.sink());
  if (!from_source[net.sink()]) throw StructureError("sink is not reachable from source");
  for (int v = 1; v <= n; ++v)
    if (!from_source[v] || !to_sink[v])
      throw StructureError("component " + std::to_string(v) +
                           " is not on any source-to-sink path");
}

ConnectivityOracle::ConnectivityOracle(const Network& net)
    : component_count_(net.component_count), out_(out_lists(net)) {
  stack_.reserve(net.node_count());
  seen_.resize(net.node_count());
}

bool ConnectivityOracle::connected(std::span<const std::uint8_t> status) const {
  if (status.size() != static_cast<std::size_t>(component_count_))
    throw IndexError("status vector length does not match component count");
  const int sink = component_count_ + 1;
  std::fill(seen_.begin(), seen_.end(), 0);
  stack_.clear();
  stack_.push_back(0);
  seen_[0] = 1;
  while (!stack_.empty()) {
    int v = stack_.back();
    stack_.pop_back();
    for (int b : out_[v]) {
      if (seen_[b]) continue;
      if (b == sink) return true;
      if (!status[b - 1]) continue;
      seen_[b] = 1;
      stack_.push_back(b);
    }
  }
  return false;
}

namespace {

// Fixed-stride pool of bitsets over the components (bit i = component i + 1).
class BitsetPool {
 public:
  explicit BitsetPool(std::size_t words) : words_(words) {}

  std::size_t words() const noexcept { return words_; }
  std::size_t size() const noexcept { return data_.size() / words_; }
  std::uint64_t* at(std::size_t i) noexcept { return data_.data() + i * words_; }
  const std::uint64_t* at(std::size_t i) const noexcept { return data_.data() + i * words_; }

  std::uint64_t* push_back() {
    data_.resize(data_.size() + words_, 0);
    return at(size() - 1);
  }
  void push_back(const std::uint64_t* src) {
    auto* dst = push_back();
    std::copy(src, src + words_, dst);
  }
  void clear() noexcept { data_.clear(); }
  void swap(BitsetPool& other) noexcept { data_.swap(other.data_); }

 private:
  std::size_t words_;
  std::vector<std::uint64_t> data_;
};

bool intersects(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  for (std::size_t w = 0; w < words; ++w)
    if (a[w] & b[w]) return true;
  return false;
}

bool subset_of(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  for (std::size_t w = 0; w < words; ++w)
    if (a[w] & ~b[w]) return false;
  return true;
}

bool test_bit(const std::uint64_t* a, int bit) { return (a[bit >> 6] >> (bit & 63)) & 1u; }
void set_bit(std::uint64_t* a, int bit) { a[bit >> 6] |= std::uint64_t{1} << (bit & 63); }

template <typename F>
void for_each_bit(const std::uint64_t* a, std::size_t words, F&& f) {
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t x = a[w];
    while (x) {
      int b = std::countr_zero(x);
      f(static_cast<int>(w * 64 + b));
      x &= x - 1;
    }
  }
}

// Component sets of all simple source-to-sink paths.
BitsetPool enumerate_paths(const Network& net, std::size_t cap) {
  const auto out = out_lists(net);
  const std::size_t words = (static_cast<std::size_t>(net.component_count) + 63) / 64;
  BitsetPool paths(words);
  std::vector<std::uint64_t> current(words, 0);
  const int sink = net.sink();

  struct Frame {
    int node;
    std::size_t next;
  };
  std::vector<Frame> stack{{net.source(), 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == out[f.node].size()) {
      if (f.node != net.source()) {
        int bit = f.node - 1;
        current[bit >> 6] &= ~(std::uint64_t{1} << (bit & 63));
      }
      stack.pop_back();
      continue;
    }
    int b = out[f.node][f.next++];
    if (b == sink) {
      if (paths.size() >= cap)
        throw CapacityError("source-to-sink path count exceeds cap of " + std::to_string(cap));
      paths.push_back(current.data());
      continue;
    }
    set_bit(current.data(), b - 1);
    stack.push_back({b, 0});
  }
  return paths;
}

std::vector<CutSet> to_cutsets(const BitsetPool& family, int component_bit_offset) {
  std::vector<CutSet> cuts;
  cuts.reserve(family.size());
  for (std::size_t t = 0; t < family.size(); ++t) {
    std::vector<int> ids;
    for_each_bit(family.at(t), family.words(),
                 [&](int b) { ids.push_back(b + 1 - component_bit_offset); });
    cuts.emplace_back(std::move(ids));
  }
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

struct WordsHash {
  std::size_t operator()(const std::vector<std::uint64_t>& w) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (auto x : w) h = (h ^ x) * 0xBF58476D1CE4E5B9ull + (h >> 29);
    return static_cast<std::size_t>(h);
  }
};

// Minimal separators of a DAG, indexed by node (bit v = node v, terminals
// included in the source-side sets but never in separators).
class SeparatorLattice {
 public:
  explicit SeparatorLattice(const Network& net)
      : nodes_(net.node_count()),
        sink_(net.sink()),
        words_((static_cast<std::size_t>(nodes_) + 63) / 64),
        out_(out_lists(net)),
        in_(static_cast<std::size_t>(nodes_)) {
    for (int v = 0; v < nodes_; ++v)
      for (int b : out_[v]) in_[b].push_back(v);
  }

  BitsetPool run(std::size_t cap) {
    BitsetPool found(words_);
    std::vector<std::vector<std::uint64_t>> queue_sides;
    std::unordered_set<std::vector<std::uint64_t>, WordsHash> seen;

    std::vector<std::uint64_t> start(words_, 0);
    set_bit(start.data(), 0);
    std::vector<std::uint64_t> sep, side;
    if (!close(start, sep, side)) return found;
    seen.insert(sep);
    found.push_back(sep.data());
    queue_sides.push_back(side);

    std::vector<std::uint64_t> grown(words_);
    for (std::size_t head = 0; head < queue_sides.size(); ++head) {
      const std::vector<std::uint64_t> base_side = queue_sides[head];
      const std::uint64_t* base_sep = found.at(head);
      std::vector<int> members;
      for_each_bit(base_sep, words_, [&](int v) { members.push_back(v); });
      for (int x : members) {
        grown = base_side;
        set_bit(grown.data(), x);
        if (!close(grown, sep, side)) continue;
        if (!seen.insert(sep).second) continue;
        if (found.size() >= cap)
          throw CapacityError("minimal cut set count exceeds cap of " + std::to_string(cap));
        found.push_back(sep.data());
        queue_sides.push_back(side);
        base_sep = found.at(head);  // push_back may reallocate
      }
    }
    return found;
  }

 private:
  // Smallest minimal separator whose source side contains `seed_side`.
  // Returns false when `seed_side` is adjacent to the sink.
  bool close(const std::vector<std::uint64_t>& seed_side, std::vector<std::uint64_t>& sep,
             std::vector<std::uint64_t>& side) {
    std::vector<std::uint64_t> boundary(words_, 0);
    bool touches_sink = false;
    for_each_bit(seed_side.data(), words_, [&](int v) {
      for (int b : out_[v]) {
        if (test_bit(seed_side.data(), b)) continue;
        if (b == sink_) touches_sink = true;
        set_bit(boundary.data(), b);
      }
    });
    if (touches_sink) return false;

    // Nodes that still reach the sink once the seed side and its boundary go.
    std::vector<std::uint64_t> sink_side(words_, 0);
    std::vector<int> stack{sink_};
    set_bit(sink_side.data(), sink_);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int a : in_[v]) {
        if (test_bit(sink_side.data(), a) || test_bit(seed_side.data(), a) ||
            test_bit(boundary.data(), a))
          continue;
        set_bit(sink_side.data(), a);
        stack.push_back(a);
      }
    }

    sep.assign(words_, 0);
    for_each_bit(boundary.data(), words_, [&](int v) {
      for (int b : out_[v])
        if (test_bit(sink_side.data(), b)) {
          set_bit(sep.data(), v);
          break;
        }
    });

    side.assign(words_, 0);
    stack.assign(1, 0);
    set_bit(side.data(), 0);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int b : out_[v]) {
        if (test_bit(side.data(), b) || test_bit(sep.data(), b)) continue;
        set_bit(side.data(), b);
        stack.push_back(b);
      }
    }
    return true;
  }

  int nodes_;
  int sink_;
  std::size_t words_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

}  // namespace

namespace {

std::vector<CutSet> enumerate_by_dualization(const Network& net, std::size_t cap) {
  BitsetPool paths = enumerate_paths(net, cap);
  const std::size_t words = paths.words();
  const int n = net.component_count;

  // Smaller paths first keeps the intermediate transversal families small.
  std::vector<std::size_t> order(paths.size());
  std::vector<int> weight(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    order[i] = i;
    int w = 0;
    for (std::size_t k = 0; k < words; ++k) w += std::popcount(paths.at(i)[k]);
    weight[i] = w;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weight[a] < weight[b]; });

  // Berge's incremental dualisation: after processing a prefix of the paths,
  // `family` holds exactly the minimal transversals of that prefix.
  BitsetPool family(words);
  {
    const std::uint64_t* first = paths.at(order.front());
    for_each_bit(first, words, [&](int b) { set_bit(family.push_back(), b); });
    if (family.size() > cap)
      throw CapacityError("minimal cut set count exceeds cap of " + std::to_string(cap));
  }
  BitsetPool hitting(words), next(words);
  std::vector<std::size_t> missing;
  std::vector<std::vector<std::uint32_t>> by_member(static_cast<std::size_t>(n));
  std::vector<std::uint64_t> candidate(words);

  for (std::size_t oi = 1; oi < order.size(); ++oi) {
    const std::uint64_t* path = paths.at(order[oi]);
    hitting.clear();
    missing.clear();
    for (std::size_t t = 0; t < family.size(); ++t) {
      if (intersects(family.at(t), path, words))
        hitting.push_back(family.at(t));
      else
        missing.push_back(t);
    }
    if (missing.empty()) continue;

    // A new set T + {v} can only be dominated by a hitting set containing v.
    for (auto& l : by_member) l.clear();
    for (std::size_t h = 0; h < hitting.size(); ++h)
      for_each_bit(hitting.at(h), words,
                   [&](int b) { by_member[b].push_back(static_cast<std::uint32_t>(h)); });

    next.clear();
    for (std::size_t h = 0; h < hitting.size(); ++h) next.push_back(hitting.at(h));
    for (std::size_t t : missing) {
      const std::uint64_t* base = family.at(t);
      for_each_bit(path, words, [&](int v) {
        std::copy(base, base + words, candidate.begin());
        set_bit(candidate.data(), v);
        for (auto h : by_member[v])
          if (subset_of(hitting.at(h), candidate.data(), words)) return;
        if (next.size() >= cap)
          throw CapacityError("minimal cut set count exceeds cap of " + std::to_string(cap));
        next.push_back(candidate.data());
      });
    }
    family.swap(next);
  }
  return to_cutsets(family, 0);
}

}  // namespace

std::vector<CutSet> enumerate_min_cutsets(const Network& net, std::size_t cap,
                                          CutsetMethod method) {
  validate_network(net);
  if (method == CutsetMethod::kPathDualization) return enumerate_by_dualization(net, cap);
  SeparatorLattice lattice(net);
  // Separator bits index nodes; component id == node id, so no offset.
  return to_cutsets(lattice.run(cap), 1);
}

namespace {

std::string describe(const CutSet& cut) {
  std::string s = "{";
  for (std::size_t i = 0; i < cut.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(cut.members()[i]);
  }
  return s + "}";
}

}  // namespace

ValidationReport validate_system(const System& sys) {
  ValidationReport report;
  try {
    validate_network(sys.network);
  } catch (const StructureError& e) {
    report.violations.push_back(std::string("network: ") + e.what());
    return report;
  }
  const int n = sys.component_count();
  if (sys.components.size() != static_cast<std::size_t>(n))
    report.violations.push_back("component list has " + std::to_string(sys.components.size()) +
                                " entries for " + std::to_string(n) + " network components");
  for (std::size_t i = 0; i < sys.components.size(); ++i) {
    try {
      sys.components[i].lifetime.validate();
      if (sys.components[i].repair) sys.components[i].repair->validate();
    } catch (const ParameterError& e) {
      report.violations.push_back("component " + std::to_string(i + 1) + ": " + e.what());
    }
  }

  std::vector<const CutSet*> usable;
  for (const auto& cut : sys.cutsets) {
    if (cut.size() == 0) {
      report.violations.push_back("empty cut set");
      continue;
    }
    if (cut.members().back() > n) {
      report.violations.push_back("cut set " + describe(cut) + " references unknown component");
      continue;
    }
    usable.push_back(&cut);
  }
  for (std::size_t i = 1; i < sys.cutsets.size(); ++i)
    if (sys.cutsets[i] == sys.cutsets[i - 1])
      report.violations.push_back("duplicate cut set " + describe(sys.cutsets[i]));

  ConnectivityOracle oracle(sys.network);
  StatusVector status(static_cast<std::size_t>(n), 1);
  auto check_cut = [&](const CutSet& cut) {
    for (int id : cut) status[id - 1] = 0;
    if (oracle.connected(status))
      report.violations.push_back("cut set " + describe(cut) + " does not disconnect the system");
    else
      for (int id : cut) {
        status[id - 1] = 1;
        if (!oracle.connected(status)) {
          report.violations.push_back("cut set " + describe(cut) +
                                      " is not minimal (still a cut without " +
                                      std::to_string(id) + ")");
          status[id - 1] = 0;
          break;
        }
        status[id - 1] = 0;
      }
    for (int id : cut) status[id - 1] = 1;
  };

  constexpr std::size_t kSpotChecks = 20'000;
  const std::size_t stride =
      usable.size() <= kSpotChecks || n <= kExhaustiveLimit ? 1 : usable.size() / kSpotChecks;
  for (std::size_t i = 0; i < usable.size(); i += stride) check_cut(*usable[i]);

  if (n <= kExhaustiveLimit) {
    report.exhaustive = true;
    std::vector<std::uint32_t> masks;
    for (const CutSet* cut : usable) {
      std::uint32_t m = 0;
      for (int id : *cut) m |= 1u << (id - 1);
      masks.push_back(m);
    }
    std::size_t uncovered = 0;
    std::string example;
    for (std::uint32_t failed = 0; failed < (1u << n); ++failed) {
      for (int i = 0; i < n; ++i) status[i] = (failed >> i) & 1u ? 0 : 1;
      if (oracle.connected(status)) continue;
      bool covered = std::any_of(masks.begin(), masks.end(),
                                 [failed](std::uint32_t m) { return (m & ~failed) == 0; });
      if (!covered) {
        if (uncovered++ == 0) {
          std::vector<int> ids;
          for (int i = 0; i < n; ++i)
            if ((failed >> i) & 1u) ids.push_back(i + 1);
          example = describe(CutSet(ids));
        }
      }
    }
    if (uncovered)
      report.violations.push_back("cut list is incomplete: " + std::to_string(uncovered) +
                                  " disconnecting failure sets (e.g. " + example +
                                  ") contain no listed cut set");
  }
  return report;
}

std::vector<std::uint32_t> index_of(std::span<const CutSet> superset,
                                    std::span<const CutSet> subset) {
  std::vector<std::uint32_t> out;
  out.reserve(subset.size());
  for (const auto& cut : subset) {
    auto it = std::lower_bound(superset.begin(), superset.end(), cut);
    if (it == superset.end() || *it != cut)
      throw ContractError("cut set " + describe(cut) + " is not part of the reference list");
    out.push_back(static_cast<std::uint32_t>(it - superset.begin()));
  }
  return out;
}

}  // namespace mlrel
