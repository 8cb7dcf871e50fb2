#include "mlrel/generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlrel/errors.hpp"

namespace mlrel {

void GrowthConfig::validate() const {
  if (target_components < 1) throw ParameterError("target component count must be >= 1");
  if (p_series < 0 || p_parallel < 0 || p_bridge < 0)
    throw ParameterError("move probabilities must be nonnegative");
  if (std::abs(p_series + p_parallel + p_bridge - 1.0) > 1e-12)
    throw ParameterError("move probabilities must sum to 1");
  if (!(shape > 0.0)) throw ParameterError("shape must be positive");
  if (!(scale_min > 0.0) || !(scale_max >= scale_min))
    throw ParameterError("scale interval must satisfy 0 < min <= max");
  if (repair_rate && !(*repair_rate >= 0.0))
    throw ParameterError("repair rate must be nonnegative");
}

namespace {

// Working representation during growth: components 1..n, source 0 and the
// sink as kLoggedSink so that ids stay stable while components are added.
struct Growth {
  int n = 1;
  std::vector<std::pair<int, int>> edges{{0, 1}, {1, kLoggedSink}};

  void normalize() {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }

  void apply_series(int v, int added) {
    for (auto& e : edges)
      if (e.first == v) e.first = added;
    edges.emplace_back(v, added);
    n = added;
    normalize();
  }

  void apply_parallel(int v, int added) {
    std::vector<std::pair<int, int>> extra;
    for (auto [a, b] : edges) {
      if (a == v) extra.emplace_back(added, b);
      if (b == v) extra.emplace_back(a, added);
    }
    edges.insert(edges.end(), extra.begin(), extra.end());
    n = added;
    normalize();
  }

  void apply_bridge(std::pair<int, int> e1, std::pair<int, int> e2, int added) {
    edges.emplace_back(e1.first, added);
    edges.emplace_back(e2.first, added);
    edges.emplace_back(added, e1.second);
    edges.emplace_back(added, e2.second);
    n = added;
    normalize();
  }

  int index(int node) const { return node == kLoggedSink ? n + 1 : node; }

  // reach[u] has bit v set when v is reachable from u (including u itself).
  std::vector<std::vector<std::uint64_t>> reachability() const {
    const int nodes = n + 2;
    const std::size_t words = (static_cast<std::size_t>(nodes) + 63) / 64;
    std::vector<std::vector<int>> out(nodes);
    std::vector<int> indeg(nodes, 0);
    for (auto [a, b] : edges) {
      out[index(a)].push_back(index(b));
      ++indeg[index(b)];
    }
    std::vector<int> topo;
    for (int v = 0; v < nodes; ++v)
      if (indeg[v] == 0) topo.push_back(v);
    for (std::size_t h = 0; h < topo.size(); ++h)
      for (int b : out[topo[h]])
        if (--indeg[b] == 0) topo.push_back(b);
    std::vector<std::vector<std::uint64_t>> reach(nodes, std::vector<std::uint64_t>(words, 0));
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      int v = *it;
      reach[v][v >> 6] |= std::uint64_t{1} << (v & 63);
      for (int b : out[v])
        for (std::size_t w = 0; w < words; ++w) reach[v][w] |= reach[b][w];
    }
    return reach;
  }

  Network network() const {
    Network net;
    net.component_count = n;
    for (auto [a, b] : edges) net.edges.emplace_back(index(a), index(b));
    std::sort(net.edges.begin(), net.edges.end());
    return net;
  }
};

// Unordered pairs of distinct edges whose bridge keeps the graph acyclic.
std::vector<std::pair<std::size_t, std::size_t>> bridge_candidates(const Growth& g) {
  const auto reach = g.reachability();
  auto reaches = [&](int from, int to) {
    int f = g.index(from), t = g.index(to);
    return (reach[f][t >> 6] >> (t & 63)) & 1u;
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    for (std::size_t j = i + 1; j < g.edges.size(); ++j) {
      auto [a, b] = g.edges[i];
      auto [c, d] = g.edges[j];
      if (reaches(b, c) || reaches(d, a)) continue;
      out.emplace_back(i, j);
    }
  return out;
}

Component make_component(const GrowthConfig& cfg, RngStream& rng) {
  Component c{Distribution::weibull(cfg.shape, rng.uniform(cfg.scale_min, cfg.scale_max)),
              std::nullopt};
  if (cfg.repair_rate) c.repair = Distribution::exponential(*cfg.repair_rate);
  return c;
}

System snapshot(const Growth& g, const std::vector<Component>& comps,
                const std::vector<GrowthMove>& log, std::size_t cap) {
  System sys;
  sys.network = g.network();
  sys.components = comps;
  sys.move_log = log;
  sys.cutsets = enumerate_min_cutsets(sys.network, cap);
  return sys;
}

}  // namespace

std::vector<System> grow_nested(const GrowthConfig& cfg, std::span<const int> sizes,
                                RngStream& rng) {
  cfg.validate();
  if (sizes.empty()) throw ParameterError("at least one system size is required");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw ParameterError("system sizes must be >= 1");
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw ParameterError("system sizes must be strictly increasing");
  }
  if (cfg.p_series + cfg.p_parallel == 0.0 && sizes.back() > 1) {
    // Only bridges: the one-component system admits none, so growth would stall.
    throw ParameterError("bridge-only growth cannot start from a single component");
  }

  Growth g;
  std::vector<Component> comps{make_component(cfg, rng)};
  std::vector<GrowthMove> log;
  std::vector<System> out;
  std::size_t next_size = 0;
  if (sizes[0] == 1) out.push_back(snapshot(g, comps, log, cfg.cutset_cap)), ++next_size;

  while (next_size < sizes.size()) {
    const double u = rng.uniform_open();
    const int added = g.n + 1;
    GrowthMove move;
    move.added = added;
    if (u < cfg.p_series + cfg.p_parallel) {
      move.kind = u < cfg.p_series ? MoveKind::kSeries : MoveKind::kParallel;
      move.target = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(g.n)));
      if (move.kind == MoveKind::kSeries)
        g.apply_series(move.target, added);
      else
        g.apply_parallel(move.target, added);
    } else {
      const auto candidates = bridge_candidates(g);
      if (candidates.empty()) continue;  // resample the move
      auto [i, j] = candidates[rng.below(candidates.size())];
      move.kind = MoveKind::kBridge;
      move.edge_a = g.edges[i];
      move.edge_b = g.edges[j];
      g.apply_bridge(move.edge_a, move.edge_b, added);
    }
    log.push_back(move);
    comps.push_back(make_component(cfg, rng));
    if (g.n == sizes[next_size]) {
      out.push_back(snapshot(g, comps, log, cfg.cutset_cap));
      ++next_size;
    }
  }
  return out;
}

std::vector<System> grow_nested(const GrowthConfig& cfg, std::span<const int> sizes) {
  RngStream rng(cfg.seed, make_stream_id(StreamPurpose::kGenerator, 0, 0));
  return grow_nested(cfg, sizes, rng);
}

System grow(const GrowthConfig& cfg, RngStream& rng) {
  const int size = cfg.target_components;
  return std::move(grow_nested(cfg, std::span<const int>(&size, 1), rng).front());
}

System grow(const GrowthConfig& cfg) {
  RngStream rng(cfg.seed, make_stream_id(StreamPurpose::kGenerator, 0, 0));
  return grow(cfg, rng);
}

Network replay_moves(std::span<const GrowthMove> moves) {
  Growth g;
  for (const auto& m : moves) {
    if (m.added != g.n + 1)
      throw StructureError("move log adds component " + std::to_string(m.added) +
                           " but the next id is " + std::to_string(g.n + 1));
    switch (m.kind) {
      case MoveKind::kSeries:
      case MoveKind::kParallel:
        if (m.target < 1 || m.target > g.n)
          throw StructureError("move log targets unknown component " +
                               std::to_string(m.target));
        if (m.kind == MoveKind::kSeries)
          g.apply_series(m.target, m.added);
        else
          g.apply_parallel(m.target, m.added);
        break;
      case MoveKind::kBridge: {
        auto known = [&](std::pair<int, int> e) {
          return std::binary_search(g.edges.begin(), g.edges.end(), e);
        };
        if (!known(m.edge_a) || !known(m.edge_b))
          throw StructureError("move log bridges an edge that does not exist");
        g.apply_bridge(m.edge_a, m.edge_b, m.added);
        break;
      }
    }
  }
  Network net = g.network();
  validate_network(net);
  return net;
}

}  // namespace mlrel
