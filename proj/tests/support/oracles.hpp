#pragma once

// Reference computations used only by the tests. None of them call into the
// library's enumeration or estimation code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "mlrel/system.hpp"

namespace oracle {

/// Source-to-sink reachability by plain DFS; bit i of `failed` marks
/// component i + 1 as failed.
inline bool connected(const mlrel::Network& net, std::uint64_t failed) {
  const int nodes = net.component_count + 2;
  std::vector<std::vector<int>> out(nodes);
  for (const auto& [a, b] : net.edges) out[a].push_back(b);
  std::vector<char> seen(nodes, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == nodes - 1) return true;
    for (int w : out[v]) {
      if (seen[w]) continue;
      if (w >= 1 && w <= net.component_count && ((failed >> (w - 1)) & 1)) continue;
      seen[w] = 1;
      stack.push_back(w);
    }
  }
  return false;
}

/// Minimal disconnecting component sets, by checking every subset.
inline std::vector<std::vector<int>> brute_force_min_cuts(const mlrel::Network& net) {
  const int n = net.component_count;
  const std::uint64_t full = std::uint64_t{1} << n;
  std::vector<char> cut(full, 0);
  for (std::uint64_t m = 0; m < full; ++m) cut[m] = !connected(net, m);
  std::vector<std::vector<int>> out;
  for (std::uint64_t m = 1; m < full; ++m) {
    if (!cut[m]) continue;
    bool minimal = true;
    for (int i = 0; i < n && minimal; ++i)
      if (((m >> i) & 1) && cut[m & ~(std::uint64_t{1} << i)]) minimal = false;
    if (!minimal) continue;
    std::vector<int> ids;
    for (int i = 0; i < n; ++i)
      if ((m >> i) & 1) ids.push_back(i + 1);
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

/// E[max] of independent exponentials with the given rates (bitmask over
/// components), by inclusion-exclusion.
inline double expected_max(std::uint64_t mask, const std::vector<double>& rates) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < rates.size(); ++i)
    if ((mask >> i) & 1) ids.push_back(static_cast<int>(i));
  double total = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << ids.size();
  for (std::uint64_t s = 1; s < subsets; ++s) {
    double lambda = 0.0;
    int k = 0;
    for (std::size_t j = 0; j < ids.size(); ++j)
      if ((s >> j) & 1) {
        lambda += rates[ids[j]];
        ++k;
      }
    total += (k % 2 ? 1.0 : -1.0) / lambda;
  }
  return total;
}

/// Expected lifetime of a system given by its minimal cut sets, with
/// independent Exponential(rates[i]) component i + 1:
/// E[T] = sum over nonempty cut families S of (-1)^{|S|+1} E[max over their union].
inline double expected_lifetime_exponential(const std::vector<std::vector<int>>& cuts,
                                            const std::vector<double>& rates) {
  std::map<std::uint64_t, double> memo;
  double total = 0.0;
  const std::uint64_t families = std::uint64_t{1} << cuts.size();
  for (std::uint64_t f = 1; f < families; ++f) {
    std::uint64_t mask = 0;
    int k = 0;
    for (std::size_t c = 0; c < cuts.size(); ++c)
      if ((f >> c) & 1) {
        ++k;
        for (int id : cuts[c]) mask |= std::uint64_t{1} << (id - 1);
      }
    auto it = memo.find(mask);
    if (it == memo.end()) it = memo.emplace(mask, expected_max(mask, rates)).first;
    total += (k % 2 ? 1.0 : -1.0) * it->second;
  }
  return total;
}

inline double harmonic(int m) {
  double h = 0.0;
  for (int i = 1; i <= m; ++i) h += 1.0 / i;
  return h;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Cut-set count of a series-parallel system rebuilt from its move log:
/// a series block has the sum of its parts' counts, a parallel block the
/// product.
inline std::uint64_t series_parallel_cut_count(const std::vector<mlrel::GrowthMove>& log) {
  struct Node {
    int leaf = 0;
    char kind = 'L';
    std::shared_ptr<Node> a, b;
  };
  std::map<int, std::shared_ptr<Node>> leaves;
  auto root = std::make_shared<Node>();
  root->leaf = 1;
  leaves[1] = root;
  for (const auto& m : log) {
    const auto node = leaves.at(m.target);
    node->kind = m.kind == mlrel::MoveKind::kSeries ? 'S' : 'P';
    node->a = std::make_shared<Node>();
    node->a->leaf = m.target;
    node->b = std::make_shared<Node>();
    node->b->leaf = m.added;
    leaves[m.target] = node->a;
    leaves[m.added] = node->b;
  }
  auto count = [](auto&& self, const Node& n) -> std::uint64_t {
    if (n.kind == 'L') return 1;
    const auto x = self(self, *n.a), y = self(self, *n.b);
    return n.kind == 'S' ? x + y : x * y;
  };
  return count(count, *root);
}

}  // namespace oracle
