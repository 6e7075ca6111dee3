#include "oracle.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace oracle {

using fairhc::MetricMode;
using fairhc::NodeId;
using fairhc::ObjectiveKind;
using fairhc::PointId;

double naive_objective(const Instance& inst, const Hierarchy& tree, ObjectiveKind kind) {
  const std::size_t nodes = tree.node_count();
  std::vector<std::int64_t> weight(nodes, 0), leaves(nodes, 0);
  for (std::size_t p = 0; p < inst.size(); ++p) {
    for (NodeId u = tree.leaf_of(static_cast<PointId>(p)); u != -1; u = tree.node(u).parent) {
      weight[u] += inst.weight(static_cast<PointId>(p));
      leaves[u] += 1;
    }
  }
  const double mv = static_cast<double>(inst.total_weight());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    std::vector<char> above(nodes, 0);
    for (NodeId u = tree.leaf_of(static_cast<PointId>(i)); u != -1; u = tree.node(u).parent) above[u] = 1;
    for (std::size_t j = i + 1; j < inst.size(); ++j) {
      NodeId u = tree.leaf_of(static_cast<PointId>(j));
      while (!above[u]) u = tree.node(u).parent;
      const auto a = static_cast<PointId>(i), b = static_cast<PointId>(j);
      switch (kind) {
        case ObjectiveKind::revenue:
          acc += inst.similarity(a, b) * (mv - static_cast<double>(weight[u]));
          break;
        case ObjectiveKind::value:
          acc += inst.distance(a, b) * static_cast<double>(weight[u]);
          break;
        case ObjectiveKind::cost:
          acc += inst.similarity(a, b) * static_cast<double>(leaves[u]);
          break;
        default:
          throw std::invalid_argument("naive_objective: tree objectives only");
      }
    }
  }
  return static_cast<double>(acc);
}

double naive_phi(const Instance& inst, std::span<const PointSet> parts) {
  long double acc = 0.0L;
  for (const auto& y : parts)
    for (std::size_t a = 0; a < y.size(); ++a)
      for (std::size_t b = a + 1; b < y.size(); ++b) acc += inst.distance(y[a], y[b]);
  return static_cast<double>(acc);
}

double naive_total(const Instance& inst, MetricMode mode) {
  long double acc = 0.0L;
  for (std::size_t a = 0; a < inst.size(); ++a)
    for (std::size_t b = a + 1; b < inst.size(); ++b)
      acc += inst.metric(mode, static_cast<PointId>(a), static_cast<PointId>(b));
  return static_cast<double>(acc);
}

double optimal_objective(const Instance& inst, ObjectiveKind kind) {
  const std::size_t n = inst.size();
  if (n > 12) throw std::invalid_argument("optimal_objective: n too large");
  const std::uint32_t full = (1u << n) - 1;
  const MetricMode mode = kind == ObjectiveKind::value ? MetricMode::distance : MetricMode::similarity;
  const bool maximize = kind != ObjectiveKind::cost;
  const double mv = static_cast<double>(inst.total_weight());
  std::vector<double> best(full + 1, 0.0), mass(full + 1, 0.0);
  for (std::uint32_t s = 1; s <= full; ++s) {
    const int low = __builtin_ctz(s);
    mass[s] = mass[s & (s - 1)] + static_cast<double>(inst.weight(low));
  }
  auto cross = [&](std::uint32_t a, std::uint32_t b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (a >> i & 1u)
        for (std::size_t j = 0; j < n; ++j)
          if (b >> j & 1u) acc += inst.metric(mode, static_cast<PointId>(i), static_cast<PointId>(j));
    return acc;
  };
  for (std::uint32_t s = 1; s <= full; ++s) {
    if ((s & (s - 1)) == 0) continue;  // singletons score 0
    const int top = 31 - __builtin_clz(s);
    double pick = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    // a runs over subsets containing the highest element, so each split appears once
    for (std::uint32_t a = (s - 1) & s; a > 0; a = (a - 1) & s) {
      if (!(a >> top & 1u)) continue;
      const std::uint32_t b = s ^ a;
      if (b == 0) continue;
      double here = cross(a, b);
      if (kind == ObjectiveKind::revenue) here *= mv - mass[s];
      if (kind == ObjectiveKind::value) here *= mass[s];
      if (kind == ObjectiveKind::cost) here *= static_cast<double>(__builtin_popcount(s));
      const double total = best[a] + best[b] + here;
      pick = maximize ? std::max(pick, total) : std::min(pick, total);
    }
    best[s] = pick;
  }
  return best[full];
}

std::vector<Merge> naive_average_linkage(const Instance& inst, MetricMode mode) {
  const std::size_t n = inst.size();
  std::map<std::int32_t, PointSet> live;
  for (std::size_t i = 0; i < n; ++i) live[static_cast<std::int32_t>(i)] = {static_cast<PointId>(i)};
  std::vector<Merge> out;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    bool found = false;
    Merge best{};
    for (auto a = live.begin(); a != live.end(); ++a) {
      for (auto b = std::next(a); b != live.end(); ++b) {
        double sum = 0.0, ma = 0.0, mb = 0.0;
        for (PointId p : a->second) ma += static_cast<double>(inst.weight(p));
        for (PointId q : b->second) mb += static_cast<double>(inst.weight(q));
        for (PointId p : a->second)
          for (PointId q : b->second) sum += inst.metric(mode, p, q);
        const double avg = sum / (ma * mb);
        const bool better = mode == MetricMode::similarity ? avg > best.avg : avg < best.avg;
        // map iteration is already lexicographic in (a, b), so strict improvement keeps the first tie
        if (!found || better) {
          best = {a->first, b->first, avg};
          found = true;
        }
      }
    }
    PointSet merged = live[best.left];
    merged.insert(merged.end(), live[best.right].begin(), live[best.right].end());
    live.erase(best.left);
    live.erase(best.right);
    live[static_cast<std::int32_t>(n + step)] = std::move(merged);
    out.push_back(best);
  }
  return out;
}

double naive_removal_weight(const Instance& inst, const PointSet& cluster, const PointSet& removed) {
  double acc = 0.0;
  for (std::size_t i = 0; i < removed.size(); ++i) {
    for (PointId q : cluster) {
      const bool in_removed = std::find(removed.begin(), removed.end(), q) != removed.end();
      if (q == removed[i]) continue;
      if (in_removed) {
        // count pairs inside S once
        const auto pos = static_cast<std::size_t>(std::find(removed.begin(), removed.end(), q) - removed.begin());
        if (pos > i) acc += inst.similarity(removed[i], q);
      } else {
        acc += inst.similarity(removed[i], q);
      }
    }
  }
  return acc;
}

std::vector<int> random_colors(fairhc::Rng& rng, std::span<const std::size_t> counts) {
  std::vector<int> colors;
  for (std::size_t k = 0; k < counts.size(); ++k) colors.insert(colors.end(), counts[k], static_cast<int>(k));
  fairhc::shuffle_range(colors.begin(), colors.end(), rng);
  return colors;
}

namespace {
std::vector<std::int64_t> random_weights(fairhc::Rng& rng, std::size_t n, bool weighted) {
  std::vector<std::int64_t> w(n, 1);
  if (weighted)
    for (auto& x : w) x = 1 + static_cast<std::int64_t>(fairhc::uniform_index(rng, 4));
  return w;
}

std::vector<int> cyclic_colors(fairhc::Rng& rng, std::size_t n, int colors) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(colors), n / static_cast<std::size_t>(colors));
  for (std::size_t k = 0; k < n % static_cast<std::size_t>(colors); ++k) ++counts[k];
  return random_colors(rng, counts);
}
}  // namespace

Instance random_euclidean(fairhc::Rng& rng, std::span<const std::size_t> color_counts, std::size_t dim,
                          bool weighted) {
  auto colors = random_colors(rng, color_counts);
  const std::size_t n = colors.size();
  std::vector<double> coords(n * dim);
  for (auto& x : coords) x = 10.0 * fairhc::uniform_real(rng);
  auto w = random_weights(rng, n, weighted);
  return Instance::from_coords(std::move(coords), dim, std::move(colors), std::move(w));
}

Instance random_matrix(fairhc::Rng& rng, std::size_t n, int colors, bool weighted) {
  fairhc::CondensedMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, 0.5 + 9.5 * fairhc::uniform_real(rng));
  auto c = cyclic_colors(rng, n, colors);
  auto w = random_weights(rng, n, weighted);
  return Instance::from_distances(std::move(d), std::move(c), std::move(w));
}

Instance random_similarity(fairhc::Rng& rng, std::size_t n, int colors, bool weighted) {
  fairhc::CondensedMatrix s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s.set(i, j, fairhc::uniform_real(rng));
  auto c = cyclic_colors(rng, n, colors);
  auto w = random_weights(rng, n, weighted);
  return Instance::from_similarities(std::move(s), std::move(c), std::move(w));
}

Hierarchy random_tree(fairhc::Rng& rng, std::size_t n, std::span<const std::int64_t> weights) {
  Hierarchy h;
  std::vector<NodeId> pool;
  for (std::size_t p = 0; p < n; ++p)
    pool.push_back(h.add_leaf(static_cast<PointId>(p), weights.empty() ? 1 : weights[p]));
  while (pool.size() > 1) {
    const std::size_t k = std::min<std::size_t>(pool.size(), 2 + fairhc::uniform_index(rng, 2));
    fairhc::shuffle_range(pool.begin(), pool.end(), rng);
    std::vector<NodeId> kids(pool.end() - static_cast<std::ptrdiff_t>(k), pool.end());
    pool.resize(pool.size() - k);
    pool.push_back(h.add_internal(std::move(kids)));
  }
  return h;
}

Instance four_point() {
  fairhc::CondensedMatrix d(4);
  d.set(0, 1, 4);
  d.set(0, 2, 1);
  d.set(0, 3, 2);
  d.set(1, 2, 2);
  d.set(1, 3, 1);
  d.set(2, 3, 4);
  return Instance::from_distances(std::move(d), {0, 0, 1, 1});
}

}  // namespace oracle
