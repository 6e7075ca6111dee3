#include "fairhc/objectives.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>

namespace fairhc {

namespace {

template <class Factor>
double lca_sum(const Instance& inst, const Hierarchy& tree, MetricMode mode, Factor factor) {
  tree.validate(inst.size(), inst.weights());
  const LcaIndex index(tree);
  const std::size_t n = inst.size();
  std::vector<double> rows;
  rows.reserve(n);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    const auto a = static_cast<PointId>(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = static_cast<PointId>(j);
      row.push_back(inst.metric(mode, a, b) * factor(tree.node(index.lca_points(a, b))));
    }
    rows.push_back(pairwise_sum(row));
  }
  return pairwise_sum(rows);
}

}  // namespace

ObjectiveValue revenue(const Instance& inst, const Hierarchy& tree) {
  const double total = static_cast<double>(inst.total_weight());
  ObjectiveValue out{ObjectiveKind::revenue, 0.0, revenue_upper_bound(inst)};
  out.value = lca_sum(inst, tree, MetricMode::similarity,
                      [&](const HierarchyNode& u) { return total - static_cast<double>(u.weight); });
  return out;
}

ObjectiveValue value(const Instance& inst, const Hierarchy& tree) {
  ObjectiveValue out{ObjectiveKind::value, 0.0, value_upper_bound(inst)};
  out.value = lca_sum(inst, tree, MetricMode::distance,
                      [](const HierarchyNode& u) { return static_cast<double>(u.weight); });
  return out;
}

ObjectiveValue cost(const Instance& inst, const Hierarchy& tree) {
  ObjectiveValue out{ObjectiveKind::cost, 0.0, std::nullopt};
  out.value = lca_sum(inst, tree, MetricMode::similarity,
                      [](const HierarchyNode& u) { return static_cast<double>(u.leaf_count); });
  return out;
}

ObjectiveValue evaluate(ObjectiveKind kind, const Instance& inst, const Hierarchy& tree) {
  switch (kind) {
    case ObjectiveKind::revenue: return revenue(inst, tree);
    case ObjectiveKind::value: return value(inst, tree);
    case ObjectiveKind::cost: return cost(inst, tree);
    case ObjectiveKind::fairlet_phi: break;
  }
  throw std::invalid_argument("fairlet_phi is not a tree objective");
}

double revenue_upper_bound(const Instance& inst) {
  if (inst.size() < 2) return 0.0;
  // the two lightest points form the lightest pair
  auto w = inst.weights();
  std::partial_sort(w.begin(), w.begin() + 2, w.end());
  const double slack = static_cast<double>(inst.total_weight() - w[0] - w[1]);
  return slack * total_sum(inst, MetricMode::similarity);
}

double value_upper_bound(const Instance& inst) {
  return static_cast<double>(inst.total_weight()) * total_sum(inst, MetricMode::distance);
}

double fairlet_phi(const Instance& inst, std::span<const PointSet> parts) {
  std::vector<double> sums;
  sums.reserve(parts.size());
  for (const auto& y : parts) sums.push_back(self_sum(inst, y, MetricMode::distance));
  return pairwise_sum(sums);
}

BestTree brute_force_best(const Instance& inst, ObjectiveKind kind) {
  const std::size_t n = inst.size();
  if (n > kBruteForceLimit)
    throw std::invalid_argument("brute_force_best refuses n=" + std::to_string(n) + " (limit " +
                                std::to_string(kBruteForceLimit) + ")");
  if (kind == ObjectiveKind::fairlet_phi) throw std::invalid_argument("fairlet_phi is not a tree objective");
  const bool maximize = kind != ObjectiveKind::cost;
  const MetricMode mode = kind == ObjectiveKind::value ? MetricMode::distance : MetricMode::similarity;
  const double total = static_cast<double>(inst.total_weight());

  // Nodes 0..n-1 are leaves, n.. are internal; parent = -1 at the root.
  const std::size_t cap = 2 * n - 1;
  std::vector<int> left(cap, -1), right(cap, -1), parent(cap, -1);
  std::vector<std::vector<int>> under(cap);
  int root = 0;

  std::vector<int> best_left, best_right;
  int best_root = 0;
  double best = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();

  auto score = [&] {
    double acc = 0.0;
    std::function<void(int)> collect = [&](int u) {
      under[u].clear();
      if (u < static_cast<int>(n)) {
        under[u].push_back(u);
        return;
      }
      collect(left[u]);
      collect(right[u]);
      under[u] = under[left[u]];
      under[u].insert(under[u].end(), under[right[u]].begin(), under[right[u]].end());
      double w = 0.0;
      for (int p : under[u]) w += static_cast<double>(inst.weight(p));
      double factor = 0.0;
      switch (kind) {
        case ObjectiveKind::revenue: factor = total - w; break;
        case ObjectiveKind::value: factor = w; break;
        default: factor = static_cast<double>(under[u].size()); break;
      }
      for (int a : under[left[u]])
        for (int b : under[right[u]]) acc += inst.metric(mode, a, b) * factor;
    };
    collect(root);
    return acc;
  };

  std::function<void(int)> grow = [&](int k) {
    // k leaves placed (0..k-1), internal nodes n..n+k-2 in use
    if (k == static_cast<int>(n)) {
      const double v = score();
      if (maximize ? v > best : v < best) {
        best = v;
        best_left = left;
        best_right = right;
        best_root = root;
      }
      return;
    }
    const int y = static_cast<int>(n) + k - 1;  // new internal node
    std::vector<int> targets;
    for (int x = 0; x < k; ++x) targets.push_back(x);
    for (int x = static_cast<int>(n); x < y; ++x) targets.push_back(x);
    for (int x : targets) {
      // put y above x, with children (x, leaf k)
      const int px = parent[x];
      left[y] = x;
      right[y] = k;
      parent[y] = px;
      parent[x] = y;
      parent[k] = y;
      if (px == -1) {
        root = y;
      } else if (left[px] == x) {
        left[px] = y;
      } else {
        right[px] = y;
      }
      grow(k + 1);
      if (px == -1) {
        root = x;
      } else if (left[px] == y) {
        left[px] = x;
      } else {
        right[px] = x;
      }
      parent[x] = px;
      parent[k] = -1;
      parent[y] = -1;
      left[y] = right[y] = -1;
    }
  };

  BestTree out;
  if (n == 1) {
    out.tree.add_leaf(0, inst.weight(0));
    out.objective = evaluate(kind, inst, out.tree);
    return out;
  }
  root = 0;
  grow(1);

  // convert to Hierarchy
  std::function<NodeId(int)> build = [&](int u) -> NodeId {
    if (u < static_cast<int>(n)) return out.tree.add_leaf(u, inst.weight(u));
    const NodeId a = build(best_left[u]);
    const NodeId b = build(best_right[u]);
    return out.tree.add_internal({a, b});
  };
  build(best_root);
  out.objective = evaluate(kind, inst, out.tree);
  return out;
}

}  // namespace fairhc
