#include "fairhc/linkage.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "fairhc/rng.hpp"

namespace fairhc {

MetricMode objective_mode(ObjectiveKind objective) {
  return objective == ObjectiveKind::value ? MetricMode::distance : MetricMode::similarity;
}

LinkageResult average_linkage(const Instance& inst, MetricMode mode) {
  const std::size_t n = inst.size();
  LinkageResult out;
  for (std::size_t i = 0; i < n; ++i) out.tree.add_leaf(static_cast<PointId>(i), inst.weight(static_cast<PointId>(i)));
  if (n == 1) return out;

  std::vector<double> sum(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      sum[i * n + j] = sum[j * n + i] = inst.metric(mode, static_cast<PointId>(i), static_cast<PointId>(j));
  std::vector<double> mass(n);
  std::vector<std::int32_t> id(n);
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] = static_cast<double>(inst.weight(static_cast<PointId>(i)));
    id[i] = static_cast<std::int32_t>(i);
  }
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  const bool larger = mode == MetricMode::similarity;
  auto avg = [&](std::size_t x, std::size_t y) { return sum[x * n + y] / (mass[x] * mass[y]); };
  // is (v1, pair x1-y1) preferred over (v2, pair x2-y2)?
  auto better = [&](double v1, std::size_t x1, std::size_t y1, double v2, std::size_t x2, std::size_t y2) {
    if (v1 != v2) return larger ? v1 > v2 : v1 < v2;
    const auto a1 = std::minmax(id[x1], id[y1]);
    const auto a2 = std::minmax(id[x2], id[y2]);
    return a1 < a2;
  };

  struct Best {
    std::size_t partner;
    double value;
  };
  std::vector<Best> best(n, {n, 0.0});
  auto recompute = [&](std::size_t x) {
    Best b{n, 0.0};
    for (std::size_t y : active) {
      if (y == x) continue;
      const double v = avg(x, y);
      if (b.partner == n || better(v, x, y, b.value, x, b.partner)) b = {y, v};
    }
    best[x] = b;
  };
  for (std::size_t x : active) recompute(x);

  for (std::size_t iter = 0; iter + 1 < n; ++iter) {
    std::size_t a = n;
    for (std::size_t x : active)
      if (a == n || better(best[x].value, x, best[x].partner, best[a].value, a, best[a].partner)) a = x;
    std::size_t b = best[a].partner;
    const double score = best[a].value;
    if (id[b] < id[a]) std::swap(a, b);

    out.merges.push_back({iter, id[a], id[b], score});
    out.tree.add_internal({id[a], id[b]});

    // cluster a absorbs b
    for (std::size_t y : active) {
      if (y == a || y == b) continue;
      sum[a * n + y] += sum[b * n + y];
      sum[y * n + a] = sum[a * n + y];
    }
    mass[a] += mass[b];
    id[a] = static_cast<std::int32_t>(n + iter);
    active.erase(std::find(active.begin(), active.end(), b));

    for (std::size_t y : active) {
      if (y == a) continue;
      if (best[y].partner == a || best[y].partner == b) {
        recompute(y);
      } else {
        const double v = avg(y, a);
        if (better(v, y, a, best[y].value, y, best[y].partner)) best[y] = {a, v};
      }
    }
    recompute(a);
  }
  return out;
}

void write_merges_csv(std::ostream& out, std::span<const MergeStep> merges) {
  out << "iteration,left,right,avg\n";
  char buf[64];
  for (const auto& m : merges) {
    std::snprintf(buf, sizeof buf, "%.17g", m.avg);
    out << m.iteration << ',' << m.left << ',' << m.right << ',' << buf << '\n';
  }
}

namespace {

class DensestCutBuilder {
 public:
  DensestCutBuilder(const Instance& inst, double epsilon, std::uint64_t seed)
      : inst_(inst), factor_(1.0 + epsilon / static_cast<double>(inst.total_weight())), rng_(seed) {}

  NodeId build(const PointSet& x) {
    if (x.size() == 1) return tree_.add_leaf(x[0], inst_.weight(x[0]));
    auto [a, b] = split(x);
    const NodeId l = build(a);
    const NodeId r = build(b);
    return tree_.add_internal({l, r});
  }

  Hierarchy take() { return std::move(tree_); }

 private:
  std::pair<PointSet, PointSet> split(const PointSet& x) {
    const std::size_t k = x.size();
    if (k == 2) return {{x[0]}, {x[1]}};
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    shuffle_range(order.begin(), order.end(), rng_);
    std::vector<char> in_a(k, 0);
    for (std::size_t i = 0; i < k / 2; ++i) in_a[order[i]] = 1;

    std::vector<double> d(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) d[i * k + j] = d[j * k + i] = inst_.distance(x[i], x[j]);
    std::vector<double> to_a(k, 0.0), to_b(k, 0.0), m(k);
    double mass_a = 0.0, mass_b = 0.0, cross = 0.0;
    std::size_t size_a = 0;
    for (std::size_t i = 0; i < k; ++i) {
      m[i] = static_cast<double>(inst_.weight(x[i]));
      (in_a[i] ? mass_a : mass_b) += m[i];
      size_a += in_a[i];
      for (std::size_t j = 0; j < k; ++j) (in_a[j] ? to_a : to_b)[i] += d[i * k + j];
    }
    for (std::size_t i = 0; i < k; ++i)
      if (in_a[i]) cross += to_b[i];

    for (;;) {
      const double current = cross / (mass_a * mass_b);
      std::size_t move = k;
      double best = current;
      for (std::size_t i = 0; i < k; ++i) {
        const bool from_a = in_a[i];
        if ((from_a ? size_a : k - size_a) < 2) continue;
        const double next_cross = cross + (from_a ? to_a[i] - to_b[i] : to_b[i] - to_a[i]);
        const double na = from_a ? mass_a - m[i] : mass_a + m[i];
        const double nb = from_a ? mass_b + m[i] : mass_b - m[i];
        const double dens = next_cross / (na * nb);
        if (dens > best) {
          best = dens;
          move = i;
        }
      }
      if (move == k || best < factor_ * current) break;
      const bool from_a = in_a[move];
      cross += from_a ? to_a[move] - to_b[move] : to_b[move] - to_a[move];
      if (from_a) {
        mass_a -= m[move];
        mass_b += m[move];
        --size_a;
      } else {
        mass_a += m[move];
        mass_b -= m[move];
        ++size_a;
      }
      in_a[move] = !from_a;
      for (std::size_t j = 0; j < k; ++j) {
        const double dj = d[j * k + move];
        if (from_a) {
          to_a[j] -= dj;
          to_b[j] += dj;
        } else {
          to_b[j] -= dj;
          to_a[j] += dj;
        }
      }
    }
    std::pair<PointSet, PointSet> out;
    for (std::size_t i = 0; i < k; ++i) (in_a[i] ? out.first : out.second).push_back(x[i]);
    return out;
  }

  const Instance& inst_;
  double factor_;
  Rng rng_;
  Hierarchy tree_;
};

}  // namespace

Hierarchy densest_cut_tree(const Instance& inst, double epsilon, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("densest_cut_tree needs epsilon > 0");
  PointSet all(inst.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<PointId>(i);
  DensestCutBuilder builder(inst, epsilon, seed);
  builder.build(all);
  return builder.take();
}

TreeBuilder average_linkage_builder(MetricMode mode) {
  return [mode](const Instance& inst) { return average_linkage(inst, mode).tree; };
}

TreeBuilder densest_cut_builder(double epsilon, std::uint64_t seed) {
  return [epsilon, seed](const Instance& inst) { return densest_cut_tree(inst, epsilon, seed); };
}

namespace {

// Splices every over-cap internal node below the root into its parent, so the
// subtree of a fairlet keeps only clusters that respect the cap.
Hierarchy drop_unfair_nodes(const Hierarchy& h, std::span<const int> colors, Alpha alpha) {
  int c = 0;
  for (int x : colors) c = std::max(c, x + 1);
  const std::size_t nodes = h.node_count();
  std::vector<std::int64_t> counts(nodes * static_cast<std::size_t>(c), 0);
  std::vector<char> fair(nodes, 1);
  std::vector<std::vector<NodeId>> exposed(nodes);
  for (std::size_t u = 0; u < nodes; ++u) {
    const auto& nd = h.node(static_cast<NodeId>(u));
    if (nd.is_leaf()) {
      ++counts[u * c + colors[nd.point]];
      continue;
    }
    std::int64_t worst = 0;
    for (NodeId ch : nd.children) {
      for (int k = 0; k < c; ++k) counts[u * c + k] += counts[ch * c + k];
      if (fair[ch])
        exposed[u].push_back(ch);
      else
        exposed[u].insert(exposed[u].end(), exposed[ch].begin(), exposed[ch].end());
    }
    for (int k = 0; k < c; ++k) worst = std::max(worst, counts[u * c + k]);
    fair[u] = alpha.admits(worst, nd.leaf_count) ? 1 : 0;
  }
  Hierarchy out;
  std::vector<NodeId> mapped(nodes, -1);
  for (std::size_t u = 0; u < nodes; ++u) {
    const auto& nd = h.node(static_cast<NodeId>(u));
    if (nd.is_leaf()) {
      mapped[u] = out.add_leaf(nd.point, nd.weight);
    } else if (fair[u] || static_cast<NodeId>(u) == h.root()) {
      std::vector<NodeId> kids;
      for (NodeId ch : exposed[u]) kids.push_back(mapped[ch]);
      mapped[u] = out.add_internal(std::move(kids));
    }
  }
  out.set_root(mapped[h.root()]);
  return out;
}

}  // namespace

Hierarchy compose_fair_tree(const Instance& inst, const FairletDecomposition& fairlets, ObjectiveKind objective,
                            const TreeBuilder& builder) {
  if (fairlets.num_points() != inst.size()) throw std::invalid_argument("decomposition does not cover the instance");
  const MetricMode mode = objective_mode(objective);
  const Instance reduced = reduced_instance(inst, fairlets, mode);
  const Hierarchy top = builder ? builder(reduced) : average_linkage(reduced, mode).tree;
  top.validate(reduced.size());

  Hierarchy out;
  std::vector<NodeId> mapped(top.node_count(), -1);
  for (std::size_t u = 0; u < top.node_count(); ++u) {
    const auto& nd = top.node(static_cast<NodeId>(u));
    if (!nd.is_leaf()) {
      std::vector<NodeId> kids;
      for (NodeId c : nd.children) kids.push_back(mapped[c]);
      mapped[u] = out.add_internal(std::move(kids));
      continue;
    }
    const PointSet& y = fairlets[nd.point];
    if (y.size() == 1) {
      mapped[u] = out.add_leaf(y[0], inst.weight(y[0]));
      continue;
    }
    const Instance sub = inst.subset(y);
    const Hierarchy inner = drop_unfair_nodes(average_linkage(sub, mode).tree, sub.colors(), fairlets.alpha());
    mapped[u] = out.append_subtree(inner, inner.root(), y, inst.weights());
  }
  out.set_root(mapped[top.root()]);
  return out;
}

FairnessReport tree_fairness_check(const Hierarchy& tree, std::span<const int> colors, Alpha alpha) {
  int c = 0;
  for (int x : colors) c = std::max(c, x + 1);
  const std::size_t nodes = tree.node_count();
  std::vector<std::size_t> counts(nodes * static_cast<std::size_t>(c), 0);
  for (std::size_t u = 0; u < nodes; ++u) {
    const auto& nd = tree.node(static_cast<NodeId>(u));
    if (nd.is_leaf()) {
      ++counts[u * c + colors[nd.point]];
      continue;
    }
    for (NodeId ch : nd.children)
      for (int k = 0; k < c; ++k) counts[u * c + k] += counts[ch * c + k];
  }
  FairnessReport report;
  for (NodeId u : tree.bfs_order()) {
    const auto& nd = tree.node(u);
    if (nd.is_leaf()) continue;
    int worst = 0;
    for (int k = 1; k < c; ++k)
      if (counts[u * c + k] > counts[u * c + worst]) worst = k;
    const auto size = static_cast<std::int64_t>(nd.leaf_count);
    if (!alpha.admits(static_cast<std::int64_t>(counts[u * c + worst]), size)) {
      report.fair = false;
      report.violating_node = u;
      report.cluster_size = static_cast<std::size_t>(size);
      report.color = worst;
      report.color_count = counts[u * c + worst];
      return report;
    }
  }
  return report;
}

}  // namespace fairhc
