#include "doctest.h"

#include <cmath>
#include <numeric>
#include <set>

#include "fairhc/costfair.hpp"
#include "fairhc/objectives.hpp"
#include "oracle.hpp"

using namespace fairhc;

namespace {

std::set<PointSet> as_set(Clustering c) {
  std::set<PointSet> out;
  for (auto& x : c) {
    std::sort(x.begin(), x.end());
    out.insert(x);
  }
  return out;
}

std::vector<std::size_t> sizes_of(const Clustering& c) {
  std::vector<std::size_t> s;
  for (const auto& x : c) s.push_back(x.size());
  return s;
}

// Clusters of consecutive ids with the given sizes.
Clustering blocks(std::initializer_list<std::size_t> sizes) {
  Clustering out;
  PointId next = 0;
  for (auto s : sizes) {
    PointSet c;
    for (std::size_t i = 0; i < s; ++i) c.push_back(next++);
    out.push_back(c);
  }
  return out;
}

Instance balanced(Rng& rng, std::size_t half, std::size_t dim = 2) {
  const std::size_t counts[] = {half, half};
  return oracle::random_euclidean(rng, counts, dim);
}

bool is_partition(const Clustering& c, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& x : c)
    for (PointId p : x) {
      if (p < 0 || static_cast<std::size_t>(p) >= n) return false;
      ++seen[p];
    }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

// Red/blue instance whose clusters have exactly the given (red, blue) counts.
struct Layout {
  std::vector<int> colors;
  Clustering clusters;
};
Layout layout(std::initializer_list<std::pair<int, int>> shape) {
  Layout l;
  PointId next = 0;
  for (auto [r, b] : shape) {
    PointSet c;
    for (int i = 0; i < r; ++i, ++next) {
      c.push_back(next);
      l.colors.push_back(kRed);
    }
    for (int i = 0; i < b; ++i, ++next) {
      c.push_back(next);
      l.colors.push_back(kBlue);
    }
    l.clusters.push_back(c);
  }
  return l;
}

}  // namespace

TEST_CASE("cost params") {
  CostParams p;
  CHECK_FALSE(p.strict_regime());
  CHECK(p.round_cap() == 256);
  CHECK(p.removal_cap() == 771);
  CHECK(p.isolated_quota() == 8);
  const auto d = CostParams::defaults(1000);
  CHECK(d.t == static_cast<int>(std::ceil(std::sqrt(1000.0) * std::pow(std::log(1000.0), 0.75))));
  CHECK(d.ell == static_cast<int>(std::ceil(std::cbrt(1000.0) * std::sqrt(std::log(1000.0)))));
  CostParams big;
  big.t = 1000;
  big.ell = 500;
  CHECK(big.strict_regime());
}

TEST_CASE("unfair tree is a binary hierarchy over V") {
  Rng rng(1);
  const auto inst = balanced(rng, 2);
  const auto tree = unfair_tree(inst);
  tree.validate(4);
  CHECK(tree.internal_count() == 3);
}

TEST_CASE("t-maximal extraction") {
  Hierarchy cat;
  std::vector<NodeId> leaf;
  for (PointId p = 0; p < 5; ++p) leaf.push_back(cat.add_leaf(p));
  // a..e = 0..4, tree ((((e,d),c),b),a)
  const auto ed = cat.add_internal({leaf[4], leaf[3]});
  const auto edc = cat.add_internal({ed, leaf[2]});
  const auto edcb = cat.add_internal({edc, leaf[1]});
  cat.add_internal({edcb, leaf[0]});
  CHECK(as_set(extract_t_maximal(cat, 2)) == std::set<PointSet>{{3, 4}, {2}, {1}, {0}});
  CHECK(as_set(extract_t_maximal(cat, 5)) == std::set<PointSet>{{0, 1, 2, 3, 4}});
  CHECK(extract_t_maximal(cat, 1).size() == 5);
  CHECK_THROWS(extract_t_maximal(cat, 0));
}

TEST_CASE("t-maximal extraction partitions V and is maximal (property)") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    const auto tree = oracle::random_tree(rng, n);
    const int t = 1 + static_cast<int>(uniform_index(rng, 10));
    const auto c = extract_t_maximal(tree, t);
    CHECK(is_partition(c, n));
    for (const auto& x : c) {
      CHECK(x.size() <= static_cast<std::size_t>(t));
      // the cluster is a whole subtree whose parent is too big
      NodeId u = tree.leaf_of(x[0]);
      while (tree.node(u).leaf_count < static_cast<std::int32_t>(x.size())) u = tree.node(u).parent;
      CHECK(tree.node(u).leaf_count == static_cast<std::int32_t>(x.size()));
      if (tree.node(u).parent != -1) CHECK(tree.node(tree.node(u).parent).leaf_count > t);
    }
  }
}

TEST_CASE("combining into bands") {
  CHECK(sizes_of(combine_to_bands(blocks({1, 1, 1}), 2)) == std::vector<std::size_t>{3});
  CHECK(sizes_of(combine_to_bands(blocks({4, 5, 3}), 3)) == std::vector<std::size_t>{4, 5, 3});
  auto seven = sizes_of(combine_to_bands(blocks({1, 1, 1, 1, 1, 1, 1}), 3));
  std::sort(seven.begin(), seven.end());
  CHECK(seven == std::vector<std::size_t>{3, 4});
}

TEST_CASE("bands stay within [t, 3t) (property)") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int t = 1 + static_cast<int>(uniform_index(rng, 8));
    Clustering c;
    PointId next = 0;
    const std::size_t k = 1 + uniform_index(rng, 20);
    for (std::size_t i = 0; i < k; ++i) {
      PointSet x(1 + uniform_index(rng, static_cast<std::uint64_t>(t)));
      for (auto& p : x) p = next++;
      c.push_back(x);
    }
    if (next < t) continue;
    const auto out = combine_to_bands(c, t);
    CHECK(is_partition(out, static_cast<std::size_t>(next)));
    for (const auto& x : out) {
      CHECK(x.size() >= static_cast<std::size_t>(t));
      CHECK(x.size() < static_cast<std::size_t>(3 * t));
    }
  }
}

TEST_CASE("excess") {
  const auto l = layout({{3, 1}, {2, 2}, {0, 4}});
  const auto e = compute_excess(l.clusters, l.colors);
  CHECK(e.ex == std::vector<std::int64_t>{2, 0, 4});
  CHECK(e.exc == std::vector<int>{kRed, kRed, kBlue});
}

TEST_CASE("clustering graph examples") {
  {
    const auto l = layout({{5, 0}, {0, 5}});
    const auto e = compute_excess(l.clusters, l.colors);
    const auto g = build_clustering_graph(l.clusters, l.colors, e, 3);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].matches == 5);
    CHECK(g.unmatched == std::vector<std::int64_t>{0, 0});
    for (auto m : g.matching) CHECK(m >= 0);
  }
  {
    const auto l = layout({{4, 0}, {5, 1}, {3, 0}});
    const auto e = compute_excess(l.clusters, l.colors);
    const auto g = build_clustering_graph(l.clusters, l.colors, e, 3);
    CHECK(g.edges.empty());
    CHECK(g.num_components() == 3);
  }
  {
    const auto l = layout({{7, 0}, {0, 4}, {0, 3}});
    const auto e = compute_excess(l.clusters, l.colors);
    const auto g = build_clustering_graph(l.clusters, l.colors, e, 3);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0].parent == 0);
    CHECK(g.edges[0].child == 1);
    CHECK(g.edges[1].parent == 0);
    CHECK(g.edges[1].child == 2);
    CHECK(g.edges[0].matches + g.edges[1].matches == 7);
    CHECK(std::count_if(g.matching.begin(), g.matching.end(), [](PointId m) { return m >= 0; }) == 14);
  }
}

TEST_CASE("clustering graph invariants (property)") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + uniform_index(rng, 25);
    std::vector<int> colors;
    Clustering clusters;
    PointId next = 0;
    for (std::size_t c = 0; c < k; ++c) {
      PointSet x;
      const std::size_t size = 1 + uniform_index(rng, 20);
      const double bias = uniform_real(rng);
      for (std::size_t i = 0; i < size; ++i, ++next) {
        x.push_back(next);
        colors.push_back(uniform_real(rng) < bias ? kRed : kBlue);
      }
      clusters.push_back(x);
    }
    const int ell = 1 + static_cast<int>(uniform_index(rng, 6));
    const auto e = compute_excess(clusters, colors);
    const auto g = build_clustering_graph(clusters, colors, e, ell);
    CHECK(g.is_forest());
    CHECK(g.max_component_size() <= static_cast<std::size_t>(std::max(ell, 1)));
    CHECK(is_red_blue_matching(g.matching, colors));
    for (const auto& edge : g.edges) {
      CHECK(edge.matches >= ell);
      CHECK(g.excess_color[edge.parent] != g.excess_color[edge.child]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::int64_t unmatched = 0;
      for (PointId p : clusters[c]) unmatched += g.matching[p] < 0;
      CHECK(unmatched == g.unmatched[c]);
    }
  }
}

TEST_CASE("fix plan: already perfect means no moves") {
  const auto l = layout({{2, 2}, {3, 3}});
  const auto e = compute_excess(l.clusters, l.colors);
  const auto g = build_clustering_graph(l.clusters, l.colors, e, 2);
  const auto plan = plan_fix_unmatched(l.clusters, e, g, CostParams{4, 2, false});
  CHECK(plan.transfers.empty());
  CHECK(std::accumulate(plan.removed.begin(), plan.removed.end(), std::int64_t{0}) == 0);
}

TEST_CASE("fix plan: isolated balanced cluster donates to the unmatched excess") {
  // cluster 0 has 2 unmatched red; cluster 2 carries the matching 2 blue so
  // the colors balance; cluster 1 is an isolated balanced donor
  const auto l = layout({{3, 1}, {3, 3}, {1, 3}});
  const auto e = compute_excess(l.clusters, l.colors);
  ClusteringGraph g;
  g.num_clusters = 3;
  g.component = {0, 1, 2};
  g.initial_excess = e.ex;
  g.unmatched = e.ex;
  g.excess_color = e.exc;
  CostParams p{4, 1, false};
  const auto plan = plan_fix_unmatched(l.clusters, e, g, p);
  std::int64_t blue_into_0 = 0, red_into_2 = 0;
  for (const auto& t : plan.transfers) {
    CHECK(t.from == 1);
    if (t.to == 0 && t.color == kBlue) blue_into_0 += t.count;
    if (t.to == 2 && t.color == kRed) red_into_2 += t.count;
  }
  CHECK(blue_into_0 == 2);
  CHECK(red_into_2 == 2);
  CHECK(plan.isolated_pairs == 2);

  Instance inst = Instance::from_coords(std::vector<double>(l.colors.size(), 0.0), 1, l.colors);
  const auto fixed = fix_unmatched(inst, l.clusters, e, g, p, 1);
  CHECK(is_red_blue_matching(fixed.matching, l.colors));
  for (auto m : fixed.matching) CHECK(m >= 0);
}

TEST_CASE("fix plan: small leftover excess moves between clusters") {
  const auto l = layout({{3, 1}, {1, 3}});
  const auto e = compute_excess(l.clusters, l.colors);
  const auto g = build_clustering_graph(l.clusters, l.colors, e, 3);
  CHECK(g.edges.empty());
  const auto plan = plan_fix_unmatched(l.clusters, e, g, CostParams{4, 3, false});
  REQUIRE(plan.transfers.size() == 1);
  CHECK(plan.transfers[0].from == 0);
  CHECK(plan.transfers[0].to == 1);
  CHECK(plan.transfers[0].color == kRed);
  CHECK(plan.transfers[0].count == 2);
}

TEST_CASE("fix plan: shortfall is reported") {
  // both clusters have large excess and nothing can donate
  const auto l = layout({{5, 0}, {0, 5}});
  const auto e = compute_excess(l.clusters, l.colors);
  ClusteringGraph g;
  g.num_clusters = 2;
  g.component = {0, 1};
  g.initial_excess = e.ex;
  g.unmatched = e.ex;
  g.excess_color = e.exc;
  try {
    plan_fix_unmatched(l.clusters, e, g, CostParams{4, 2, false});
    FAIL("expected a shortfall");
  } catch (const ShortfallError& err) {
    CHECK(err.shortfall == 5);
  }
}

TEST_CASE("bisection examples") {
  WeightedGraph k4(4);
  k4.add_edge(0, 1, 5);
  k4.add_edge(2, 3, 5);
  for (auto [a, b] : {std::pair{0, 2}, {0, 3}, {1, 2}, {1, 3}}) k4.add_edge(a, b, 1);
  const auto cut = min_weighted_bisection(k4);
  CHECK(cut.cut == 4.0);
  CHECK(cut.side[0] == cut.side[1]);
  CHECK(cut.side[2] == cut.side[3]);
  CHECK(cut.exact);

  WeightedGraph pairs(4);
  pairs.add_edge(0, 1, 2);
  pairs.add_edge(2, 3, 3);
  CHECK(min_weighted_bisection(pairs).cut == 0.0);
  BisectionOptions heuristic;
  heuristic.force_heuristic = true;
  CHECK(min_weighted_bisection(pairs, heuristic).cut == 0.0);

  CHECK_THROWS(min_weighted_bisection(WeightedGraph(5)));
}

TEST_CASE("heuristic bisection against exact (property)") {
  Rng rng(5);
  int equal = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 2 * (1 + uniform_index(rng, 6));
    WeightedGraph g(n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (uniform_real(rng) < 0.6) g.add_edge(a, b, uniform_real(rng));
    const auto exact = min_weighted_bisection(g);
    BisectionOptions opt;
    opt.force_heuristic = true;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto heur = min_weighted_bisection(g, opt);
    CHECK(heur.cut >= exact.cut - 1e-12);
    CHECK(std::count(heur.side.begin(), heur.side.end(), 0) == static_cast<std::ptrdiff_t>(n / 2));
    CHECK(std::abs(cut_weight(g, heur.side) - heur.cut) < 1e-12);
    equal += std::abs(heur.cut - exact.cut) <= 1e-9;
  }
  CHECK(equal >= trials * 8 / 10);
}

TEST_CASE("weightloss transform identity over every subset") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + uniform_index(rng, 3);
    const auto inst = oracle::random_euclidean(rng, std::vector<std::size_t>{n / 2, n - n / 2}, 2);
    PointSet cluster(n);
    std::iota(cluster.begin(), cluster.end(), 0);
    const int color = static_cast<int>(uniform_index(rng, 2));
    PointSet reds;
    for (PointId p : cluster)
      if (inst.color(p) == color) reds.push_back(p);
    const std::size_t rho = reds.size();
    for (std::size_t r = 1; r <= rho; ++r) {
      const auto wl = build_weightloss_graph(inst, cluster, color, r);
      CHECK(wl.graph.size() == 2 * r + 2 * rho + 2);
      for (std::uint32_t mask = 0; mask < (1u << rho); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != r) continue;
        std::vector<char> side(wl.graph.size(), 0);
        PointSet s;
        side[1] = 1;
        for (std::size_t i = 0; i < rho; ++i)
          if (mask >> i & 1u) {
            side[2 + i] = 1;
            s.push_back(wl.color_points[i]);
          }
        for (std::size_t d = 2 + rho + 2 * r; d < wl.graph.size(); ++d) side[d] = 1;
        CHECK(std::count(side.begin(), side.end(), 1) == static_cast<std::ptrdiff_t>(wl.graph.size() / 2));
        const double cut = cut_weight(wl.graph, side);
        const double direct = oracle::naive_removal_weight(inst, cluster, s);
        CHECK(std::abs(cut - direct) <= 1e-9 * std::max(1.0, direct));
        CHECK(std::abs(removal_weight(inst, cluster, color, s) - direct) <= 1e-9 * std::max(1.0, direct));
      }
    }
  }
}

TEST_CASE("weightloss extraction") {
  Rng rng(7);
  const auto inst = oracle::random_euclidean(rng, std::vector<std::size_t>{4, 4}, 2);
  PointSet cluster(8);
  std::iota(cluster.begin(), cluster.end(), 0);
  CHECK(weightloss_extract(inst, cluster, kRed, 0).empty());
  auto all = weightloss_extract(inst, cluster, kRed, 4);
  std::sort(all.begin(), all.end());
  PointSet reds;
  for (PointId p : cluster)
    if (inst.color(p) == kRed) reds.push_back(p);
  CHECK(all == reds);
  CHECK_THROWS(weightloss_extract(inst, cluster, kRed, 5));

  for (int trial = 0; trial < 20; ++trial) {
    const auto c = oracle::random_euclidean(rng, std::vector<std::size_t>{4, 4}, 3);
    const auto got = weightloss_extract(c, cluster, kBlue, 2);
    REQUIRE(got.size() == 2);
    double best = std::numeric_limits<double>::infinity();
    PointSet blues;
    for (PointId p : cluster)
      if (c.color(p) == kBlue) blues.push_back(p);
    for (std::size_t a = 0; a < blues.size(); ++a)
      for (std::size_t b = a + 1; b < blues.size(); ++b)
        best = std::min(best, oracle::naive_removal_weight(c, cluster, {blues[a], blues[b]}));
    CHECK(oracle::naive_removal_weight(c, cluster, got) <= best * (1 + 1e-9));
  }
}

TEST_CASE("heuristic weightloss on larger clusters still separates the anchors") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = oracle::random_euclidean(rng, std::vector<std::size_t>{10, 12}, 2);
    PointSet cluster(22);
    std::iota(cluster.begin(), cluster.end(), 0);
    BisectionOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto got = weightloss_extract(inst, cluster, kBlue, 3, opt);
    CHECK(got.size() == 3);
    for (PointId p : got) CHECK(inst.color(p) == kBlue);
  }
}

TEST_CASE("fair cost clustering end to end") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = balanced(rng, 120, 3);
    CostParams p{8, 3, true};
    const auto res = fair_cost_clustering(inst, p, static_cast<std::uint64_t>(trial));
    const auto& rep = res.report;
    CHECK(is_partition(res.clusters, inst.size()));
    for (const auto& c : res.clusters) {
      std::size_t red = 0;
      for (PointId q : c) red += inst.color(q) == kRed;
      CHECK(2 * red == c.size());
      CHECK(c.size() <= static_cast<std::size_t>(6 * p.t * p.ell));
    }
    CHECK(rep.fair);
    CHECK(rep.forest);
    CHECK(rep.max_component_size <= static_cast<std::size_t>(p.ell));
    CHECK_FALSE(rep.approximation_guarantee);
    CHECK(is_red_blue_matching(res.matching, inst.colors()));
    for (auto m : res.matching) CHECK(m >= 0);
    res.tree.validate(inst.size());
    CHECK(std::isfinite(rep.cost));
    CHECK(rep.cost == doctest::Approx(oracle::naive_objective(inst, res.tree, ObjectiveKind::cost)));
    CHECK(rep.to_json().contains("step_f"));

    // the two-level tree restricted to 8 points cannot beat their optimum
    PointSet pick;
    for (PointId q = 0; q < 8; ++q) pick.push_back(q * 29 % static_cast<PointId>(inst.size()));
    std::sort(pick.begin(), pick.end());
    pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
    const auto sub = inst.subset(pick);
    Hierarchy induced;
    std::vector<NodeId> tops;
    for (const auto& c : res.clusters) {
      std::vector<NodeId> leaves;
      for (std::size_t i = 0; i < pick.size(); ++i)
        if (std::binary_search(c.begin(), c.end(), pick[i])) leaves.push_back(induced.add_leaf(static_cast<PointId>(i)));
      if (leaves.size() == 1) tops.push_back(leaves[0]);
      if (leaves.size() > 1) tops.push_back(induced.add_internal(leaves));
    }
    if (tops.size() > 1) induced.add_internal(tops);
    CHECK(cost(sub, induced).value >= oracle::optimal_objective(sub, ObjectiveKind::cost) * (1 - 1e-12));
  }
}

TEST_CASE("strict mode either succeeds within budget or reports a shortfall") {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = balanced(rng, 120, 3);
    try {
      const auto res = fair_cost_clustering(inst, CostParams{8, 3, false}, 1);
      CHECK_FALSE(res.report.fix.used_relaxation);
      CHECK(res.report.fair);
    } catch (const ShortfallError& e) {
      CHECK(e.shortfall > 0);
    }
  }
}

TEST_CASE("cost pipeline input checks") {
  Rng rng(11);
  const auto uneven = oracle::random_euclidean(rng, std::vector<std::size_t>{10, 14}, 2);
  CHECK_THROWS_AS(fair_cost_clustering(uneven, CostParams{4, 2, true}, 0), std::invalid_argument);
  const auto three = oracle::random_euclidean(rng, std::vector<std::size_t>{4, 4, 4}, 2);
  CHECK_THROWS_AS(fair_cost_clustering(three, CostParams{4, 2, true}, 0), std::invalid_argument);
  const auto small = balanced(rng, 4);
  CHECK_THROWS_AS(fair_cost_clustering(small, CostParams{8, 3, true}, 0), std::invalid_argument);
}
