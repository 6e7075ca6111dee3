#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "fairhc/fairlets.hpp"
#include "fairhc/harness.hpp"
#include "fairhc/linkage.hpp"
#include "fairhc/objectives.hpp"
#include "oracle.hpp"

using namespace fairhc;

namespace {

PointSet sorted_points(const Hierarchy& h, NodeId u) {
  auto p = h.points_under(u);
  std::sort(p.begin(), p.end());
  return p;
}

Instance integer_matrix(Rng& rng, std::size_t n, int top) {
  CondensedMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, static_cast<double>(1 + uniform_index(rng, top)));
  std::vector<int> colors(n);
  for (std::size_t i = 0; i < n; ++i) colors[i] = static_cast<int>(i % 2);
  return Instance::from_distances(std::move(d), std::move(colors));
}

}  // namespace

TEST_CASE("average linkage examples") {
  CondensedMatrix s(3);
  s.set(0, 1, 3);
  s.set(0, 2, 1);
  s.set(1, 2, 1);
  const auto res = average_linkage(Instance::from_similarities(s, {0, 1, 0}), MetricMode::similarity);
  REQUIRE(res.merges.size() == 2);
  CHECK(res.merges[0].left == 0);
  CHECK(res.merges[0].right == 1);
  CHECK(res.merges[0].avg == 3.0);
  CHECK(res.merges[1].left == 2);
  CHECK(res.merges[1].right == 3);

  CondensedMatrix w(2);
  w.set(0, 1, 4);
  const auto weighted = average_linkage(Instance::from_similarities(w, {0, 1}, {2, 1}), MetricMode::similarity);
  CHECK(weighted.merges[0].avg == 2.0);

  std::ostringstream csv;
  write_merges_csv(csv, res.merges);
  CHECK(csv.str() == "iteration,left,right,avg\n0,0,1,3\n1,2,3,1\n");
}

TEST_CASE("node ids follow cluster ids") {
  Rng rng(3);
  const auto inst = oracle::random_matrix(rng, 9);
  const auto res = average_linkage(inst, MetricMode::distance);
  for (const auto& m : res.merges) {
    const auto& nd = res.tree.node(static_cast<NodeId>(9 + m.iteration));
    CHECK(nd.children.size() == 2);
    CHECK(std::min(nd.children[0], nd.children[1]) == m.left);
    CHECK(std::max(nd.children[0], nd.children[1]) == m.right);
  }
}

TEST_CASE("average linkage matches the naive oracle (property)") {
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 28);
    const bool weighted = trial % 2 == 0;
    const auto inst = trial % 3 == 0 ? oracle::random_similarity(rng, n, 2, weighted)
                                     : oracle::random_matrix(rng, n, 2, weighted);
    for (auto mode : {MetricMode::similarity, MetricMode::distance}) {
      if (mode == MetricMode::distance && !inst.has_distance()) continue;
      const auto fast = average_linkage(inst, mode);
      const auto slow = oracle::naive_average_linkage(inst, mode);
      REQUIRE(fast.merges.size() == slow.size());
      for (std::size_t k = 0; k < slow.size(); ++k) {
        CHECK(fast.merges[k].left == slow[k].left);
        CHECK(fast.merges[k].right == slow[k].right);
        CHECK(std::abs(fast.merges[k].avg - slow[k].avg) <= 1e-9 * std::max(1.0, std::abs(slow[k].avg)));
      }
      fast.tree.validate(n, inst.weights());
    }
  }
}

TEST_CASE("ties break toward the smallest id pair (property)") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = integer_matrix(rng, 3 + uniform_index(rng, 12), 2);
    const auto fast = average_linkage(inst, MetricMode::distance);
    const auto slow = oracle::naive_average_linkage(inst, MetricMode::distance);
    for (std::size_t k = 0; k < slow.size(); ++k) {
      CHECK(fast.merges[k].left == slow[k].left);
      CHECK(fast.merges[k].right == slow[k].right);
    }
  }
}

TEST_CASE("a weighted point behaves like its duplicates") {
  // point 0 with weight 2 against points {0a, 0b} at distance 0
  CondensedMatrix d(3);
  d.set(0, 1, 3);
  d.set(0, 2, 7);
  d.set(1, 2, 5);
  const auto weighted = Instance::from_distances(d, {0, 1, 0}, {2, 1, 1});
  const auto res = average_linkage(weighted, MetricMode::distance);
  CHECK(res.merges[0].avg == 1.5);  // 3 / (2·1)
  CHECK(res.merges[0].left == 0);
  CHECK(res.merges[0].right == 1);
}

TEST_CASE("value of average linkage is at least 2/3 of n·d(V) on small instances") {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 6);
    const auto inst = oracle::random_matrix(rng, n);
    const auto tree = average_linkage(inst, MetricMode::distance).tree;
    CHECK(value(inst, tree).value >= 2.0 / 3.0 * value_upper_bound(inst) * (1 - 1e-12));
  }
}

TEST_CASE("densest cut examples") {
  CondensedMatrix d2(2);
  d2.set(0, 1, 1);
  const auto two = densest_cut_tree(Instance::from_distances(d2, {0, 1}), 0.1);
  CHECK(two.internal_count() == 1);

  CondensedMatrix d(4);
  d.set(0, 1, 1);
  d.set(2, 3, 1);
  for (auto [i, j] : {std::pair{0, 2}, {0, 3}, {1, 2}, {1, 3}}) d.set(i, j, 10);
  const auto inst = Instance::from_distances(d, {0, 1, 0, 1});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tree = densest_cut_tree(inst, 0.1, seed);
    const auto& root = tree.node(tree.root());
    REQUIRE(root.children.size() == 2);
    const auto a = sorted_points(tree, root.children[0]);
    const auto b = sorted_points(tree, root.children[1]);
    CHECK(((a == PointSet{0, 1} && b == PointSet{2, 3}) || (a == PointSet{2, 3} && b == PointSet{0, 1})));
  }
  // cut densities: the pair split is 40/4 = 10, the best 1-vs-3 split is 21/3 = 7
  const PointSet p01{0, 1}, p23{2, 3}, p0{0}, p123{1, 2, 3};
  CHECK(pair_sums(inst, p01, p23, MetricMode::distance) / 4.0 == 10.0);
  CHECK(pair_sums(inst, p0, p123, MetricMode::distance) / 3.0 == 7.0);
}

TEST_CASE("densest cut value guarantee on small weighted instances") {
  Rng rng(29);
  const double eps = 0.1;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 6);
    const auto inst = oracle::random_matrix(rng, n, 2, true);
    const auto tree = densest_cut_tree(inst, eps, static_cast<std::uint64_t>(trial));
    tree.validate(n, inst.weights());
    CHECK(value(inst, tree).value >= (2.0 / 3.0 - eps) * value_upper_bound(inst));
  }
}

TEST_CASE("compose with singleton fairlets equals the plain builder") {
  Rng rng(5);
  const auto inst = oracle::random_matrix(rng, 8);
  std::vector<PointSet> singles;
  for (PointId p = 0; p < 8; ++p) singles.push_back({p});
  const FairletDecomposition y(inst, singles, Alpha(1, 1));
  CHECK(compose_fair_tree(inst, y, ObjectiveKind::value).to_json() ==
        average_linkage(inst, MetricMode::distance).tree.to_json());
  CHECK(compose_fair_tree(inst, y, ObjectiveKind::revenue).to_json() ==
        average_linkage(inst, MetricMode::similarity).tree.to_json());
}

TEST_CASE("compose on the 4-point instance") {
  const auto inst = oracle::four_point();
  const FairletDecomposition y(inst, {{1, 3}, {0, 2}}, Alpha(1, 2));
  const auto tree = compose_fair_tree(inst, y, ObjectiveKind::value);
  tree.validate(4);
  const auto& root = tree.node(tree.root());
  REQUIRE(root.children.size() == 2);
  std::set<PointSet> kids{sorted_points(tree, root.children[0]), sorted_points(tree, root.children[1])};
  CHECK(kids == std::set<PointSet>{{0, 2}, {1, 3}});
  CHECK(tree_fairness_check(tree, inst.colors(), Alpha(1, 2)).fair);
}

TEST_CASE("composed trees are fair for every valid decomposition (property)") {
  Rng rng(61);
  const Alpha alphas[] = {Alpha(1, 2), Alpha(1, 3), Alpha(2, 3), Alpha(3, 4), Alpha(2, 5)};
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const Alpha alpha = alphas[uniform_index(rng, std::size(alphas))];
    const std::size_t c = 2 + uniform_index(rng, 3);
    std::vector<std::size_t> counts(c);
    ColorProfile prof;
    for (auto& k : counts) prof.n += k = 2 + uniform_index(rng, 12);
    prof.counts = counts;
    if (!feasible(prof, alpha)) continue;
    const auto inst = oracle::random_euclidean(rng, counts, 2, trial % 2 == 0);
    const auto y0 = initial_decomposition(inst, alpha, static_cast<std::uint64_t>(trial));
    LocalSearchOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto y = local_search(inst, y0, opt).decomposition;
    for (auto kind : {ObjectiveKind::value, ObjectiveKind::revenue, ObjectiveKind::cost}) {
      const auto tree = compose_fair_tree(inst, y, kind);
      tree.validate(inst.size(), inst.weights());
      CHECK(tree_fairness_check(tree, inst.colors(), alpha).fair);
    }
    const auto dc = compose_fair_tree(inst, y, ObjectiveKind::value, densest_cut_builder(0.1, 1));
    CHECK(tree_fairness_check(dc, inst.colors(), alpha).fair);
    ++checked;
  }
  CHECK(checked > 30);
}

TEST_CASE("fairness check") {
  Hierarchy h;
  const auto a = h.add_leaf(0), b = h.add_leaf(1);
  h.add_internal({a, b});
  const int rb[] = {0, 1};
  CHECK(tree_fairness_check(h, rb, Alpha(1, 2)).fair);
  const int rr[] = {0, 0};
  const auto bad = tree_fairness_check(h, rr, Alpha(1, 2));
  CHECK_FALSE(bad.fair);
  CHECK(bad.violating_node == h.root());
  CHECK(bad.color_count == 2);

  SyntheticSpec spec;
  spec.n = 400;
  spec.color_ratio = {1, 1};
  spec.color_pure = true;
  spec.separation = 20.0;
  const auto blobs = synthetic_blobs(spec, 4);
  const auto vanilla = average_linkage(blobs, MetricMode::distance).tree;
  const auto rep = tree_fairness_check(vanilla, blobs.colors(), Alpha(1, 2));
  CHECK_FALSE(rep.fair);
  REQUIRE(rep.violating_node.has_value());
  CHECK(rep.color_count == rep.cluster_size);  // monochromatic
}
