#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "fairhc/hierarchy.hpp"
#include "fairhc/instance.hpp"
#include "fairhc/linkage.hpp"

namespace fairhc {

// Colors in the cost pipeline: 0 is red, 1 is blue.
inline constexpr int kRed = 0;
inline constexpr int kBlue = 1;

struct CostParams {
  int t = 8;
  int ell = 3;
  bool relaxed = false;

  // t > ell + 108t²/ell²
  bool strict_regime() const;
  // ceil(108t²/ell³), the number of edge-breaking rounds
  std::int64_t round_cap() const;
  // ell + ceil(108t²/ell²), the per-cluster removal budget
  std::int64_t removal_cap() const;
  // ceil(t²/ell²), pairs donated by an isolated cluster
  std::int64_t isolated_quota() const;
  // t = ceil(√n·log^{3/4} n), ell = ceil(n^{1/3}·√log n), natural log
  static CostParams defaults(std::size_t n);
};

// Step (A) blackbox; average linkage in similarity mode unless given.
Hierarchy unfair_tree(const Instance& inst, const TreeBuilder& builder = {});

// Step (B): BFS from the root, emit every cluster with at most t leaves
// without descending into it.
Clustering extract_t_maximal(const Hierarchy& tree, int t);

// Step (C): accumulate clusters smaller than t until the union reaches t;
// an undersized residue joins the smallest emitted cluster.
Clustering combine_to_bands(const Clustering& clusters, int t);

struct Excess {
  std::vector<std::int64_t> red;
  std::vector<std::int64_t> blue;
  std::vector<std::int64_t> ex;
  std::vector<int> exc;  // ties resolve to red
};

// Step (D)
Excess compute_excess(const Clustering& clusters, std::span<const int> colors);

struct ClusterEdge {
  std::int32_t parent = 0;  // the cluster that was the reference when the edge was added
  std::int32_t child = 0;
  std::int64_t matches = 0;
};

struct ClusteringGraph {
  std::size_t num_clusters = 0;
  std::vector<ClusterEdge> edges;
  std::vector<std::int32_t> component;      // component id per cluster, ordered by creation
  std::vector<std::int64_t> initial_excess;
  std::vector<std::int64_t> unmatched;      // excess still unmatched after Step (E)
  std::vector<int> excess_color;
  std::vector<PointId> matching;            // M: partner per point, -1 if unmatched

  std::size_t num_components() const;
  std::vector<std::vector<std::int32_t>> components() const;
  std::size_t max_component_size() const;
  bool is_forest() const;
  std::vector<std::int32_t> degree() const;
};

// Step (E). Clusters are matched internally first (maximal red-blue pairs);
// the excess is then matched across edges as clusters join components.
ClusteringGraph build_clustering_graph(const Clustering& clusters, std::span<const int> colors, const Excess& excess,
                                       int ell);

// Checks that `matching` is an involution pairing red with blue.
bool is_red_blue_matching(std::span<const PointId> matching, std::span<const int> colors);

struct Transfer {
  std::int32_t from = 0;
  std::int32_t to = 0;
  int color = kRed;
  std::int64_t count = 0;
};

struct FixPlan {
  std::vector<Transfer> transfers;           // points moving between clusters, by color
  std::vector<std::int64_t> removed;         // per cluster total points leaving
  std::int64_t small_excess_moved = 0;
  std::int64_t isolated_pairs = 0;
  std::int64_t broken_matches = 0;
  std::int64_t relaxed_pairs = 0;            // supply taken beyond the strict budgets
  std::int64_t rounds = 0;
  bool used_relaxation = false;
};

struct FixResult {
  Clustering clusters;           // 𝒞₁, same indexing as 𝒞₀ (clusters may be empty)
  std::vector<PointId> matching; // M′, perfect red-blue
  FixPlan plan;
};

struct ShortfallError : std::runtime_error {
  ShortfallError(const std::string& what, std::int64_t shortfall) : std::runtime_error(what), shortfall(shortfall) {}
  std::int64_t shortfall;
};

// Count-level Step (F): decides how many points of each color leave which
// cluster and where they go. Throws ShortfallError when donors run out.
FixPlan plan_fix_unmatched(const Clustering& clusters, const Excess& excess, const ClusteringGraph& graph,
                           const CostParams& params);

struct BisectionOptions {
  std::size_t exact_limit = 20;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  bool force_heuristic = false;
};

// Undirected graph with a dense weight matrix.
class WeightedGraph {
 public:
  explicit WeightedGraph(std::size_t n = 0) : n_(n), w_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  void add_edge(std::size_t u, std::size_t v, double w);
  double weight(std::size_t u, std::size_t v) const { return w_[u * n_ + v]; }
  double total_weight() const;

 private:
  std::size_t n_;
  std::vector<double> w_;
};

struct Bisection {
  std::vector<char> side;  // 0 or 1, equal counts
  double cut = 0.0;
  bool exact = false;
};

double cut_weight(const WeightedGraph& g, std::span<const char> side);
Bisection min_weighted_bisection(const WeightedGraph& g, const BisectionOptions& options = {});

// Vertex layout: 0 = b0, 1 = b0', 2..2+ρ-1 the cluster's points of `color`,
// then 2r dummies tied to b0 and ρ dummies tied to b0'.
struct WeightlossGraph {
  WeightedGraph graph;
  PointSet color_points;
  double infinite = 0.0;
  std::size_t r = 0;
};

WeightlossGraph build_weightloss_graph(const Instance& inst, const PointSet& cluster, int color, std::size_t r);
// s(S, other colors in C) + s within S + s(S, rest of the color class)
double removal_weight(const Instance& inst, const PointSet& cluster, int color, const PointSet& removed);
// r points of `color` whose removal loses little similarity weight.
PointSet weightloss_extract(const Instance& inst, const PointSet& cluster, int color, std::size_t r,
                            const BisectionOptions& options = {});

// Step (F) applied to concrete points with weightloss_extract choosing which
// points leave each cluster.
FixResult fix_unmatched(const Instance& inst, const Clustering& clusters, const Excess& excess,
                        const ClusteringGraph& graph, const CostParams& params, std::uint64_t seed);

struct CostReport {
  std::size_t n = 0;
  CostParams params;
  bool strict_regime = false;
  bool approximation_guarantee = false;  // default blackbox carries none
  std::vector<std::size_t> sizes_maximal;
  std::vector<std::size_t> sizes_banded;
  std::vector<std::int64_t> excess;
  std::size_t edges = 0;
  std::int64_t edge_matches = 0;
  std::size_t components = 0;
  std::size_t max_component_size = 0;
  bool forest = true;
  std::int64_t leftover_excess = 0;
  FixPlan fix;
  std::int64_t max_removed = 0;
  std::vector<std::size_t> sizes_fixed;
  std::vector<std::size_t> sizes_final;
  std::size_t max_final_size = 0;
  std::size_t size_bound = 0;  // 6·t·ell
  double cost = 0.0;
  bool fair = false;

  nlohmann::json to_json() const;
};

struct CostResult {
  Hierarchy tree;  // root -> merged clusters -> points
  Clustering clusters;
  ClusteringGraph graph;
  std::vector<PointId> matching;  // M′
  CostReport report;
};

// Steps (A)-(G). Needs two colors with equal counts.
CostResult fair_cost_clustering(const Instance& inst, const CostParams& params, std::uint64_t seed,
                                const TreeBuilder& builder = {});

}  // namespace fairhc
