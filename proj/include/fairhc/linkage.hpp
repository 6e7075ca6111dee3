#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fairhc/fairlets.hpp"
#include "fairhc/hierarchy.hpp"
#include "fairhc/instance.hpp"

namespace fairhc {

// Cluster ids follow the usual dendrogram convention: leaves are 0..n-1 and
// the k-th merge (0-based) creates cluster n+k. In the returned Hierarchy the
// node id equals the cluster id.
struct MergeStep {
  std::size_t iteration = 0;
  std::int32_t left = 0;
  std::int32_t right = 0;
  double avg = 0.0;
};

struct LinkageResult {
  Hierarchy tree;
  std::vector<MergeStep> merges;
};

// Weighted average linkage, Avg(A,B) = metric(A,B)/(m(A)m(B)). Similarity
// mode merges the largest Avg, distance mode the smallest; ties go to the
// lexicographically smallest (min id, max id).
LinkageResult average_linkage(const Instance& inst, MetricMode mode);

void write_merges_csv(std::ostream& out, std::span<const MergeStep> merges);

// Top-down recursive splitting by (ε/n)-locally densest cuts, n = m(V).
Hierarchy densest_cut_tree(const Instance& inst, double epsilon, std::uint64_t seed = 0);

using TreeBuilder = std::function<Hierarchy(const Instance&)>;
TreeBuilder average_linkage_builder(MetricMode mode);
TreeBuilder densest_cut_builder(double epsilon, std::uint64_t seed = 0);

// Builds the tree over the reduced instance with `builder` (average linkage in
// the objective's metric mode when empty) and hangs an average-linkage subtree
// over each fairlet's points below the fairlet's leaf.
Hierarchy compose_fair_tree(const Instance& inst, const FairletDecomposition& fairlets, ObjectiveKind objective,
                            const TreeBuilder& builder = {});

MetricMode objective_mode(ObjectiveKind objective);

struct FairnessReport {
  bool fair = true;
  std::optional<NodeId> violating_node;  // first offender in BFS order
  std::size_t cluster_size = 0;
  int color = -1;
  std::size_t color_count = 0;
};

// Every internal cluster must keep each color at or below alpha·|cluster|.
FairnessReport tree_fairness_check(const Hierarchy& tree, std::span<const int> colors, Alpha alpha);

}  // namespace fairhc
