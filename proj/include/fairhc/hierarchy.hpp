#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "fairhc/types.hpp"

namespace fairhc {

using NodeId = std::int32_t;

struct HierarchyNode {
  std::vector<NodeId> children;
  NodeId parent = -1;
  PointId point = -1;       // leaves only
  std::int64_t weight = 0;  // m(leaves(T[u]))
  std::int32_t leaf_count = 0;

  bool is_leaf() const { return children.empty(); }
};

// Rooted tree whose leaves are the points of an instance. Nodes are appended
// bottom-up, so every child index is smaller than its parent's.
class Hierarchy {
 public:
  NodeId add_leaf(PointId p, std::int64_t weight = 1);
  NodeId add_internal(std::vector<NodeId> children);
  void set_root(NodeId r) { root_ = r; }

  NodeId root() const { return root_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t num_points() const { return leaf_node_.size(); }
  const HierarchyNode& node(NodeId u) const { return nodes_[u]; }
  const std::vector<HierarchyNode>& nodes() const { return nodes_; }
  NodeId leaf_of(PointId p) const { return leaf_node_[p]; }
  std::size_t internal_count() const;

  // Throws std::invalid_argument describing the first structural problem:
  // leaves must biject onto 0..n-1, parents must be consistent, internal
  // nodes need >= 2 children, cached weights must match `weights`.
  void validate(std::size_t n, std::span<const std::int64_t> weights = {}) const;

  PointSet points_under(NodeId u) const;
  std::vector<NodeId> bfs_order() const;
  std::size_t depth() const;

  // Appends a copy of src's subtree at `u`, relabelling leaf points with
  // relabel[point]; returns the new node id.
  NodeId append_subtree(const Hierarchy& src, NodeId u, std::span<const PointId> relabel,
                        std::span<const std::int64_t> weights);

  // Nested {"leaf": id} | {"children": [...]}
  nlohmann::json to_json() const;
  static Hierarchy from_json(const nlohmann::json& j, std::span<const std::int64_t> weights = {});

 private:
  std::vector<HierarchyNode> nodes_;
  std::vector<NodeId> leaf_node_;
  NodeId root_ = -1;
};

// O(1) lowest-common-ancestor queries via Euler tour + sparse table.
class LcaIndex {
 public:
  explicit LcaIndex(const Hierarchy& tree);
  NodeId lca(NodeId a, NodeId b) const;
  NodeId lca_points(PointId a, PointId b) const { return lca(tree_->leaf_of(a), tree_->leaf_of(b)); }

 private:
  const Hierarchy* tree_;
  std::vector<NodeId> euler_;
  std::vector<std::int32_t> depth_;
  std::vector<std::int32_t> first_;
  std::vector<std::vector<std::int32_t>> table_;  // indices into euler_
};

}  // namespace fairhc
