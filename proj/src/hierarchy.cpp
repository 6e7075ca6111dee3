#include "fairhc/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <stdexcept>
#include <string>

namespace fairhc {

NodeId Hierarchy::add_leaf(PointId p, std::int64_t weight) {
  if (p < 0) throw std::invalid_argument("negative point id");
  HierarchyNode n;
  n.point = p;
  n.weight = weight;
  n.leaf_count = 1;
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(std::move(n));
  if (static_cast<std::size_t>(p) >= leaf_node_.size()) leaf_node_.resize(p + 1, -1);
  if (leaf_node_[p] != -1) throw std::invalid_argument("point " + std::to_string(p) + " appears twice");
  leaf_node_[p] = id;
  root_ = id;
  return id;
}

NodeId Hierarchy::add_internal(std::vector<NodeId> children) {
  if (children.size() < 2) throw std::invalid_argument("internal node needs at least two children");
  const auto id = static_cast<NodeId>(nodes_.size());
  HierarchyNode n;
  for (NodeId c : children) {
    if (c < 0 || c >= id) throw std::invalid_argument("child id out of range");
    if (nodes_[c].parent != -1) throw std::invalid_argument("node already has a parent");
    nodes_[c].parent = id;
    n.weight += nodes_[c].weight;
    n.leaf_count += nodes_[c].leaf_count;
  }
  n.children = std::move(children);
  nodes_.push_back(std::move(n));
  root_ = id;
  return id;
}

std::size_t Hierarchy::internal_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return !n.is_leaf(); }));
}

void Hierarchy::validate(std::size_t n, std::span<const std::int64_t> weights) const {
  if (nodes_.empty() || root_ < 0) throw std::invalid_argument("structural: empty hierarchy");
  if (leaf_node_.size() != n)
    throw std::invalid_argument("structural: tree has leaves for " + std::to_string(leaf_node_.size()) +
                                " point ids, instance has " + std::to_string(n));
  for (std::size_t p = 0; p < n; ++p)
    if (leaf_node_[p] < 0) throw std::invalid_argument("structural: point " + std::to_string(p) + " has no leaf");
  if (nodes_[root_].parent != -1) throw std::invalid_argument("structural: root has a parent");
  std::size_t leaves = 0;
  for (std::size_t u = 0; u < nodes_.size(); ++u) {
    const auto& nd = nodes_[u];
    if (static_cast<NodeId>(u) != root_ && nd.parent == -1)
      throw std::invalid_argument("structural: node " + std::to_string(u) + " is detached");
    if (nd.is_leaf()) {
      ++leaves;
      if (nd.leaf_count != 1) throw std::invalid_argument("structural: bad leaf count");
      const std::int64_t w = weights.empty() ? nd.weight : weights[nd.point];
      if (nd.weight != w)
        throw std::invalid_argument("structural: leaf weight of point " + std::to_string(nd.point) + " mismatched");
      continue;
    }
    if (nd.children.size() < 2) throw std::invalid_argument("structural: unary internal node");
    std::int64_t w = 0;
    std::int32_t k = 0;
    for (NodeId c : nd.children) {
      if (nodes_[c].parent != static_cast<NodeId>(u)) throw std::invalid_argument("structural: parent link broken");
      w += nodes_[c].weight;
      k += nodes_[c].leaf_count;
    }
    if (w != nd.weight || k != nd.leaf_count)
      throw std::invalid_argument("structural: cached weight/leaf count stale at node " + std::to_string(u));
  }
  if (leaves != n) throw std::invalid_argument("structural: leaf count differs from point count");
  if (nodes_[root_].leaf_count != static_cast<std::int32_t>(n))
    throw std::invalid_argument("structural: root does not span every point");
}

PointSet Hierarchy::points_under(NodeId u) const {
  PointSet out;
  std::vector<NodeId> stack{u};
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    const auto& nd = nodes_[x];
    if (nd.is_leaf()) {
      out.push_back(nd.point);
    } else {
      for (auto it = nd.children.rbegin(); it != nd.children.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

std::vector<NodeId> Hierarchy::bfs_order() const {
  std::vector<NodeId> order;
  if (root_ < 0) return order;
  order.reserve(nodes_.size());
  order.push_back(root_);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (NodeId c : nodes_[order[i]].children) order.push_back(c);
  return order;
}

std::size_t Hierarchy::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (NodeId u : bfs_order()) {
    for (NodeId c : nodes_[u].children) d[c] = d[u] + 1;
    best = std::max(best, d[u]);
  }
  return best;
}

NodeId Hierarchy::append_subtree(const Hierarchy& src, NodeId u, std::span<const PointId> relabel,
                                 std::span<const std::int64_t> weights) {
  // post-order without recursion; children precede parents in src
  std::vector<NodeId> order;
  std::vector<NodeId> stack{u};
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    order.push_back(x);
    for (NodeId c : src.nodes_[x].children) stack.push_back(c);
  }
  std::sort(order.begin(), order.end());
  std::vector<NodeId> mapped(src.nodes_.size(), -1);
  for (NodeId x : order) {
    const auto& nd = src.nodes_[x];
    if (nd.is_leaf()) {
      const PointId p = relabel.empty() ? nd.point : relabel[nd.point];
      mapped[x] = add_leaf(p, weights.empty() ? nd.weight : weights[p]);
    } else {
      std::vector<NodeId> kids;
      kids.reserve(nd.children.size());
      for (NodeId c : nd.children) kids.push_back(mapped[c]);
      mapped[x] = add_internal(std::move(kids));
    }
  }
  return mapped[u];
}

nlohmann::json Hierarchy::to_json() const {
  if (root_ < 0) return nullptr;
  std::vector<nlohmann::json> built(nodes_.size());
  for (std::size_t u = 0; u < nodes_.size(); ++u) {
    const auto& nd = nodes_[u];
    if (nd.is_leaf()) {
      built[u] = {{"leaf", nd.point}};
    } else {
      auto arr = nlohmann::json::array();
      for (NodeId c : nd.children) arr.push_back(std::move(built[c]));
      built[u] = {{"children", std::move(arr)}};
    }
  }
  return std::move(built[root_]);
}

Hierarchy Hierarchy::from_json(const nlohmann::json& j, std::span<const std::int64_t> weights) {
  Hierarchy h;
  // explicit stack: (json node, expanded?)
  struct Frame {
    const nlohmann::json* node;
    bool expanded;
  };
  std::vector<Frame> stack{{&j, false}};
  std::vector<NodeId> results;
  std::vector<std::size_t> marks;
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const auto& node = *f.node;
    if (node.contains("leaf")) {
      const auto p = node.at("leaf").get<PointId>();
      std::int64_t w = 1;
      if (!weights.empty()) {
        if (p < 0 || static_cast<std::size_t>(p) >= weights.size())
          throw std::invalid_argument("structural: leaf id out of range");
        w = weights[p];
      }
      results.push_back(h.add_leaf(p, w));
      continue;
    }
    const auto& kids = node.at("children");
    if (!f.expanded) {
      marks.push_back(results.size());
      stack.push_back({f.node, true});
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back({&*it, false});
      continue;
    }
    const std::size_t start = marks.back();
    marks.pop_back();
    std::vector<NodeId> children(results.begin() + static_cast<std::ptrdiff_t>(start), results.end());
    results.resize(start);
    results.push_back(h.add_internal(std::move(children)));
  }
  h.root_ = results.back();
  return h;
}

LcaIndex::LcaIndex(const Hierarchy& tree) : tree_(&tree) {
  const auto& nodes = tree.nodes();
  first_.assign(nodes.size(), -1);
  euler_.reserve(2 * nodes.size());
  depth_.reserve(2 * nodes.size());
  struct Frame {
    NodeId u;
    std::size_t next;
    std::int32_t depth;
  };
  std::vector<Frame> stack{{tree.root(), 0, 0}};
  while (!stack.empty()) {
    auto& f = stack.back();
    if (f.next == 0) {
      first_[f.u] = static_cast<std::int32_t>(euler_.size());
      euler_.push_back(f.u);
      depth_.push_back(f.depth);
    }
    const auto& kids = nodes[f.u].children;
    if (f.next < kids.size()) {
      const NodeId c = kids[f.next++];
      stack.push_back({c, 0, f.depth + 1});
    } else {
      stack.pop_back();
      if (!stack.empty()) {
        euler_.push_back(stack.back().u);
        depth_.push_back(stack.back().depth);
      }
    }
  }
  const std::size_t m = euler_.size();
  const int levels = m > 1 ? std::bit_width(m) : 1;
  table_.assign(levels, {});
  table_[0].resize(m);
  for (std::size_t i = 0; i < m; ++i) table_[0][i] = static_cast<std::int32_t>(i);
  for (int k = 1; k < levels; ++k) {
    const std::size_t span = std::size_t{1} << k;
    table_[k].resize(m - span + 1);
    for (std::size_t i = 0; i + span <= m; ++i) {
      const auto a = table_[k - 1][i];
      const auto b = table_[k - 1][i + span / 2];
      table_[k][i] = depth_[a] <= depth_[b] ? a : b;
    }
  }
}

NodeId LcaIndex::lca(NodeId a, NodeId b) const {
  std::size_t l = first_[a], r = first_[b];
  if (l > r) std::swap(l, r);
  const int k = std::bit_width(r - l + 1) - 1;
  const auto x = table_[k][l];
  const auto y = table_[k][r - (std::size_t{1} << k) + 1];
  return euler_[depth_[x] <= depth_[y] ? x : y];
}

}  // namespace fairhc
