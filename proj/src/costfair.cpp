#include "fairhc/costfair.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fairhc/objectives.hpp"
#include "fairhc/rng.hpp"

namespace fairhc {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

bool CostParams::strict_regime() const {
  // t > ell + 108t²/ell², compared exactly: t·ell² > ell³ + 108t²
  const std::int64_t tt = t, l = ell;
  return tt * l * l > l * l * l + 108 * tt * tt;
}

std::int64_t CostParams::round_cap() const {
  return ceil_div(108 * static_cast<std::int64_t>(t) * t, static_cast<std::int64_t>(ell) * ell * ell);
}

std::int64_t CostParams::removal_cap() const {
  return ell + ceil_div(108 * static_cast<std::int64_t>(t) * t, static_cast<std::int64_t>(ell) * ell);
}

std::int64_t CostParams::isolated_quota() const {
  return ceil_div(static_cast<std::int64_t>(t) * t, static_cast<std::int64_t>(ell) * ell);
}

CostParams CostParams::defaults(std::size_t n) {
  const double ln = std::log(static_cast<double>(n));
  CostParams p;
  p.t = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)) * std::pow(ln, 0.75)));
  p.ell = std::max(1, static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n)) * std::sqrt(ln))));
  return p;
}

Hierarchy unfair_tree(const Instance& inst, const TreeBuilder& builder) {
  if (builder) return builder(inst);
  return average_linkage(inst, MetricMode::similarity).tree;
}

Clustering extract_t_maximal(const Hierarchy& tree, int t) {
  if (t < 1) throw std::invalid_argument("extract_t_maximal needs t >= 1");
  Clustering out;
  std::deque<NodeId> queue{tree.root()};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    const auto& nd = tree.node(u);
    if (nd.leaf_count <= t) {
      out.push_back(tree.points_under(u));
      continue;
    }
    for (NodeId c : nd.children) queue.push_back(c);
  }
  return out;
}

Clustering combine_to_bands(const Clustering& clusters, int t) {
  if (t < 1) throw std::invalid_argument("combine_to_bands needs t >= 1");
  const auto tt = static_cast<std::size_t>(t);
  Clustering out;
  PointSet next;
  for (const auto& c : clusters) {
    if (c.size() >= tt) {
      out.push_back(c);
      continue;
    }
    next.insert(next.end(), c.begin(), c.end());
    if (next.size() >= tt) {
      out.push_back(std::move(next));
      next.clear();
    }
  }
  if (!next.empty()) {
    if (out.empty()) {
      out.push_back(std::move(next));
    } else {
      std::size_t smallest = 0;
      for (std::size_t k = 1; k < out.size(); ++k)
        if (out[k].size() < out[smallest].size()) smallest = k;
      out[smallest].insert(out[smallest].end(), next.begin(), next.end());
    }
  }
  return out;
}

Excess compute_excess(const Clustering& clusters, std::span<const int> colors) {
  Excess e;
  for (const auto& c : clusters) {
    std::int64_t r = 0, b = 0;
    for (PointId p : c) {
      if (colors[p] == kRed)
        ++r;
      else if (colors[p] == kBlue)
        ++b;
      else
        throw std::invalid_argument("cost pipeline supports two colors only");
    }
    e.red.push_back(r);
    e.blue.push_back(b);
    e.ex.push_back(r >= b ? r - b : b - r);
    e.exc.push_back(r >= b ? kRed : kBlue);
  }
  return e;
}

std::size_t ClusteringGraph::num_components() const {
  std::int32_t hi = -1;
  for (auto c : component) hi = std::max(hi, c);
  return static_cast<std::size_t>(hi + 1);
}

std::vector<std::vector<std::int32_t>> ClusteringGraph::components() const {
  std::vector<std::vector<std::int32_t>> out(num_components());
  for (std::size_t k = 0; k < component.size(); ++k) out[component[k]].push_back(static_cast<std::int32_t>(k));
  return out;
}

std::size_t ClusteringGraph::max_component_size() const {
  std::size_t best = 0;
  for (const auto& c : components()) best = std::max(best, c.size());
  return best;
}

bool ClusteringGraph::is_forest() const {
  // union-find: an edge inside one set closes a cycle
  std::vector<std::int32_t> up(num_clusters);
  std::iota(up.begin(), up.end(), 0);
  auto find = [&](std::int32_t x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  };
  for (const auto& e : edges) {
    const auto a = find(e.parent), b = find(e.child);
    if (a == b) return false;
    up[a] = b;
  }
  return true;
}

std::vector<std::int32_t> ClusteringGraph::degree() const {
  std::vector<std::int32_t> d(num_clusters, 0);
  for (const auto& e : edges) {
    ++d[e.parent];
    ++d[e.child];
  }
  return d;
}

ClusteringGraph build_clustering_graph(const Clustering& clusters, std::span<const int> colors, const Excess& excess,
                                       int ell) {
  if (ell < 1) throw std::invalid_argument("ell must be >= 1");
  const std::size_t k = clusters.size();
  ClusteringGraph g;
  g.num_clusters = k;
  g.component.assign(k, -1);
  g.initial_excess = excess.ex;
  g.unmatched = excess.ex;
  g.excess_color = excess.exc;
  g.matching.assign(colors.size(), -1);

  // internal matching and the excess points left over, in id order
  std::vector<PointSet> spare(k);
  for (std::size_t c = 0; c < k; ++c) {
    PointSet reds, blues;
    for (PointId p : clusters[c]) (colors[p] == kRed ? reds : blues).push_back(p);
    std::sort(reds.begin(), reds.end());
    std::sort(blues.begin(), blues.end());
    const std::size_t m = std::min(reds.size(), blues.size());
    for (std::size_t i = 0; i < m; ++i) {
      g.matching[reds[i]] = blues[i];
      g.matching[blues[i]] = reds[i];
    }
    const auto& rest = reds.size() > m ? reds : blues;
    spare[c].assign(rest.begin() + static_cast<std::ptrdiff_t>(m), rest.end());
    std::reverse(spare[c].begin(), spare[c].end());  // pop from the back in id order
  }

  auto& ex = g.unmatched;
  std::vector<char> visited(k, 0);
  auto pick = [&](std::optional<int> against) {
    std::size_t best = k;
    for (std::size_t c = 0; c < k; ++c) {
      if (visited[c] || ex[c] < ell) continue;
      if (against && g.excess_color[c] == *against) continue;
      if (best == k || ex[c] > ex[best]) best = c;
    }
    return best;
  };

  std::int32_t next_component = 0;
  for (;;) {
    std::size_t anchor = pick(std::nullopt);
    if (anchor == k) break;
    visited[anchor] = 1;
    const std::int32_t comp = next_component++;
    g.component[anchor] = comp;
    std::size_t size = 1;
    while (size < static_cast<std::size_t>(ell)) {
      const std::size_t j = pick(g.excess_color[anchor]);
      if (j == k) break;
      visited[j] = 1;
      g.component[j] = comp;
      ++size;
      const std::int64_t m = std::min(ex[anchor], ex[j]);
      for (std::int64_t i = 0; i < m; ++i) {
        const PointId a = spare[anchor].back(), b = spare[j].back();
        spare[anchor].pop_back();
        spare[j].pop_back();
        g.matching[a] = b;
        g.matching[b] = a;
      }
      g.edges.push_back({static_cast<std::int32_t>(anchor), static_cast<std::int32_t>(j), m});
      const bool j_larger = ex[j] > ex[anchor];
      ex[anchor] -= m;
      ex[j] -= m;
      const std::size_t ref = j_larger ? j : anchor;
      if (ex[ref] < ell) break;
      anchor = ref;
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    if (g.component[c] == -1) g.component[c] = next_component++;
  return g;
}

bool is_red_blue_matching(std::span<const PointId> matching, std::span<const int> colors) {
  for (std::size_t p = 0; p < matching.size(); ++p) {
    const PointId q = matching[p];
    if (q < 0) continue;
    if (static_cast<std::size_t>(q) >= matching.size() || matching[q] != static_cast<PointId>(p)) return false;
    if (colors[p] == colors[q]) return false;
  }
  return true;
}

// ---- Step (F), count level ----

FixPlan plan_fix_unmatched(const Clustering& clusters, const Excess& excess, const ClusteringGraph& graph,
                           const CostParams& params) {
  const std::size_t k = clusters.size();
  const std::int64_t ell = params.ell;
  FixPlan plan;
  plan.removed.assign(k, 0);

  // demand[c][color]: points of `color` cluster c still needs
  std::vector<std::array<std::int64_t, 2>> demand(k, {0, 0});
  std::array<std::vector<std::pair<std::int32_t, std::int64_t>>, 2> pool;
  for (std::size_t c = 0; c < k; ++c) {
    const auto u = graph.unmatched[c];
    if (u == 0) continue;
    if (u <= ell)
      pool[graph.excess_color[c]].push_back({static_cast<std::int32_t>(c), u});
    else
      demand[c][1 - graph.excess_color[c]] = u;
  }

  auto add_transfer = [&](std::int32_t from, std::int32_t to, int color, std::int64_t count) {
    if (count <= 0 || from == to) return;
    if (!plan.transfers.empty()) {
      auto& last = plan.transfers.back();
      if (last.from == from && last.to == to && last.color == color) {
        last.count += count;
        plan.removed[from] += count;
        return;
      }
    }
    plan.transfers.push_back({from, to, color, count});
    plan.removed[from] += count;
  };

  // small excess first, into large demand of the same color
  for (int color : {kRed, kBlue}) {
    auto& units = pool[color];
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < k && cursor < units.size(); ++c) {
      while (demand[c][color] > 0 && cursor < units.size()) {
        const auto take = std::min(demand[c][color], units[cursor].second);
        add_transfer(units[cursor].first, static_cast<std::int32_t>(c), color, take);
        plan.small_excess_moved += take;
        demand[c][color] -= take;
        units[cursor].second -= take;
        if (units[cursor].second == 0) ++cursor;
      }
    }
    units.erase(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(cursor));
  }
  // what is left pairs up: each red joins a cluster holding a leftover blue
  {
    auto& reds = pool[kRed];
    auto& blues = pool[kBlue];
    std::size_t i = 0, j = 0;
    while (i < reds.size() && j < blues.size()) {
      const auto take = std::min(reds[i].second, blues[j].second);
      add_transfer(reds[i].first, blues[j].first, kRed, take);
      plan.small_excess_moved += take;
      reds[i].second -= take;
      blues[j].second -= take;
      if (reds[i].second == 0) ++i;
      if (blues[j].second == 0) ++j;
    }
    if (i < reds.size() || j < blues.size())
      throw std::logic_error("small excess does not balance; color totals differ");
  }

  std::int64_t need = 0, need_blue = 0;
  for (std::size_t c = 0; c < k; ++c) {
    need += demand[c][kRed];
    need_blue += demand[c][kBlue];
  }
  if (need != need_blue) throw std::logic_error("large excess does not balance; color totals differ");

  // Supply arrives in red/blue pairs, each pair sent to the first clusters
  // still short of that color.
  std::array<std::size_t, 2> cursor{0, 0};
  auto give = [&](std::int32_t from, int color, std::int64_t count) {
    while (count > 0) {
      auto& cur = cursor[color];
      while (cur < k && demand[cur][color] == 0) ++cur;
      if (cur == k) throw std::logic_error("supply without demand");
      const auto take = std::min(count, demand[cur][color]);
      add_transfer(from, static_cast<std::int32_t>(cur), color, take);
      demand[cur][color] -= take;
      count -= take;
    }
  };

  std::vector<std::int64_t> internal(k);
  for (std::size_t c = 0; c < k; ++c) internal[c] = std::min(excess.red[c], excess.blue[c]);
  const auto degree = graph.degree();

  auto donate_internal = [&](std::size_t c, std::int64_t pairs) {
    pairs = std::min({pairs, internal[c], need});
    if (pairs <= 0) return std::int64_t{0};
    give(static_cast<std::int32_t>(c), kRed, pairs);
    give(static_cast<std::int32_t>(c), kBlue, pairs);
    internal[c] -= pairs;
    need -= pairs;
    return pairs;
  };

  // clusters never reached in Step (E)
  for (std::size_t c = 0; c < k && need > 0; ++c)
    if (degree[c] == 0 && graph.initial_excess[c] < ell)
      plan.isolated_pairs += donate_internal(c, params.isolated_quota());

  // edge-breaking rounds over the forest
  const std::size_t m = graph.edges.size();
  std::vector<std::int64_t> left(m);
  std::vector<char> active(m, 1);
  std::vector<std::vector<std::size_t>> kids(k);
  std::vector<char> has_parent(k, 0);
  for (std::size_t e = 0; e < m; ++e) {
    left[e] = graph.edges[e].matches;
    kids[graph.edges[e].parent].push_back(e);
    has_parent[graph.edges[e].child] = 1;
    if (left[e] < ell) active[e] = 0;
  }
  std::vector<std::int32_t> roots;
  for (std::size_t c = 0; c < k; ++c)
    if (!has_parent[c] && !kids[c].empty()) roots.push_back(static_cast<std::int32_t>(c));
  for (std::size_t e = 0; e < m; ++e)
    if (!active[e]) roots.push_back(graph.edges[e].child);

  auto run_round = [&] {
    bool any = false;
    for (std::size_t ri = 0; ri < roots.size() && need > 0; ++ri) {
      std::vector<std::int32_t> order{roots[ri]};
      for (std::size_t i = 0; i < order.size(); ++i)
        for (auto e : kids[order[i]])
          if (active[e]) order.push_back(graph.edges[e].child);
      for (auto p : order) {
        if (need == 0) break;
        std::size_t edge = m;
        for (auto e : kids[p])
          if (active[e]) {
            edge = e;
            break;
          }
        if (edge == m) continue;
        const auto ch = graph.edges[edge].child;
        const auto b = std::min({ell, need, left[edge]});
        give(p, graph.excess_color[p], b);
        give(ch, graph.excess_color[ch], b);
        need -= b;
        left[edge] -= b;
        plan.broken_matches += b;
        any = true;
        if (left[edge] < ell) {
          active[edge] = 0;
          roots.push_back(ch);
        }
      }
    }
    return any;
  };

  const std::int64_t cap = params.round_cap();
  while (need > 0 && plan.rounds < cap) {
    if (!run_round()) break;
    ++plan.rounds;
  }

  // clusters cut loose by the rounds spend their remaining budget like isolated ones
  for (std::size_t c = 0; c < k && need > 0; ++c) {
    if (degree[c] == 0) continue;
    bool loose = true;
    for (std::size_t e = 0; e < m && loose; ++e)
      if (active[e] && (graph.edges[e].parent == static_cast<std::int32_t>(c) ||
                        graph.edges[e].child == static_cast<std::int32_t>(c)))
        loose = false;
    if (!loose) continue;
    const auto budget = (params.removal_cap() - plan.removed[c]) / 2;
    plan.isolated_pairs += donate_internal(c, budget);
  }

  if (need > 0 && params.relaxed) {
    const auto before = need;
    while (need > 0 && run_round()) ++plan.rounds;
    for (std::size_t c = 0; c < k && need > 0; ++c) donate_internal(c, need);
    plan.relaxed_pairs = before - need;
    plan.used_relaxation = plan.relaxed_pairs > 0;
  }
  if (need > 0)
    throw ShortfallError("donor supply exhausted with " + std::to_string(need) +
                             " red-blue pairs still unmatched" +
                             (params.relaxed ? "" : " (relaxed mode may help)"),
                         need);
  return plan;
}

// ---- bisection ----

void WeightedGraph::add_edge(std::size_t u, std::size_t v, double w) {
  if (u == v) throw std::invalid_argument("self loop");
  w_[u * n_ + v] += w;
  w_[v * n_ + u] += w;
}

double WeightedGraph::total_weight() const {
  double acc = 0.0;
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t v = u + 1; v < n_; ++v) acc += w_[u * n_ + v];
  return acc;
}

double cut_weight(const WeightedGraph& g, std::span<const char> side) {
  double acc = 0.0;
  for (std::size_t u = 0; u < g.size(); ++u)
    for (std::size_t v = u + 1; v < g.size(); ++v)
      if (side[u] != side[v]) acc += g.weight(u, v);
  return acc;
}

namespace {

Bisection exact_bisection(const WeightedGraph& g) {
  const std::size_t n = g.size();
  Bisection best;
  best.exact = true;
  best.cut = std::numeric_limits<double>::infinity();
  if (n == 0) {
    best.cut = 0.0;
    return best;
  }
  // vertex 0 stays on side 0; choose n/2 - 1 companions among the others
  const std::uint32_t others = static_cast<std::uint32_t>(n - 1);
  const int want = static_cast<int>(n / 2) - 1;
  std::vector<char> side(n);
  for (std::uint32_t mask = 0; mask < (1u << others); ++mask) {
    if (std::popcount(mask) != want) continue;
    side[0] = 0;
    for (std::uint32_t v = 0; v < others; ++v) side[v + 1] = (mask >> v) & 1u ? 0 : 1;
    const double c = cut_weight(g, side);
    if (c < best.cut) {
      best.cut = c;
      best.side = side;
    }
  }
  return best;
}

Bisection swap_descent(const WeightedGraph& g, Rng& rng) {
  const std::size_t n = g.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_range(order.begin(), order.end(), rng);
  std::vector<char> side(n, 1);
  for (std::size_t i = 0; i < n / 2; ++i) side[order[i]] = 0;

  // gain[v] = external − internal weight of v
  std::vector<double> gain(n);
  auto recompute = [&] {
    for (std::size_t v = 0; v < n; ++v) {
      double d = 0.0;
      for (std::size_t u = 0; u < n; ++u)
        if (u != v) d += side[u] != side[v] ? g.weight(u, v) : -g.weight(u, v);
      gain[v] = d;
    }
  };
  recompute();
  const double tol = 1e-12 * std::max(1.0, g.total_weight());
  for (;;) {
    double best = tol;
    std::size_t ba = n, bb = n;
    for (std::size_t a = 0; a < n; ++a) {
      if (side[a] != 0) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (side[b] != 1) continue;
        const double delta = gain[a] + gain[b] - 2.0 * g.weight(a, b);
        if (delta > best) {
          best = delta;
          ba = a;
          bb = b;
        }
      }
    }
    if (ba == n) break;
    side[ba] = 1;
    side[bb] = 0;
    recompute();
  }
  return {side, cut_weight(g, side), false};
}

}  // namespace

Bisection min_weighted_bisection(const WeightedGraph& g, const BisectionOptions& options) {
  if (g.size() % 2 != 0)
    throw std::invalid_argument("bisection needs an even vertex count, got " + std::to_string(g.size()));
  if (!options.force_heuristic && g.size() <= options.exact_limit && g.size() <= 32) return exact_bisection(g);
  Bisection best;
  best.cut = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1); ++r) {
    Rng rng(derive_seed(options.seed, r));
    auto b = swap_descent(g, rng);
    if (b.cut < best.cut) best = std::move(b);
  }
  return best;
}

// ---- weightloss transform ----

WeightlossGraph build_weightloss_graph(const Instance& inst, const PointSet& cluster, int color, std::size_t r) {
  WeightlossGraph out;
  PointSet others;
  for (PointId p : cluster) (inst.color(p) == color ? out.color_points : others).push_back(p);
  const std::size_t rho = out.color_points.size();
  if (r > rho) throw std::invalid_argument("cannot remove more points than the color holds");
  out.r = r;
  const std::size_t near = 2 * r;  // dummies tied to b0
  const std::size_t far = rho;     // dummies tied to b0'
  const std::size_t total = 2 + rho + near + far;
  WeightedGraph g(total);
  double finite = 0.0;
  for (std::size_t i = 0; i < rho; ++i) {
    const PointId ri = out.color_points[i];
    double w = 0.0;
    for (PointId b : others) w += inst.similarity(ri, b);
    for (std::size_t j = 0; j < rho; ++j)
      if (j != i) w += 0.5 * inst.similarity(ri, out.color_points[j]);
    g.add_edge(0, 2 + i, w);
    finite += w;
    for (std::size_t j = i + 1; j < rho; ++j) {
      const double s = 0.5 * inst.similarity(ri, out.color_points[j]);
      g.add_edge(2 + i, 2 + j, s);
      finite += s;
    }
  }
  out.infinite = 1.0 + finite;
  for (std::size_t d = 0; d < near; ++d) g.add_edge(0, 2 + rho + d, out.infinite);
  for (std::size_t d = 0; d < far; ++d) g.add_edge(1, 2 + rho + near + d, out.infinite);
  out.graph = std::move(g);
  return out;
}

double removal_weight(const Instance& inst, const PointSet& cluster, int color, const PointSet& removed) {
  std::vector<char> in_s(inst.size(), 0);
  for (PointId p : removed) in_s[p] = 1;
  double acc = 0.0;
  for (PointId a : removed) {
    for (PointId b : cluster) {
      if (b == a) continue;
      if (inst.color(b) != color) {
        acc += inst.similarity(a, b);
      } else if (in_s[b]) {
        if (a < b) acc += inst.similarity(a, b);
      } else {
        acc += inst.similarity(a, b);
      }
    }
  }
  return acc;
}

PointSet weightloss_extract(const Instance& inst, const PointSet& cluster, int color, std::size_t r,
                            const BisectionOptions& options) {
  if (r == 0) return {};
  const auto wl = build_weightloss_graph(inst, cluster, color, r);
  if (r == wl.color_points.size()) return wl.color_points;
  const auto cut = min_weighted_bisection(wl.graph, options);
  const char far_side = cut.side[1];
  if (cut.side[0] == far_side || cut.cut >= wl.infinite)
    throw std::runtime_error("bisection failed to separate the anchor vertices");
  PointSet out;
  for (std::size_t i = 0; i < wl.color_points.size(); ++i)
    if (cut.side[2 + i] == far_side) out.push_back(wl.color_points[i]);
  if (out.size() != r) throw std::runtime_error("bisection isolated the wrong number of points");
  return out;
}

FixResult fix_unmatched(const Instance& inst, const Clustering& clusters, const Excess& excess,
                        const ClusteringGraph& graph, const CostParams& params, std::uint64_t seed) {
  FixResult out;
  out.plan = plan_fix_unmatched(clusters, excess, graph, params);
  const std::size_t k = clusters.size();
  std::vector<std::array<std::int64_t, 2>> leaving(k, {0, 0});
  for (const auto& tr : out.plan.transfers) leaving[tr.from][tr.color] += tr.count;

  out.clusters = clusters;
  std::vector<std::array<PointSet, 2>> removed(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (int color : {kRed, kBlue}) {
      const auto r = static_cast<std::size_t>(leaving[c][color]);
      if (r == 0) continue;
      BisectionOptions opt;
      opt.seed = derive_seed(seed, c, static_cast<std::uint64_t>(color));
      auto gone = weightloss_extract(inst, out.clusters[c], color, r, opt);
      std::sort(gone.begin(), gone.end());
      auto& cur = out.clusters[c];
      cur.erase(std::remove_if(cur.begin(), cur.end(),
                               [&](PointId p) { return std::binary_search(gone.begin(), gone.end(), p); }),
                cur.end());
      removed[c][color] = std::move(gone);
    }
  }
  std::vector<std::array<std::size_t, 2>> taken(k, {0, 0});
  for (const auto& tr : out.plan.transfers) {
    auto& src = removed[tr.from][tr.color];
    auto& pos = taken[tr.from][tr.color];
    for (std::int64_t i = 0; i < tr.count; ++i) out.clusters[tr.to].push_back(src[pos++]);
  }
  for (auto& c : out.clusters) std::sort(c.begin(), c.end());

  // M′: pairs inside each cluster first, then across the cluster's component
  out.matching.assign(inst.size(), -1);
  for (const auto& comp : graph.components()) {
    PointSet spare_red, spare_blue;
    for (auto c : comp) {
      PointSet reds, blues;
      for (PointId p : out.clusters[c]) (inst.color(p) == kRed ? reds : blues).push_back(p);
      const std::size_t m = std::min(reds.size(), blues.size());
      for (std::size_t i = 0; i < m; ++i) {
        out.matching[reds[i]] = blues[i];
        out.matching[blues[i]] = reds[i];
      }
      spare_red.insert(spare_red.end(), reds.begin() + static_cast<std::ptrdiff_t>(m), reds.end());
      spare_blue.insert(spare_blue.end(), blues.begin() + static_cast<std::ptrdiff_t>(m), blues.end());
    }
    if (spare_red.size() != spare_blue.size()) throw std::logic_error("component left unbalanced after Step (F)");
    for (std::size_t i = 0; i < spare_red.size(); ++i) {
      out.matching[spare_red[i]] = spare_blue[i];
      out.matching[spare_blue[i]] = spare_red[i];
    }
  }
  return out;
}

nlohmann::json CostReport::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["t"] = params.t;
  j["ell"] = params.ell;
  j["relaxed"] = params.relaxed;
  j["strict_regime"] = strict_regime;
  j["approximation_guarantee"] = approximation_guarantee;
  j["step_b"] = {{"clusters", sizes_maximal.size()}, {"sizes", sizes_maximal}};
  j["step_c"] = {{"clusters", sizes_banded.size()}, {"sizes", sizes_banded}};
  std::map<std::int64_t, std::size_t> hist;
  for (auto e : excess) ++hist[e];
  nlohmann::json h = nlohmann::json::object();
  for (const auto& [value, count] : hist) h[std::to_string(value)] = count;
  j["step_d"] = {{"excess", excess}, {"excess_histogram", h}};
  j["step_e"] = {{"edges", edges},
                 {"edge_matches", edge_matches},
                 {"components", components},
                 {"max_component_size", max_component_size},
                 {"forest", forest},
                 {"leftover_excess", leftover_excess}};
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& t : fix.transfers) tr.push_back({{"from", t.from}, {"to", t.to}, {"color", t.color}, {"count", t.count}});
  j["step_f"] = {{"small_excess_moved", fix.small_excess_moved},
                 {"isolated_pairs", fix.isolated_pairs},
                 {"broken_matches", fix.broken_matches},
                 {"relaxed_pairs", fix.relaxed_pairs},
                 {"used_relaxation", fix.used_relaxation},
                 {"rounds", fix.rounds},
                 {"round_cap", params.round_cap()},
                 {"removed", fix.removed},
                 {"max_removed", max_removed},
                 {"removal_cap", params.removal_cap()},
                 {"transfers", tr},
                 {"sizes", sizes_fixed}};
  j["step_g"] = {{"clusters", sizes_final.size()},
                 {"sizes", sizes_final},
                 {"max_size", max_final_size},
                 {"size_bound", size_bound}};
  j["cost"] = cost;
  j["fair"] = fair;
  return j;
}

CostResult fair_cost_clustering(const Instance& inst, const CostParams& params, std::uint64_t seed,
                                const TreeBuilder& builder) {
  const auto profile = inst.profile();
  if (inst.num_colors() != 2) throw std::invalid_argument("cost pipeline needs exactly two colors");
  if (profile.counts[kRed] != profile.counts[kBlue])
    throw std::invalid_argument("unequal color counts (" + std::to_string(profile.counts[kRed]) + " red, " +
                                std::to_string(profile.counts[kBlue]) + " blue): equal representation is unachievable");
  if (params.t < 1 || params.ell < 1) throw std::invalid_argument("t and ell must be >= 1");
  if (inst.size() < static_cast<std::size_t>(params.t) * static_cast<std::size_t>(params.ell))
    throw std::invalid_argument("need n >= t*ell");

  CostResult out;
  auto& rep = out.report;
  rep.n = inst.size();
  rep.params = params;
  rep.strict_regime = params.strict_regime();
  rep.approximation_guarantee = false;

  const Hierarchy tree = unfair_tree(inst, builder);
  const Clustering maximal = extract_t_maximal(tree, params.t);
  for (const auto& c : maximal) rep.sizes_maximal.push_back(c.size());
  const Clustering banded = combine_to_bands(maximal, params.t);
  for (const auto& c : banded) rep.sizes_banded.push_back(c.size());
  const Excess excess = compute_excess(banded, inst.colors());
  rep.excess = excess.ex;
  out.graph = build_clustering_graph(banded, inst.colors(), excess, params.ell);
  rep.edges = out.graph.edges.size();
  for (const auto& e : out.graph.edges) rep.edge_matches += e.matches;
  rep.components = out.graph.num_components();
  rep.max_component_size = out.graph.max_component_size();
  rep.forest = out.graph.is_forest();
  rep.leftover_excess = std::accumulate(out.graph.unmatched.begin(), out.graph.unmatched.end(), std::int64_t{0});

  auto fixed = fix_unmatched(inst, banded, excess, out.graph, params, seed);
  rep.fix = fixed.plan;
  rep.max_removed = fixed.plan.removed.empty() ? 0 : *std::max_element(fixed.plan.removed.begin(), fixed.plan.removed.end());
  for (const auto& c : fixed.clusters) rep.sizes_fixed.push_back(c.size());
  out.matching = std::move(fixed.matching);

  for (const auto& comp : out.graph.components()) {
    PointSet merged;
    for (auto c : comp) merged.insert(merged.end(), fixed.clusters[c].begin(), fixed.clusters[c].end());
    if (merged.empty()) continue;
    std::sort(merged.begin(), merged.end());
    out.clusters.push_back(std::move(merged));
  }
  std::vector<NodeId> tops;
  for (const auto& c : out.clusters) {
    std::vector<NodeId> leaves;
    for (PointId p : c) leaves.push_back(out.tree.add_leaf(p, inst.weight(p)));
    tops.push_back(leaves.size() == 1 ? leaves[0] : out.tree.add_internal(std::move(leaves)));
    rep.sizes_final.push_back(c.size());
  }
  if (tops.size() > 1) out.tree.add_internal(std::move(tops));
  rep.max_final_size = rep.sizes_final.empty() ? 0 : *std::max_element(rep.sizes_final.begin(), rep.sizes_final.end());
  rep.size_bound = 6 * static_cast<std::size_t>(params.t) * static_cast<std::size_t>(params.ell);
  rep.cost = cost(inst, out.tree).value;
  rep.fair = tree_fairness_check(out.tree, inst.colors(), Alpha(1, 2)).fair;
  return out;
}

}  // namespace fairhc
