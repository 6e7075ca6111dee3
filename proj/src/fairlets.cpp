#include "fairhc/fairlets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fairhc/objectives.hpp"
#include "fairhc/rng.hpp"

namespace fairhc {

FairletDecomposition::FairletDecomposition(const Instance& inst, std::vector<PointSet> fairlets, Alpha alpha)
    : fairlets_(std::move(fairlets)), alpha_(alpha), num_colors_(inst.num_colors()) {
  const std::size_t n = inst.size();
  assignment_.assign(n, -1);
  counts_.assign(fairlets_.size() * static_cast<std::size_t>(num_colors_), 0);
  for (std::size_t k = 0; k < fairlets_.size(); ++k) {
    const auto& y = fairlets_[k];
    if (y.empty()) throw std::invalid_argument("fairlet " + std::to_string(k) + " is empty");
    for (PointId p : y) {
      if (p < 0 || static_cast<std::size_t>(p) >= n)
        throw std::invalid_argument("fairlet " + std::to_string(k) + " holds unknown point " + std::to_string(p));
      if (assignment_[p] != -1)
        throw std::invalid_argument("point " + std::to_string(p) + " lies in two fairlets");
      assignment_[p] = static_cast<std::int32_t>(k);
      ++counts_[k * num_colors_ + inst.color(p)];
    }
    for (int c = 0; c < num_colors_; ++c) {
      const auto r = count(k, c);
      if (!alpha_.admits(static_cast<std::int64_t>(r), static_cast<std::int64_t>(y.size())))
        throw std::invalid_argument("fairlet " + std::to_string(k) + " has " + std::to_string(r) + " of color " +
                                    std::to_string(c) + " among " + std::to_string(y.size()) +
                                    " points, above alpha=" + alpha_.str());
    }
    max_size_ = std::max(max_size_, y.size());
  }
  for (std::size_t p = 0; p < n; ++p)
    if (assignment_[p] == -1) throw std::invalid_argument("point " + std::to_string(p) + " is in no fairlet");
}

nlohmann::json FairletDecomposition::to_json() const { return fairlets_; }

FairletDecomposition FairletDecomposition::from_json(const Instance& inst, const nlohmann::json& j, Alpha alpha) {
  return FairletDecomposition(inst, j.get<std::vector<PointSet>>(), alpha);
}

bool feasible(const ColorProfile& profile, Alpha alpha) { return !violating_color(profile, alpha).has_value(); }

std::optional<int> violating_color(const ColorProfile& profile, Alpha alpha) {
  std::optional<int> worst;
  for (std::size_t c = 0; c < profile.counts.size(); ++c) {
    if (alpha.admits(static_cast<std::int64_t>(profile.counts[c]), static_cast<std::int64_t>(profile.n))) continue;
    if (!worst || profile.counts[c] > profile.counts[*worst]) worst = static_cast<int>(c);
  }
  return worst;
}

namespace {

// Colors by descending count, ties to the smaller id.
std::vector<int> colors_by_count(const std::vector<std::size_t>& counts) {
  std::vector<int> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return counts[a] > counts[b]; });
  return order;
}

std::vector<PointSet> deal(const PointSet& order, std::size_t m) {
  std::vector<PointSet> bins(m);
  for (std::size_t i = 0; i < order.size(); ++i) bins[i % m].push_back(order[i]);
  return bins;
}

bool all_fair(const Instance& inst, const std::vector<PointSet>& sets, Alpha alpha) {
  std::vector<std::int64_t> cnt(inst.num_colors());
  for (const auto& s : sets) {
    std::fill(cnt.begin(), cnt.end(), 0);
    for (PointId p : s) ++cnt[inst.color(p)];
    for (auto c : cnt)
      if (!alpha.admits(c, static_cast<std::int64_t>(s.size()))) return false;
  }
  return true;
}

// Largest number of round-robin bins over the largest-color-first order that
// keeps every bin fair.
std::vector<PointSet> greedy_deal(const Instance& inst, const PointSet& order, Alpha alpha) {
  for (std::size_t m = order.size(); m > 1; --m) {
    auto bins = deal(order, m);
    if (all_fair(inst, bins, alpha)) return bins;
  }
  return {order};
}

// Fairlets of exactly b minority + r majority points; leftovers go to the
// smallest fairlet that can take them. Empty result when this shape fails.
std::vector<PointSet> two_color_fairlets(const std::vector<PointSet>& by_color,
                                         int minority, int majority, Alpha alpha) {
  const auto r = static_cast<std::size_t>(alpha.num());
  const auto b = static_cast<std::size_t>(alpha.den() - alpha.num());
  const auto& lo = by_color[minority];
  const auto& hi = by_color[majority];
  const std::size_t k = std::min(lo.size() / b, hi.size() / r);
  if (k == 0) return {};
  std::vector<PointSet> out(k);
  std::vector<std::int64_t> hi_count(k, static_cast<std::int64_t>(r));
  for (std::size_t f = 0; f < k; ++f) {
    out[f].insert(out[f].end(), lo.begin() + f * b, lo.begin() + (f + 1) * b);
    out[f].insert(out[f].end(), hi.begin() + f * r, hi.begin() + (f + 1) * r);
  }
  std::vector<std::int64_t> lo_count(k, static_cast<std::int64_t>(b));
  auto place = [&](PointId p, bool is_hi) {
    std::size_t best = k;
    for (std::size_t f = 0; f < k; ++f) {
      const auto size = static_cast<std::int64_t>(out[f].size()) + 1;
      const auto nh = hi_count[f] + (is_hi ? 1 : 0);
      const auto nl = lo_count[f] + (is_hi ? 0 : 1);
      if (!alpha.admits(nh, size) || !alpha.admits(nl, size)) continue;
      if (best == k || out[f].size() < out[best].size()) best = f;
    }
    if (best == k) return false;
    out[best].push_back(p);
    (is_hi ? hi_count : lo_count)[best] += 1;
    return true;
  };
  for (std::size_t i = k * r; i < hi.size(); ++i)
    if (!place(hi[i], true)) return {};
  for (std::size_t i = k * b; i < lo.size(); ++i)
    if (!place(lo[i], false)) return {};
  return out;
}

}  // namespace

CapletPartition caplet_partition(const Instance& inst, const PointSet& points, int t) {
  if (t < 1) throw std::invalid_argument("caplet_partition needs t >= 1");
  CapletPartition out;
  const std::size_t p = points.size();
  if (p < static_cast<std::size_t>(t)) {
    out.sets.push_back(points);
    out.warning = "fewer than t=" + std::to_string(t) + " points; returned as a single set";
    return out;
  }
  std::vector<PointSet> by_color(inst.num_colors());
  for (PointId q : points) by_color[inst.color(q)].push_back(q);
  std::vector<std::size_t> counts(by_color.size());
  for (std::size_t c = 0; c < by_color.size(); ++c) counts[c] = by_color[c].size();
  const Alpha alpha(1, t);
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (!alpha.admits(static_cast<std::int64_t>(counts[c]), static_cast<std::int64_t>(p)))
      throw std::invalid_argument("caplet_partition: color " + std::to_string(c) + " exceeds 1/" +
                                  std::to_string(t) + " of the set");
  PointSet order;
  order.reserve(p);
  for (int c : colors_by_count(counts)) order.insert(order.end(), by_color[c].begin(), by_color[c].end());
  out.sets = deal(order, p / static_cast<std::size_t>(t));
  return out;
}

FairletDecomposition initial_decomposition(const Instance& inst, Alpha alpha, std::uint64_t seed) {
  const auto profile = inst.profile();
  if (auto bad = violating_color(profile, alpha))
    throw std::invalid_argument("infeasible: color " + std::to_string(*bad) + " has " +
                                std::to_string(profile.counts[*bad]) + " of " + std::to_string(profile.n) +
                                " points, above alpha=" + alpha.str());
  Rng rng(seed);
  std::vector<PointSet> by_color(inst.num_colors());
  for (std::size_t i = 0; i < inst.size(); ++i) by_color[inst.color(static_cast<PointId>(i))].push_back(static_cast<PointId>(i));
  for (auto& ids : by_color) shuffle_range(ids.begin(), ids.end(), rng);
  const auto color_order = colors_by_count(profile.counts);
  PointSet order;
  for (int c : color_order) order.insert(order.end(), by_color[c].begin(), by_color[c].end());

  if (const auto t = alpha.reciprocal(); t >= 1)
    return FairletDecomposition(inst, caplet_partition(inst, order, static_cast<int>(t)).sets, alpha);

  std::size_t present = 0;
  for (auto k : profile.counts) present += k > 0;
  if (present == 2) {
    const int majority = color_order[0];
    const int minority = color_order[1];
    auto sets = two_color_fairlets(by_color, minority, majority, alpha);
    if (!sets.empty()) return FairletDecomposition(inst, std::move(sets), alpha);
  }
  return FairletDecomposition(inst, greedy_deal(inst, order, alpha), alpha);
}

void SwapTrace::write_csv(std::ostream& out) const {
  auto ratio = [](const std::optional<double>& r) {
    if (!r) return std::string();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *r);
    return std::string(buf);
  };
  char buf[64];
  out << "swap_index,phi,ratio_value\n";
  std::snprintf(buf, sizeof buf, "%.17g", initial_phi);
  out << 0 << ',' << buf << ',' << ratio(initial_ratio_value) << '\n';
  for (const auto& s : swaps) {
    std::snprintf(buf, sizeof buf, "%.17g", s.phi);
    out << s.swap_index << ',' << buf << ',' << ratio(s.ratio_value) << '\n';
  }
}

LocalSearchResult local_search(const Instance& inst, const FairletDecomposition& start,
                               const LocalSearchOptions& options) {
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("local_search needs epsilon > 0");
  if (start.num_points() != inst.size()) throw std::invalid_argument("decomposition does not cover the instance");
  const auto clock_start = std::chrono::steady_clock::now();
  const std::size_t n = inst.size();
  const std::size_t k = start.size();
  std::vector<PointSet> sets = start.fairlets();
  std::vector<std::int32_t> assign = start.assignment();
  std::vector<std::size_t> slot(n);
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t i = 0; i < sets[f].size(); ++i) slot[sets[f][i]] = i;

  // D[u][f] = d(u, Y_f)
  std::vector<double> dist(n * k, 0.0);
  double d_max = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t w = u + 1; w < n; ++w) {
      const double d = inst.distance(static_cast<PointId>(u), static_cast<PointId>(w));
      dist[u * k + assign[w]] += d;
      dist[w * k + assign[u]] += d;
      d_max = std::max(d_max, d);
    }
  }
  std::vector<PointSet> same_color(inst.num_colors());
  for (std::size_t u = 0; u < n; ++u) same_color[inst.color(static_cast<PointId>(u))].push_back(static_cast<PointId>(u));

  LocalSearchResult result;
  auto& trace = result.trace;
  result.delta = static_cast<double>(start.max_size()) / static_cast<double>(n) * d_max;
  double phi = fairlet_phi(inst, start);
  trace.initial_phi = phi;
  if (options.sampler) trace.initial_ratio_value = options.sampler(start);
  const double factor = 1.0 + options.epsilon / static_cast<double>(n);

  auto swapped_phi = [&](std::size_t u, std::size_t v) {
    const std::size_t i = assign[u], j = assign[v];
    const double d_uv = inst.distance(static_cast<PointId>(u), static_cast<PointId>(v));
    const double next = phi - dist[u * k + i] - dist[v * k + j] + dist[u * k + j] + dist[v * k + i] - 2.0 * d_uv;
    return std::max(next, 0.0);
  };
  auto improves = [&](double next) { return phi >= factor * next && next < phi; };
  auto apply = [&](std::size_t u, std::size_t v, double next) {
    const std::size_t i = assign[u], j = assign[v];
    for (std::size_t w = 0; w < n; ++w) {
      const double du = inst.distance(static_cast<PointId>(w), static_cast<PointId>(u));
      const double dv = inst.distance(static_cast<PointId>(w), static_cast<PointId>(v));
      dist[w * k + i] += dv - du;
      dist[w * k + j] += du - dv;
    }
    std::swap(sets[i][slot[u]], sets[j][slot[v]]);
    std::swap(slot[u], slot[v]);
    std::swap(assign[u], assign[v]);
    phi = next;
    TracePoint tp{trace.swaps.size() + 1, phi, std::nullopt};
    if (options.sampler && options.sample_every > 0 && tp.swap_index % options.sample_every == 0)
      tp.ratio_value = options.sampler(FairletDecomposition(inst, sets, start.alpha()));
    trace.swaps.push_back(tp);
  };

  if (options.stop_rule == StopRule::exhaustive) {
    for (;;) {
      if (!(phi > result.delta)) {
        result.stopped_at_delta = true;
        break;
      }
      bool found = false;
      for (std::size_t u = 0; u < n && !found; ++u) {
        const auto& peers = same_color[inst.color(static_cast<PointId>(u))];
        auto it = std::upper_bound(peers.begin(), peers.end(), static_cast<PointId>(u));
        for (; it != peers.end(); ++it) {
          const auto v = static_cast<std::size_t>(*it);
          if (assign[u] == assign[v]) continue;
          const double next = swapped_phi(u, v);
          if (improves(next)) {
            apply(u, v, next);
            found = true;
            break;
          }
          ++trace.failed_attempts;
        }
      }
      if (!found) break;
    }
  } else {
    const std::size_t limit = options.max_failures ? options.max_failures : 2 * n;
    Rng rng(options.seed);
    std::size_t streak = 0;
    while (streak < limit) {
      if (!(phi > result.delta)) {
        result.stopped_at_delta = true;
        break;
      }
      const auto u = static_cast<std::size_t>(uniform_index(rng, n));
      const auto& peers = same_color[inst.color(static_cast<PointId>(u))];
      const auto v = static_cast<std::size_t>(peers[uniform_index(rng, peers.size())]);
      if (assign[u] != assign[v]) {
        const double next = swapped_phi(u, v);
        if (improves(next)) {
          apply(u, v, next);
          streak = 0;
          continue;
        }
      }
      ++streak;
      ++trace.failed_attempts;
    }
  }
  result.decomposition = FairletDecomposition(inst, std::move(sets), start.alpha());
  trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return result;
}

double fairlet_phi(const Instance& inst, const FairletDecomposition& y) {
  return fairlet_phi(inst, std::span<const PointSet>(y.fairlets()));
}

double max_color_ratio(const Instance& inst, const FairletDecomposition& y) {
  const auto profile = inst.profile();
  double best = 0.0;
  for (std::size_t f = 0; f < y.size(); ++f)
    for (int c = 0; c < inst.num_colors(); ++c)
      if (profile.counts[c] > 0)
        best = std::max(best, static_cast<double>(y.count(f, c)) / static_cast<double>(profile.counts[c]));
  return best;
}

double phi_bound(const Instance& inst, const FairletDecomposition& y, double epsilon) {
  return (1.0 + epsilon) * max_color_ratio(inst, y) * total_sum(inst, MetricMode::distance);
}

double phi_bound_two_color(double d_total, std::size_t n, std::size_t b, std::size_t r, double epsilon) {
  return (1.0 + epsilon) * (2.0 * static_cast<double>(b + r) / static_cast<double>(n)) * d_total;
}

double swap_threshold(const Instance& inst, const FairletDecomposition& y) {
  double d_max = 0.0;
  for (std::size_t u = 0; u < inst.size(); ++u)
    for (std::size_t w = u + 1; w < inst.size(); ++w)
      d_max = std::max(d_max, inst.distance(static_cast<PointId>(u), static_cast<PointId>(w)));
  return static_cast<double>(y.max_size()) / static_cast<double>(inst.size()) * d_max;
}

Instance reduced_instance(const Instance& inst, const FairletDecomposition& y, MetricMode mode) {
  const std::size_t k = y.size();
  CondensedMatrix m(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) m.set(a, b, pair_sums(inst, y[a], y[b], mode));
  std::vector<std::int64_t> weights(k, 0);
  for (std::size_t a = 0; a < k; ++a)
    for (PointId p : y[a]) weights[a] += inst.weight(p);
  std::vector<int> colors(k, 0);
  if (mode == MetricMode::distance) return Instance::from_distances(std::move(m), std::move(colors), std::move(weights), 1);
  return Instance::from_similarities(std::move(m), std::move(colors), std::move(weights), 1);
}

}  // namespace fairhc
