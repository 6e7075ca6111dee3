#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "fairhc/instance.hpp"

namespace fairhc {

class FairletDecomposition {
 public:
  FairletDecomposition() = default;
  // Validates coverage, disjointness and the alpha cap; throws std::invalid_argument.
  FairletDecomposition(const Instance& inst, std::vector<PointSet> fairlets, Alpha alpha);

  const std::vector<PointSet>& fairlets() const { return fairlets_; }
  std::size_t size() const { return fairlets_.size(); }
  const PointSet& operator[](std::size_t k) const { return fairlets_[k]; }
  Alpha alpha() const { return alpha_; }
  // r_{i,k}: count of color i in fairlet k
  std::size_t count(std::size_t k, int color) const { return counts_[k * num_colors_ + color]; }
  int num_colors() const { return num_colors_; }
  std::size_t max_size() const { return max_size_; }
  std::size_t num_points() const { return assignment_.size(); }
  // fairlet index of each point
  const std::vector<std::int32_t>& assignment() const { return assignment_; }

  nlohmann::json to_json() const;
  static FairletDecomposition from_json(const Instance& inst, const nlohmann::json& j, Alpha alpha);

 private:
  std::vector<PointSet> fairlets_;
  Alpha alpha_;
  int num_colors_ = 0;
  std::vector<std::size_t> counts_;
  std::size_t max_size_ = 0;
  std::vector<std::int32_t> assignment_;
};

// max_i n_i <= alpha·n
bool feasible(const ColorProfile& profile, Alpha alpha);
// color with the largest count when infeasible
std::optional<int> violating_color(const ColorProfile& profile, Alpha alpha);

FairletDecomposition initial_decomposition(const Instance& inst, Alpha alpha, std::uint64_t seed);

struct CapletPartition {
  std::vector<PointSet> sets;
  std::optional<std::string> warning;
};

// Round-robin deal of the color-sorted points into floor(|P|/t) sets. Points
// of one color keep their relative input order.
CapletPartition caplet_partition(const Instance& inst, const PointSet& points, int t);

enum class StopRule { exhaustive, randomized };

struct TracePoint {
  std::size_t swap_index = 0;
  double phi = 0.0;
  std::optional<double> ratio_value;
};

struct SwapTrace {
  double initial_phi = 0.0;
  std::optional<double> initial_ratio_value;
  std::vector<TracePoint> swaps;  // one entry per accepted swap
  std::size_t failed_attempts = 0;
  double seconds = 0.0;

  std::size_t accepted() const { return swaps.size(); }
  double final_phi() const { return swaps.empty() ? initial_phi : swaps.back().phi; }
  // swap_index,phi,ratio_value; row 0 is the starting state
  void write_csv(std::ostream& out) const;
};

struct LocalSearchOptions {
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  StopRule stop_rule = StopRule::randomized;
  std::size_t max_failures = 0;  // 0 means 2n
  std::size_t sample_every = 100;
  // Called on the start state and every sample_every accepted swaps.
  std::function<double(const FairletDecomposition&)> sampler;
};

struct LocalSearchResult {
  FairletDecomposition decomposition;
  SwapTrace trace;
  bool stopped_at_delta = false;  // φ <= Δ ended the search
  double delta = 0.0;
};

LocalSearchResult local_search(const Instance& inst, const FairletDecomposition& start,
                               const LocalSearchOptions& options);

double fairlet_phi(const Instance& inst, const FairletDecomposition& y);

// max_{i,k} r_{i,k}/n_i over colors present in the instance
double max_color_ratio(const Instance& inst, const FairletDecomposition& y);
// (1+ε)·max_{i,k}(r_{i,k}/n_i)·d(V)
double phi_bound(const Instance& inst, const FairletDecomposition& y, double epsilon);
// (1+ε)·(2(b+r)/n)·d(V)
double phi_bound_two_color(double d_total, std::size_t n, std::size_t b, std::size_t r, double epsilon);
// Δ = (m_f/n)·d_max
double swap_threshold(const Instance& inst, const FairletDecomposition& y);

// One point per fairlet, weights summed, metric = pair sums between fairlets.
Instance reduced_instance(const Instance& inst, const FairletDecomposition& y, MetricMode mode);

}  // namespace fairhc
