#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "fairhc/types.hpp"

namespace fairhc {

// Packed strict upper triangle of a symmetric matrix with zero diagonal.
class CondensedMatrix {
 public:
  CondensedMatrix() = default;
  explicit CondensedMatrix(std::size_t n) : n_(n), data_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return data_[index(i, j)];
  }
  void set(std::size_t i, std::size_t j, double v) { data_[index(i, j)] = v; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

enum class MetricSource { euclidean, distance_matrix, similarity_matrix };

struct ColorProfile {
  std::vector<std::size_t> counts;
  std::size_t n = 0;

  std::size_t max_count() const;
  std::size_t min_count() const;
  // min-count / max-count over colors present in the palette
  double balance() const;
};

inline constexpr std::size_t kDefaultCacheLimit = 8192;

class Instance {
 public:
  Instance() = default;

  static Instance from_coords(std::vector<double> coords, std::size_t dim, std::vector<int> colors,
                              std::vector<std::int64_t> weights = {}, int num_colors = -1,
                              std::size_t cache_limit = kDefaultCacheLimit);
  static Instance from_coords(const std::vector<std::vector<double>>& rows, std::vector<int> colors,
                              std::vector<std::int64_t> weights = {}, int num_colors = -1);
  static Instance from_distances(CondensedMatrix d, std::vector<int> colors,
                                 std::vector<std::int64_t> weights = {}, int num_colors = -1);
  // Explicit similarities; distance queries are unavailable on such instances.
  static Instance from_similarities(CondensedMatrix s, std::vector<int> colors,
                                    std::vector<std::int64_t> weights = {}, int num_colors = -1);

  std::size_t size() const { return colors_.size(); }
  int num_colors() const { return num_colors_; }
  int color(PointId i) const { return colors_[i]; }
  std::int64_t weight(PointId i) const { return weights_[i]; }
  std::int64_t total_weight() const { return total_weight_; }
  const std::vector<int>& colors() const { return colors_; }
  const std::vector<std::int64_t>& weights() const { return weights_; }
  bool unit_weights() const { return total_weight_ == static_cast<std::int64_t>(size()); }

  MetricSource source() const { return source_; }
  bool has_distance() const { return source_ != MetricSource::similarity_matrix; }
  bool has_coords() const { return source_ == MetricSource::euclidean; }
  std::size_t dim() const { return dim_; }
  std::span<const double> coords(PointId i) const { return {coords_.data() + i * dim_, dim_}; }

  double distance(PointId i, PointId j) const;
  // s = 1/(1+d) unless explicit similarities were supplied
  double similarity(PointId i, PointId j) const;
  double metric(MetricMode mode, PointId i, PointId j) const {
    return mode == MetricMode::distance ? distance(i, j) : similarity(i, j);
  }

  // Row index in the originating file (or parent instance) per point.
  const std::vector<std::size_t>& source_rows() const { return source_rows_; }
  void set_source_rows(std::vector<std::size_t> rows);

  ColorProfile profile() const;
  Instance subset(std::span<const PointId> ids) const;

  nlohmann::json to_json() const;
  static Instance from_json(const nlohmann::json& j);

 private:
  void finish(std::vector<int> colors, std::vector<std::int64_t> weights, int num_colors);
  double raw_euclidean(PointId i, PointId j) const;

  MetricSource source_ = MetricSource::euclidean;
  std::vector<int> colors_;
  std::vector<std::int64_t> weights_;
  std::int64_t total_weight_ = 0;
  int num_colors_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  CondensedMatrix matrix_;  // distances, similarities, or a cache of euclidean distances
  bool cached_ = false;
  std::vector<std::size_t> source_rows_;
};

// Maps a raw column value to a color id. Either categorical (exact string
// match with an optional "*" fallback) or numeric half-open ranges (lo, hi].
class ColorRule {
 public:
  struct Range {
    double lo;
    double hi;
    int color;
  };

  ColorRule() = default;
  static ColorRule categorical(std::map<std::string, int> mapping, std::optional<int> fallback = {});
  static ColorRule ranges(std::vector<Range> ranges);
  // "F=0,M=1" / "F=0,*=1" / "range:0-26=3,26-38=0,38-48=1,48-inf=2"
  static ColorRule parse(const std::string& text);
  static ColorRule from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // nullopt when the value is not covered by the rule
  std::optional<int> color_of(const std::string& value) const;
  int num_colors() const;
  bool is_categorical() const { return ranges_.empty(); }

 private:
  std::map<std::string, int> mapping_;
  std::optional<int> fallback_;
  std::vector<Range> ranges_;
};

struct CsvSpec {
  std::vector<std::string> feature_columns;
  std::string color_column;
  ColorRule color_rule;
  bool normalize = false;  // per-feature min-max scaling to [0,1]
  std::size_t cache_limit = kDefaultCacheLimit;
};

Instance load_csv(const std::string& path, const CsvSpec& spec);

// Parses CSV text into records, honoring quotes. Each record carries the
// 1-based line number it starts on.
struct CsvRecord {
  std::size_t line;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> parse_csv(const std::string& text);

// Proportional per-color sample; ids of the result index into the new instance,
// source_rows() refers back to the parent's rows.
Instance subsample(const Instance& inst, std::size_t size, std::uint64_t seed);
std::vector<std::size_t> subsample_quotas(const ColorProfile& profile, std::size_t size);

// Σ_{a∈A,b∈B} metric(a,b); A == B gives twice the unordered intra sum.
double pair_sums(const Instance& inst, std::span<const PointId> a, std::span<const PointId> b,
                 MetricMode mode);
// Σ over unordered pairs within A.
double self_sum(const Instance& inst, std::span<const PointId> a, MetricMode mode);
// d(V) or s(V)
double total_sum(const Instance& inst, MetricMode mode);

// Pairwise (cascade) summation of a buffer, used by every pair loop.
double pairwise_sum(std::span<const double> values);

}  // namespace fairhc
