#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fairhc {

using PointId = std::int32_t;
using PointSet = std::vector<PointId>;
using Clustering = std::vector<PointSet>;

enum class MetricMode { distance, similarity };

enum class ObjectiveKind { revenue, value, cost, fairlet_phi };

const char* to_string(MetricMode mode);
const char* to_string(ObjectiveKind kind);
MetricMode parse_metric_mode(std::string_view text);
ObjectiveKind parse_objective(std::string_view text);

// Rational cap on color share, num/den in lowest terms, 0 < num/den <= 1.
class Alpha {
 public:
  Alpha() = default;
  Alpha(std::int64_t num, std::int64_t den);

  // Accepts "p/q" or a plain integer ("1").
  static Alpha parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // count <= alpha * size, in exact integer arithmetic
  bool admits(std::int64_t count, std::int64_t size) const { return count * den_ <= num_ * size; }
  // Largest count allowed in a set of the given size.
  std::int64_t cap(std::int64_t size) const { return (num_ * size) / den_; }
  // t when alpha = 1/t, 0 otherwise
  std::int64_t reciprocal() const { return num_ == 1 ? den_ : 0; }

  std::string str() const;
  bool operator==(const Alpha&) const = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 2;
};

}  // namespace fairhc
