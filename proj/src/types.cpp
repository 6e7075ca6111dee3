#include "fairhc/types.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>

namespace fairhc {

const char* to_string(MetricMode mode) { return mode == MetricMode::distance ? "distance" : "similarity"; }

const char* to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::revenue: return "revenue";
    case ObjectiveKind::value: return "value";
    case ObjectiveKind::cost: return "cost";
    case ObjectiveKind::fairlet_phi: return "fairlet_phi";
  }
  return "?";
}

MetricMode parse_metric_mode(std::string_view text) {
  if (text == "distance") return MetricMode::distance;
  if (text == "similarity") return MetricMode::similarity;
  throw std::invalid_argument("unknown metric mode: " + std::string(text));
}

ObjectiveKind parse_objective(std::string_view text) {
  if (text == "revenue") return ObjectiveKind::revenue;
  if (text == "value") return ObjectiveKind::value;
  if (text == "cost") return ObjectiveKind::cost;
  if (text == "fairlet_phi") return ObjectiveKind::fairlet_phi;
  throw std::invalid_argument("unknown objective: " + std::string(text));
}

Alpha::Alpha(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num <= 0 || num > den)
    throw std::invalid_argument("alpha must lie in (0,1], got " + std::to_string(num) + "/" +
                                std::to_string(den));
  const auto g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Alpha Alpha::parse(std::string_view text) {
  auto to_int = [&](std::string_view part) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size())
      throw std::invalid_argument("cannot parse alpha: " + std::string(text));
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Alpha(to_int(text), 1);
  return Alpha(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
}

std::string Alpha::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace fairhc
