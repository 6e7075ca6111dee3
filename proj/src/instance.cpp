#include "fairhc/instance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fairhc/rng.hpp"

namespace fairhc {

std::size_t ColorProfile::max_count() const {
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

std::size_t ColorProfile::min_count() const {
  return counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
}

double ColorProfile::balance() const {
  const auto hi = max_count();
  return hi == 0 ? 0.0 : static_cast<double>(min_count()) / static_cast<double>(hi);
}

void Instance::finish(std::vector<int> colors, std::vector<std::int64_t> weights, int num_colors) {
  const std::size_t n = colors.size();
  if (n == 0) throw std::invalid_argument("instance needs at least one point");
  if (weights.empty()) weights.assign(n, 1);
  if (weights.size() != n) throw std::invalid_argument("weights/colors length mismatch");
  int max_color = -1;
  for (int c : colors) {
    if (c < 0) throw std::invalid_argument("negative color id");
    max_color = std::max(max_color, c);
  }
  if (num_colors < 0) num_colors = max_color + 1;
  if (max_color >= num_colors) throw std::invalid_argument("color id outside 0..c-1");
  total_weight_ = 0;
  for (auto w : weights) {
    if (w < 1) throw std::invalid_argument("point weights must be >= 1");
    total_weight_ += w;
  }
  colors_ = std::move(colors);
  weights_ = std::move(weights);
  num_colors_ = num_colors;
  source_rows_.resize(n);
  std::iota(source_rows_.begin(), source_rows_.end(), std::size_t{0});
}

Instance Instance::from_coords(std::vector<double> coords, std::size_t dim, std::vector<int> colors,
                               std::vector<std::int64_t> weights, int num_colors,
                               std::size_t cache_limit) {
  Instance inst;
  const std::size_t n = colors.size();
  if (dim == 0 || coords.size() != n * dim) throw std::invalid_argument("coordinate array has wrong shape");
  for (double x : coords)
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite coordinate");
  inst.source_ = MetricSource::euclidean;
  inst.dim_ = dim;
  inst.coords_ = std::move(coords);
  inst.finish(std::move(colors), std::move(weights), num_colors);
  if (n <= cache_limit) {
    inst.matrix_ = CondensedMatrix(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        inst.matrix_.set(i, j, inst.raw_euclidean(static_cast<PointId>(i), static_cast<PointId>(j)));
    inst.cached_ = true;
  }
  return inst;
}

Instance Instance::from_coords(const std::vector<std::vector<double>>& rows, std::vector<int> colors,
                               std::vector<std::int64_t> weights, int num_colors) {
  if (rows.empty()) throw std::invalid_argument("instance needs at least one point");
  const std::size_t dim = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw std::invalid_argument("ragged coordinate rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return from_coords(std::move(flat), dim, std::move(colors), std::move(weights), num_colors);
}

static void check_matrix(const CondensedMatrix& m, std::size_t n) {
  if (m.size() != n) throw std::invalid_argument("matrix order does not match point count");
  for (double v : m.data())
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("matrix entries must be finite and >= 0");
}

Instance Instance::from_distances(CondensedMatrix d, std::vector<int> colors,
                                  std::vector<std::int64_t> weights, int num_colors) {
  Instance inst;
  check_matrix(d, colors.size());
  inst.source_ = MetricSource::distance_matrix;
  inst.matrix_ = std::move(d);
  inst.cached_ = true;
  inst.finish(std::move(colors), std::move(weights), num_colors);
  return inst;
}

Instance Instance::from_similarities(CondensedMatrix s, std::vector<int> colors,
                                     std::vector<std::int64_t> weights, int num_colors) {
  Instance inst;
  check_matrix(s, colors.size());
  inst.source_ = MetricSource::similarity_matrix;
  inst.matrix_ = std::move(s);
  inst.cached_ = true;
  inst.finish(std::move(colors), std::move(weights), num_colors);
  return inst;
}

double Instance::raw_euclidean(PointId i, PointId j) const {
  const double* a = coords_.data() + static_cast<std::size_t>(i) * dim_;
  const double* b = coords_.data() + static_cast<std::size_t>(j) * dim_;
  double acc = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) {
    const double t = a[k] - b[k];
    acc += t * t;
  }
  return std::sqrt(acc);
}

double Instance::distance(PointId i, PointId j) const {
  if (i == j) return 0.0;
  switch (source_) {
    case MetricSource::similarity_matrix:
      throw std::logic_error("distance queried on a similarity-only instance");
    case MetricSource::distance_matrix:
      return matrix_(i, j);
    case MetricSource::euclidean:
      return cached_ ? matrix_(i, j) : raw_euclidean(i, j);
  }
  return 0.0;
}

double Instance::similarity(PointId i, PointId j) const {
  if (source_ == MetricSource::similarity_matrix) return i == j ? 1.0 : matrix_(i, j);
  return 1.0 / (1.0 + distance(i, j));
}

void Instance::set_source_rows(std::vector<std::size_t> rows) {
  if (rows.size() != size()) throw std::invalid_argument("source_rows length mismatch");
  source_rows_ = std::move(rows);
}

ColorProfile Instance::profile() const {
  ColorProfile p;
  p.counts.assign(static_cast<std::size_t>(num_colors_), 0);
  for (int c : colors_) ++p.counts[c];
  p.n = colors_.size();
  return p;
}

Instance Instance::subset(std::span<const PointId> ids) const {
  if (ids.empty()) throw std::invalid_argument("empty subset");
  std::vector<int> colors;
  std::vector<std::int64_t> weights;
  std::vector<std::size_t> rows;
  colors.reserve(ids.size());
  weights.reserve(ids.size());
  for (PointId p : ids) {
    if (p < 0 || static_cast<std::size_t>(p) >= size()) throw std::out_of_range("subset id out of range");
    colors.push_back(colors_[p]);
    weights.push_back(weights_[p]);
    rows.push_back(source_rows_[p]);
  }
  Instance out;
  const std::size_t k = ids.size();
  if (source_ == MetricSource::euclidean) {
    std::vector<double> coords;
    coords.reserve(k * dim_);
    for (PointId p : ids) {
      auto row = this->coords(p);
      coords.insert(coords.end(), row.begin(), row.end());
    }
    out = from_coords(std::move(coords), dim_, std::move(colors), std::move(weights), num_colors_,
                      cached_ ? std::numeric_limits<std::size_t>::max() : 0);
  } else {
    CondensedMatrix m(k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) m.set(a, b, matrix_(ids[a], ids[b]));
    out = source_ == MetricSource::distance_matrix
              ? from_distances(std::move(m), std::move(colors), std::move(weights), num_colors_)
              : from_similarities(std::move(m), std::move(colors), std::move(weights), num_colors_);
  }
  out.source_rows_ = std::move(rows);
  return out;
}

nlohmann::json Instance::to_json() const {
  nlohmann::json j;
  j["n"] = size();
  j["c"] = num_colors_;
  j["colors"] = colors_;
  j["weights"] = weights_;
  if (source_ == MetricSource::euclidean) {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < size(); ++i) {
      auto r = coords(static_cast<PointId>(i));
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["coords"] = std::move(rows);
  } else {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < size(); ++i) {
      std::vector<double> r(size());
      for (std::size_t k = 0; k < size(); ++k) r[k] = matrix_(i, k);
      rows.push_back(std::move(r));
    }
    j["matrix"] = std::move(rows);
    j["matrix_kind"] = source_ == MetricSource::distance_matrix ? "distance" : "similarity";
  }
  return j;
}

Instance Instance::from_json(const nlohmann::json& j) {
  auto colors = j.at("colors").get<std::vector<int>>();
  std::vector<std::int64_t> weights;
  if (j.contains("weights")) weights = j.at("weights").get<std::vector<std::int64_t>>();
  const int c = j.value("c", -1);
  if (j.contains("n") && j.at("n").get<std::size_t>() != colors.size())
    throw std::invalid_argument("instance json: n does not match colors");
  if (colors.size() < 2) throw std::invalid_argument("instance json: need n >= 2");
  if (j.contains("coords")) {
    return from_coords(j.at("coords").get<std::vector<std::vector<double>>>(), std::move(colors),
                       std::move(weights), c);
  }
  if (!j.contains("matrix")) throw std::invalid_argument("instance json: need coords or matrix");
  const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
  const std::size_t n = colors.size();
  if (rows.size() != n) throw std::invalid_argument("instance json: matrix order mismatch");
  CondensedMatrix m(n);
  for (std::size_t a = 0; a < n; ++a) {
    if (rows[a].size() != n) throw std::invalid_argument("instance json: matrix row length mismatch");
    if (rows[a][a] != 0.0 && j.value("matrix_kind", "distance") == "distance")
      throw std::invalid_argument("instance json: nonzero diagonal");
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rows[a][b] != rows[b][a]) throw std::invalid_argument("instance json: asymmetric matrix");
      m.set(a, b, rows[a][b]);
    }
  }
  if (j.value("matrix_kind", "distance") == "similarity")
    return from_similarities(std::move(m), std::move(colors), std::move(weights), c);
  return from_distances(std::move(m), std::move(colors), std::move(weights), c);
}

// ---- color rules ----

ColorRule ColorRule::categorical(std::map<std::string, int> mapping, std::optional<int> fallback) {
  ColorRule r;
  r.mapping_ = std::move(mapping);
  r.fallback_ = fallback;
  return r;
}

ColorRule ColorRule::ranges(std::vector<Range> ranges) {
  if (ranges.empty()) throw std::invalid_argument("range color rule needs at least one range");
  for (const auto& rg : ranges)
    if (!(rg.lo < rg.hi) || rg.color < 0) throw std::invalid_argument("bad color range");
  ColorRule r;
  r.ranges_ = std::move(ranges);
  return r;
}

static std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

static std::optional<double> parse_double(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

static std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

ColorRule ColorRule::parse(const std::string& text) {
  const std::string body = trim(text);
  if (body.rfind("range:", 0) == 0) {
    std::vector<Range> rs;
    for (const auto& item : split(body.substr(6), ',')) {
      const auto eq = item.rfind('=');
      // the separator between bounds is the first '-' that is not a sign
      const auto dash = item.find('-', 1);
      if (eq == std::string::npos || dash == std::string::npos || dash > eq)
        throw std::invalid_argument("bad range item: " + item);
      auto lo = parse_double(item.substr(0, dash));
      auto hi = parse_double(item.substr(dash + 1, eq - dash - 1));
      auto col = parse_double(item.substr(eq + 1));
      if (!lo || !hi || !col) throw std::invalid_argument("bad range item: " + item);
      rs.push_back({*lo, *hi, static_cast<int>(*col)});
    }
    return ranges(std::move(rs));
  }
  std::map<std::string, int> mapping;
  std::optional<int> fallback;
  for (const auto& item : split(body, ',')) {
    const auto eq = item.rfind('=');
    if (eq == std::string::npos) throw std::invalid_argument("bad color mapping item: " + item);
    const std::string key = trim(item.substr(0, eq));
    const auto col = parse_double(item.substr(eq + 1));
    if (!col || *col < 0) throw std::invalid_argument("bad color id in: " + item);
    if (key == "*")
      fallback = static_cast<int>(*col);
    else
      mapping[key] = static_cast<int>(*col);
  }
  return categorical(std::move(mapping), fallback);
}

ColorRule ColorRule::from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse(j.get<std::string>());
  if (j.contains("ranges")) {
    std::vector<Range> rs;
    for (const auto& r : j.at("ranges")) {
      auto bound = [](const nlohmann::json& v) {
        if (v.is_string()) return *parse_double(v.get<std::string>());
        return v.get<double>();
      };
      rs.push_back({bound(r.at(0)), bound(r.at(1)), r.at(2).get<int>()});
    }
    return ranges(std::move(rs));
  }
  std::map<std::string, int> mapping;
  std::optional<int> fallback;
  for (auto it = j.at("map").begin(); it != j.at("map").end(); ++it) {
    if (it.key() == "*")
      fallback = it.value().get<int>();
    else
      mapping[it.key()] = it.value().get<int>();
  }
  return categorical(std::move(mapping), fallback);
}

nlohmann::json ColorRule::to_json() const {
  nlohmann::json j;
  if (!ranges_.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& r : ranges_) {
      auto b = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
      };
      arr.push_back({b(r.lo), b(r.hi), r.color});
    }
    j["ranges"] = std::move(arr);
    return j;
  }
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : mapping_) m[k] = v;
  if (fallback_) m["*"] = *fallback_;
  j["map"] = std::move(m);
  return j;
}

std::optional<int> ColorRule::color_of(const std::string& value) const {
  if (!ranges_.empty()) {
    const auto v = parse_double(value);
    if (!v) return std::nullopt;
    for (const auto& r : ranges_)
      if (*v > r.lo && *v <= r.hi) return r.color;
    return std::nullopt;
  }
  const std::string key = trim(value);
  if (auto it = mapping_.find(key); it != mapping_.end()) return it->second;
  return fallback_;
}

int ColorRule::num_colors() const {
  int hi = -1;
  for (const auto& r : ranges_) hi = std::max(hi, r.color);
  for (const auto& [k, v] : mapping_) hi = std::max(hi, v);
  if (fallback_) hi = std::max(hi, *fallback_);
  return hi + 1;
}

// ---- CSV ----

std::vector<CsvRecord> parse_csv(const std::string& text) {
  std::vector<CsvRecord> out;
  CsvRecord rec{1, {}};
  std::string field;
  bool in_quotes = false;
  bool any = false;  // current record has content
  std::size_t line = 1;
  std::size_t i = 0;
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
    i = 3;  // UTF-8 BOM
  auto end_record = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    if (any || rec.fields.size() > 1 || !rec.fields.front().empty()) out.push_back(std::move(rec));
    rec = CsvRecord{line, {}};
    any = false;
  };
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_quotes = true;
        any = true;
        break;
      case ',':
        rec.fields.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(ch);
    }
  }
  if (in_quotes) throw std::runtime_error("csv: unterminated quoted field starting near line " +
                                          std::to_string(rec.line));
  if (any || !field.empty()) end_record();
  return out;
}

Instance load_csv(const std::string& path, const CsvSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto records = parse_csv(buf.str());
  if (records.empty()) throw std::runtime_error(path + ": empty file");
  const auto& header = records.front().fields;
  auto column = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (trim(header[k]) == name) return k;
    throw std::runtime_error(path + ": no column named '" + name + "'");
  };
  if (spec.feature_columns.empty()) throw std::invalid_argument("no feature columns selected");
  std::vector<std::size_t> feat;
  for (const auto& f : spec.feature_columns) feat.push_back(column(f));
  const std::size_t color_col = column(spec.color_column);

  std::vector<double> coords;
  std::vector<int> colors;
  std::vector<std::size_t> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size())
      throw std::runtime_error(path + ":" + std::to_string(rec.line) + ": expected " +
                               std::to_string(header.size()) + " fields, found " +
                               std::to_string(rec.fields.size()));
    bool empty = trim(rec.fields[color_col]).empty();
    for (auto k : feat) empty = empty || trim(rec.fields[k]).empty();
    if (empty) continue;
    for (auto k : feat) {
      const auto v = parse_double(rec.fields[k]);
      if (!v || !std::isfinite(*v))
        throw std::runtime_error(path + ":" + std::to_string(rec.line) + ": cannot parse '" + rec.fields[k] +
                                 "' in column '" + header[k] + "' as a number");
      coords.push_back(*v);
    }
    const auto c = spec.color_rule.color_of(rec.fields[color_col]);
    if (!c)
      throw std::runtime_error(path + ":" + std::to_string(rec.line) + ": color rule has no entry for value '" +
                               trim(rec.fields[color_col]) + "'");
    colors.push_back(*c);
    rows.push_back(r - 1);
  }
  if (colors.size() < 2) throw std::runtime_error(path + ": fewer than two usable rows");
  const std::size_t dim = feat.size();
  if (spec.normalize) {
    for (std::size_t k = 0; k < dim; ++k) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < colors.size(); ++i) {
        lo = std::min(lo, coords[i * dim + k]);
        hi = std::max(hi, coords[i * dim + k]);
      }
      for (std::size_t i = 0; i < colors.size(); ++i)
        coords[i * dim + k] = hi > lo ? (coords[i * dim + k] - lo) / (hi - lo) : 0.0;
    }
  }
  auto inst = Instance::from_coords(std::move(coords), dim, std::move(colors), {},
                                    std::max(spec.color_rule.num_colors(), 1), spec.cache_limit);
  inst.set_source_rows(std::move(rows));
  return inst;
}

// ---- sampling ----

std::vector<std::size_t> subsample_quotas(const ColorProfile& profile, std::size_t size) {
  const std::size_t n = profile.n;
  const std::size_t c = profile.counts.size();
  std::size_t present = 0;
  for (auto k : profile.counts) present += k > 0;
  if (size > n) throw std::invalid_argument("subsample size exceeds instance size");
  if (size < present)
    throw std::invalid_argument("subsample size " + std::to_string(size) + " is smaller than the " +
                                std::to_string(present) + " colors present");
  std::vector<std::int64_t> q(c, 0);
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < c; ++i) {
    const auto ni = static_cast<std::int64_t>(profile.counts[i]);
    // round half up of size*ni/n in integers
    q[i] = (2 * static_cast<std::int64_t>(size) * ni + static_cast<std::int64_t>(n)) /
           (2 * static_cast<std::int64_t>(n));
    if (ni > 0) q[i] = std::max<std::int64_t>(q[i], 1);
    sum += q[i];
  }
  // residue goes to the largest colors first, one unit each
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return profile.counts[a] > profile.counts[b]; });
  std::int64_t residue = static_cast<std::int64_t>(size) - sum;
  while (residue != 0) {
    bool moved = false;
    for (auto i : order) {
      if (residue == 0) break;
      const auto ni = static_cast<std::int64_t>(profile.counts[i]);
      if (residue > 0 && q[i] < ni) {
        ++q[i];
        --residue;
        moved = true;
      } else if (residue < 0 && q[i] > 1) {
        --q[i];
        ++residue;
        moved = true;
      }
    }
    if (!moved) throw std::logic_error("subsample quota adjustment stalled");
  }
  return {q.begin(), q.end()};
}

Instance subsample(const Instance& inst, std::size_t size, std::uint64_t seed) {
  const auto profile = inst.profile();
  const auto quotas = subsample_quotas(profile, size);
  std::vector<PointSet> by_color(profile.counts.size());
  for (std::size_t i = 0; i < inst.size(); ++i) by_color[inst.color(static_cast<PointId>(i))].push_back(static_cast<PointId>(i));
  Rng rng(seed);
  PointSet chosen;
  chosen.reserve(size);
  for (std::size_t c = 0; c < by_color.size(); ++c) {
    auto& ids = by_color[c];
    shuffle_range(ids.begin(), ids.end(), rng);
    chosen.insert(chosen.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(quotas[c]));
  }
  std::sort(chosen.begin(), chosen.end());
  return inst.subset(chosen);
}

// ---- sums ----

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

double pair_sums(const Instance& inst, std::span<const PointId> a, std::span<const PointId> b, MetricMode mode) {
  std::vector<double> rows;
  rows.reserve(a.size());
  std::vector<double> row(b.size());
  for (PointId x : a) {
    for (std::size_t k = 0; k < b.size(); ++k) row[k] = x == b[k] ? 0.0 : inst.metric(mode, x, b[k]);
    rows.push_back(pairwise_sum(row));
  }
  return pairwise_sum(rows);
}

double self_sum(const Instance& inst, std::span<const PointId> a, MetricMode mode) {
  std::vector<double> rows;
  rows.reserve(a.size());
  std::vector<double> row;
  for (std::size_t i = 0; i < a.size(); ++i) {
    row.clear();
    for (std::size_t k = i + 1; k < a.size(); ++k) row.push_back(inst.metric(mode, a[i], a[k]));
    rows.push_back(pairwise_sum(row));
  }
  return pairwise_sum(rows);
}

double total_sum(const Instance& inst, MetricMode mode) {
  PointSet all(inst.size());
  std::iota(all.begin(), all.end(), PointId{0});
  return self_sum(inst, all, mode);
}

}  // namespace fairhc
