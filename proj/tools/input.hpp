#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "fairhc/instance.hpp"

namespace fairhc::cli {

struct InputOptions {
  std::string path;
  std::vector<std::string> features;
  std::string color_column = "color";
  std::string color_rule;
  bool normalize = false;

  void add_to(CLI::App& app, bool required = true) {
    auto* opt = app.add_option("--input,-i", path, "CSV file with a header row, or an instance JSON");
    if (required) opt->required();
    opt->check(CLI::ExistingFile);
    app.add_option("--features", features, "feature columns (default: every column but the color column)")
        ->delimiter(',');
    app.add_option("--color-column", color_column, "protected attribute column");
    app.add_option("--color-rule", color_rule,
                   "value-to-color map, e.g. \"F=0,M=1\" or \"range:0-26=0,26-38=1\" (default: the integer itself)");
    app.add_flag("--normalize", normalize, "min-max scale each feature to [0,1]");
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

inline Instance load_input(const InputOptions& o) {
  if (ends_with(o.path, ".json")) return Instance::from_json(nlohmann::json::parse(read_file(o.path)));
  CsvSpec spec;
  spec.color_column = o.color_column;
  spec.normalize = o.normalize;
  spec.feature_columns = o.features;
  const auto records = parse_csv(read_file(o.path));
  if (records.empty()) throw std::runtime_error(o.path + ": empty file");
  const auto& header = records.front().fields;
  if (spec.feature_columns.empty())
    for (const auto& name : header)
      if (name != o.color_column) spec.feature_columns.push_back(name);
  if (!o.color_rule.empty()) {
    spec.color_rule = ColorRule::parse(o.color_rule);
  } else {
    // integer labels keep their value; anything else is numbered in sorted order
    const auto col = std::find(header.begin(), header.end(), o.color_column);
    if (col == header.end()) throw std::runtime_error(o.path + ": no column named '" + o.color_column + "'");
    const auto k = static_cast<std::size_t>(col - header.begin());
    std::set<std::string> labels;
    for (std::size_t r = 1; r < records.size(); ++r)
      if (k < records[r].fields.size() && !records[r].fields[k].empty()) labels.insert(records[r].fields[k]);
    const bool integral = std::all_of(labels.begin(), labels.end(), [](const std::string& v) {
      return !v.empty() && v.size() < 4 && std::all_of(v.begin(), v.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    });
    std::map<std::string, int> mapping;
    int next = 0;
    for (const auto& v : labels) mapping[v] = integral ? std::stoi(v) : next++;
    spec.color_rule = ColorRule::categorical(std::move(mapping));
  }
  return load_csv(o.path, spec);
}

// Writes to `path`, or stdout for "-" / empty.
template <class Fn>
void with_output(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
}

}  // namespace fairhc::cli
