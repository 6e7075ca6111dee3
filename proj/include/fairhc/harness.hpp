#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "fairhc/fairlets.hpp"
#include "fairhc/instance.hpp"
#include "fairhc/types.hpp"

namespace fairhc {

// Gaussian blobs. Colors follow `color_ratio` exactly (e.g. {1, 3}); with
// color_pure every blob holds a single color, otherwise colors are shuffled
// independently of location.
struct SyntheticSpec {
  std::size_t n = 400;
  std::size_t dim = 6;
  std::size_t blobs = 4;
  double spread = 1.0;
  double separation = 4.0;
  std::vector<std::size_t> color_ratio{1, 3};
  bool color_pure = false;

  nlohmann::json to_json() const;
  static SyntheticSpec from_json(const nlohmann::json& j);
};

Instance synthetic_blobs(const SyntheticSpec& spec, std::uint64_t seed);

struct DatasetSpec {
  std::string path;
  CsvSpec csv;
};

struct ExperimentConfig {
  std::optional<DatasetSpec> dataset;
  std::optional<SyntheticSpec> synthetic;
  ObjectiveKind objective = ObjectiveKind::value;
  Alpha alpha{1, 2};
  double epsilon = 0.1;
  std::vector<std::size_t> sizes{100, 200, 400, 800, 1600, 3200, 6400, 12800, 25600};
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  StopRule stop_rule = StopRule::randomized;
  std::size_t threads = 0;  // 0: hardware concurrency

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// The dataset from the config, or the synthetic population sized to the
// largest sample.
Instance load_population(const ExperimentConfig& cfg);

struct PhaseTimes {
  double decomposition = 0.0;
  double local_search = 0.0;
  double fair_tree = 0.0;
  double vanilla_tree = 0.0;
  double fair_total() const { return decomposition + local_search + fair_tree; }
};

struct TrialRecord {
  std::size_t size = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> skipped;  // reason, when the trial did not run
  ObjectiveKind objective = ObjectiveKind::value;
  double ratio_initial = 0.0;  // objective(fair tree) / objective(vanilla tree)
  double ratio_final = 0.0;
  double fairlets_initial = 0.0;  // φ(𝒴)/d(V)
  double fairlets_final = 0.0;
  double objective_fair = 0.0;
  double objective_vanilla = 0.0;
  double upper_bound = 0.0;
  double vs_upper_bound = 0.0;
  std::size_t swaps = 0;
  std::size_t failed_attempts = 0;
  std::size_t num_fairlets = 0;
  std::size_t max_fairlet_size = 0;
  bool fair_tree_fair = false;
  bool vanilla_fair = false;
  PhaseTimes times;

  nlohmann::json to_json(bool with_timings) const;
};

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // population
};
Stat summarize(const std::vector<double>& xs);

struct SizeSummary {
  std::size_t size = 0;
  std::size_t completed = 0;
  std::size_t skipped = 0;
  Stat ratio_initial, ratio_final, fairlets_initial, fairlets_final, vs_upper_bound, swaps, seconds;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;  // ordered by (size, trial)
  std::vector<SizeSummary> summaries;

  bool all_completed() const;
  void write_jsonl(std::ostream& out, bool with_timings = false) const;
  // One row per size, "mean ± std" cells.
  void write_table_csv(std::ostream& out) const;
};

TrialRecord run_trial(const Instance& population, const ExperimentConfig& cfg, std::size_t size, std::size_t trial);
ExperimentReport run_experiment(const ExperimentConfig& cfg, const Instance& population);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Same protocol; requires at least three colors (ranges bucketing a numeric column).
ExperimentReport multicolor_experiment(const ExperimentConfig& cfg, const Instance& population);

struct TraceRow {
  std::size_t swap_index = 0;
  double ratio_fairlets = 0.0;
  double ratio_value = 0.0;
};

// One local search on a sample, with the fair tree rebuilt every `every`
// accepted swaps. Rows: the start, each sample point, and the final state.
std::vector<TraceRow> trace_sampling(const Instance& population, const ExperimentConfig& cfg, std::size_t size,
                                     std::size_t every = 100);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

struct TimingRow {
  std::size_t size = 0;
  std::size_t trial = 0;
  PhaseTimes times;
};

struct TimingSweep {
  std::vector<TimingRow> rows;
  double fair_slope = 0.0;  // least-squares slope of log(mean seconds) on log(size)
  double vanilla_slope = 0.0;

  void write_csv(std::ostream& out) const;
  nlohmann::json to_json() const;
};

TimingSweep timing_sweep(const ExperimentConfig& cfg, const Instance& population);
double loglog_slope(const std::vector<double>& sizes, const std::vector<double>& seconds);

}  // namespace fairhc
