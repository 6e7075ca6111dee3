#include <iostream>
#include <memory>

#include "commands.hpp"
#include "input.hpp"
#include "fairhc/harness.hpp"

namespace fairhc::cli {

namespace {

struct ConfigOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;

  void add_to(CLI::App& app) {
    app.add_option("--config,-c", config, "experiment config JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--threads", threads, "worker threads (0: all cores)");
  }

  ExperimentConfig load() const {
    auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(read_file(config)));
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    return cfg;
  }
};

}  // namespace

void add_experiment_commands(CLI::App& app, int* code) {
  {
    struct RunOptions {
      ConfigOptions cfg;
      std::string out, table;
      bool with_timings = false;
      bool multicolor = false;
    };
    auto o = std::make_shared<RunOptions>();
    auto* run = app.add_subcommand("run", "subsampled trials: fair vs. vanilla trees, ratios, bounds");
    o->cfg.add_to(*run);
    run->add_option("--out,-o", o->out, "JSON-lines output, one record per trial (default stdout)");
    run->add_option("--table", o->table, "aggregated CSV, one row per sample size");
    run->add_flag("--with-timings", o->with_timings, "include wall-clock seconds in each record");
    run->add_flag("--multicolor", o->multicolor, "require at least three colors");
    run->callback([o, code] {
      const auto cfg = o->cfg.load();
      const Instance pop = load_population(cfg);
      const auto rep = o->multicolor ? multicolor_experiment(cfg, pop) : run_experiment(cfg, pop);
      with_output(o->out, [&](std::ostream& out) {
        out << nlohmann::json{{"config", cfg.to_json()}, {"population", pop.size()}}.dump() << '\n';
        rep.write_jsonl(out, o->with_timings);
      });
      if (!o->table.empty()) with_output(o->table, [&](std::ostream& out) { rep.write_table_csv(out); });
      for (const auto& t : rep.trials)
        if (t.skipped) std::cerr << "skipped size " << t.size << " trial " << t.trial << ": " << *t.skipped << '\n';
      *code = rep.all_completed() ? 0 : 2;
    });
  }
  {
    struct TraceOptions {
      ConfigOptions cfg;
      std::optional<std::size_t> size;
      std::size_t every = 100;
      std::string out;
    };
    auto o = std::make_shared<TraceOptions>();
    auto* trace = app.add_subcommand("trace", "ratio_fairlets and ratio_value along one local search");
    o->cfg.add_to(*trace);
    trace->add_option("--size", o->size, "sample size (default: the largest configured size)");
    trace->add_option("--every", o->every, "rebuild the fair tree every this many swaps")->check(CLI::PositiveNumber);
    trace->add_option("--out,-o", o->out, "CSV output (default stdout)");
    trace->callback([o, code] {
      const auto cfg = o->cfg.load();
      const Instance pop = load_population(cfg);
      const auto rows = trace_sampling(pop, cfg, o->size.value_or(cfg.sizes.back()), o->every);
      with_output(o->out, [&](std::ostream& out) { write_trace_csv(out, rows); });
      *code = 0;
    });
  }
  {
    struct TimingOptions {
      ConfigOptions cfg;
      std::string out;
    };
    auto o = std::make_shared<TimingOptions>();
    auto* timing = app.add_subcommand("timing", "wall-clock per phase against sample size");
    o->cfg.add_to(*timing);
    timing->add_option("--out,-o", o->out, "CSV output (default stdout)");
    timing->callback([o, code] {
      const auto cfg = o->cfg.load();
      const auto sweep = timing_sweep(cfg, load_population(cfg));
      with_output(o->out, [&](std::ostream& out) { sweep.write_csv(out); });
      std::cerr << sweep.to_json().dump() << '\n';
      *code = 0;
    });
  }
}

}  // namespace fairhc::cli
