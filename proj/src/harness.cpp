#include "fairhc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "fairhc/linkage.hpp"
#include "fairhc/objectives.hpp"
#include "fairhc/rng.hpp"

namespace fairhc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string pm(const Stat& s, int digits) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", digits, s.mean, digits, s.stddev);
  return buf;
}

const char* to_string(StopRule r) { return r == StopRule::exhaustive ? "exhaustive" : "randomized"; }

StopRule parse_stop_rule(const std::string& s) {
  if (s == "exhaustive") return StopRule::exhaustive;
  if (s == "randomized") return StopRule::randomized;
  throw std::invalid_argument("unknown stop rule '" + s + "' (expected exhaustive or randomized)");
}

// Runs fn(i) for i in [0, count) on a small pool; the first exception wins.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double tree_ratio(const Instance& inst, const Hierarchy& fair, const Hierarchy& vanilla, ObjectiveKind kind) {
  const double v = evaluate(kind, inst, vanilla).value;
  return v > 0.0 ? evaluate(kind, inst, fair).value / v : 0.0;
}

double upper_bound(ObjectiveKind kind, const Instance& inst) {
  return kind == ObjectiveKind::revenue ? revenue_upper_bound(inst) : value_upper_bound(inst);
}

}  // namespace

// ---- synthetic data ----

nlohmann::json SyntheticSpec::to_json() const {
  return {{"n", n},       {"dim", dim},           {"blobs", blobs},           {"spread", spread},
          {"separation", separation}, {"color_ratio", color_ratio}, {"color_pure", color_pure}};
}

SyntheticSpec SyntheticSpec::from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.n = j.value("n", s.n);
  s.dim = j.value("dim", s.dim);
  s.blobs = j.value("blobs", s.blobs);
  s.spread = j.value("spread", s.spread);
  s.separation = j.value("separation", s.separation);
  s.color_ratio = j.value("color_ratio", s.color_ratio);
  s.color_pure = j.value("color_pure", s.color_pure);
  return s;
}

Instance synthetic_blobs(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n < 2) throw std::invalid_argument("synthetic: n must be >= 2");
  if (spec.dim == 0 || spec.blobs == 0) throw std::invalid_argument("synthetic: dim and blobs must be positive");
  const std::size_t c = spec.color_ratio.size();
  if (c == 0) throw std::invalid_argument("synthetic: color_ratio is empty");
  const std::size_t parts = std::accumulate(spec.color_ratio.begin(), spec.color_ratio.end(), std::size_t{0});
  if (parts == 0) throw std::invalid_argument("synthetic: color_ratio sums to zero");
  if (spec.color_pure && spec.blobs < c) throw std::invalid_argument("synthetic: color_pure needs blobs >= colors");

  Rng rng(seed);
  std::vector<double> centers(spec.blobs * spec.dim);
  for (auto& x : centers) x = spec.separation * standard_normal(rng);

  std::vector<std::size_t> counts(c);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < c; ++k) assigned += counts[k] = spec.n * spec.color_ratio[k] / parts;
  for (std::size_t k = 0; assigned < spec.n; k = (k + 1) % c, ++assigned) ++counts[k];

  std::vector<int> colors;
  for (std::size_t k = 0; k < c; ++k) colors.insert(colors.end(), counts[k], static_cast<int>(k));
  if (!spec.color_pure) shuffle_range(colors.begin(), colors.end(), rng);

  std::vector<std::size_t> next_blob(c, 0);
  std::vector<double> coords(spec.n * spec.dim);
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::size_t blob;
    if (spec.color_pure) {
      // blobs k, k+c, k+2c, ... belong to color k
      const auto k = static_cast<std::size_t>(colors[i]);
      const std::size_t owned = (spec.blobs - k + c - 1) / c;
      blob = k + c * (next_blob[k]++ % owned);
    } else {
      blob = i % spec.blobs;
    }
    for (std::size_t d = 0; d < spec.dim; ++d)
      coords[i * spec.dim + d] = centers[blob * spec.dim + d] + spec.spread * standard_normal(rng);
  }
  return Instance::from_coords(std::move(coords), spec.dim, std::move(colors));
}

// ---- config ----

void ExperimentConfig::validate() const {
  if (dataset.has_value() == synthetic.has_value())
    throw std::invalid_argument("config: give exactly one of 'dataset' or 'synthetic'");
  if (objective != ObjectiveKind::value && objective != ObjectiveKind::revenue)
    throw std::invalid_argument("config: objective must be revenue or value");
  if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be positive");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (sizes.empty()) throw std::invalid_argument("config: sizes is empty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) throw std::invalid_argument("config: sizes must be >= 2");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("config: sizes must be strictly ascending");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  if (dataset) {
    j["dataset"] = {{"path", dataset->path},
                    {"features", dataset->csv.feature_columns},
                    {"color_column", dataset->csv.color_column},
                    {"color_rule", dataset->csv.color_rule.to_json()},
                    {"normalize", dataset->csv.normalize}};
  }
  if (synthetic) j["synthetic"] = synthetic->to_json();
  j["objective"] = to_string(objective);
  j["alpha"] = alpha.str();
  j["epsilon"] = epsilon;
  j["sizes"] = sizes;
  j["trials"] = trials;
  j["seed"] = seed;
  j["stop_rule"] = to_string(stop_rule);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      DatasetSpec ds;
      ds.path = d.at("path").get<std::string>();
      ds.csv.feature_columns = d.at("features").get<std::vector<std::string>>();
      ds.csv.color_column = d.at("color_column").get<std::string>();
      const auto& rule = d.at("color_rule");
      ds.csv.color_rule = rule.is_string() ? ColorRule::parse(rule.get<std::string>()) : ColorRule::from_json(rule);
      ds.csv.normalize = d.value("normalize", false);
      c.dataset = std::move(ds);
    }
    if (j.contains("synthetic")) c.synthetic = SyntheticSpec::from_json(j.at("synthetic"));
    if (j.contains("objective")) c.objective = parse_objective(j.at("objective").get<std::string>());
    if (j.contains("alpha")) c.alpha = Alpha::parse(j.at("alpha").get<std::string>());
    c.epsilon = j.value("epsilon", c.epsilon);
    c.sizes = j.value("sizes", c.sizes);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("stop_rule")) c.stop_rule = parse_stop_rule(j.at("stop_rule").get<std::string>());
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Instance load_population(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.dataset) return load_csv(cfg.dataset->path, cfg.dataset->csv);
  SyntheticSpec spec = *cfg.synthetic;
  spec.n = std::max(spec.n, cfg.sizes.back());
  return synthetic_blobs(spec, derive_seed(cfg.seed, 0x5eed));
}

// ---- trials ----

nlohmann::json TrialRecord::to_json(bool with_timings) const {
  nlohmann::json j;
  j["size"] = size;
  j["trial"] = trial;
  j["seed"] = seed;
  if (skipped) {
    j["skipped"] = *skipped;
    return j;
  }
  const std::string ratio = objective == ObjectiveKind::revenue ? "ratio_revenue" : "ratio_value";
  j[ratio + "_initial"] = ratio_initial;
  j[ratio + "_final"] = ratio_final;
  j["ratio_fairlets_initial"] = fairlets_initial;
  j["ratio_fairlets_final"] = fairlets_final;
  j["objective_fair"] = objective_fair;
  j["objective_vanilla"] = objective_vanilla;
  j["upper_bound"] = upper_bound;
  j["vs_upper_bound"] = vs_upper_bound;
  j["swaps"] = swaps;
  j["failed_attempts"] = failed_attempts;
  j["fairlets"] = num_fairlets;
  j["max_fairlet_size"] = max_fairlet_size;
  j["fair_tree_fair"] = fair_tree_fair;
  j["vanilla_fair"] = vanilla_fair;
  if (with_timings) {
    j["seconds"] = {{"decomposition", times.decomposition},
                    {"local_search", times.local_search},
                    {"fair_tree", times.fair_tree},
                    {"vanilla_tree", times.vanilla_tree}};
  }
  return j;
}

Stat summarize(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

bool ExperimentReport::all_completed() const {
  return std::none_of(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.skipped.has_value(); });
}

void ExperimentReport::write_jsonl(std::ostream& out, bool with_timings) const {
  for (const auto& t : trials) out << t.to_json(with_timings).dump() << '\n';
}

void ExperimentReport::write_table_csv(std::ostream& out) const {
  const char* name = config.objective == ObjectiveKind::revenue ? "ratio_revenue" : "ratio_value";
  out << "size,completed,skipped," << name << "_initial_pct," << name
      << "_final_pct,ratio_fairlets_initial,ratio_fairlets_final,vs_upper_bound_pct,swaps\n";
  auto pct = [](Stat s) { return Stat{100.0 * s.mean, 100.0 * s.stddev}; };
  for (const auto& s : summaries) {
    out << s.size << ',' << s.completed << ',' << s.skipped << ',';
    if (s.completed == 0) {
      out << ",,,,,\n";
      continue;
    }
    out << '"' << pm(pct(s.ratio_initial), 2) << "\",\"" << pm(pct(s.ratio_final), 2) << "\",\""
        << fmt(s.fairlets_initial.mean) << "\",\"" << fmt(s.fairlets_final.mean) << "\",\""
        << pm(pct(s.vs_upper_bound), 2) << "\",\"" << pm(s.swaps, 1) << "\"\n";
  }
}

TrialRecord run_trial(const Instance& population, const ExperimentConfig& cfg, std::size_t size, std::size_t trial) {
  TrialRecord rec;
  rec.size = size;
  rec.trial = trial;
  rec.seed = derive_seed(cfg.seed, size, trial);
  rec.objective = cfg.objective;
  if (size > population.size()) {
    rec.skipped = "sample size " + std::to_string(size) + " exceeds population " + std::to_string(population.size());
    return rec;
  }
  const Instance inst = subsample(population, size, derive_seed(rec.seed, 1));
  if (auto bad = violating_color(inst.profile(), cfg.alpha)) {
    rec.skipped = "color " + std::to_string(*bad) + " exceeds alpha=" + cfg.alpha.str() + " in the sample";
    return rec;
  }

  auto t0 = Clock::now();
  const Hierarchy vanilla = average_linkage(inst, objective_mode(cfg.objective)).tree;
  rec.times.vanilla_tree = seconds_since(t0);

  t0 = Clock::now();
  FairletDecomposition start;
  try {
    start = initial_decomposition(inst, cfg.alpha, derive_seed(rec.seed, 2));
  } catch (const std::invalid_argument& e) {
    rec.skipped = std::string("no initial decomposition: ") + e.what();
    return rec;
  }
  rec.times.decomposition = seconds_since(t0);

  const double d_total = total_sum(inst, MetricMode::distance);
  rec.fairlets_initial = d_total > 0.0 ? fairlet_phi(inst, start) / d_total : 0.0;
  rec.ratio_initial = tree_ratio(inst, compose_fair_tree(inst, start, cfg.objective), vanilla, cfg.objective);

  t0 = Clock::now();
  LocalSearchOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.seed = derive_seed(rec.seed, 3);
  opt.stop_rule = cfg.stop_rule;
  const auto ls = local_search(inst, start, opt);
  rec.times.local_search = seconds_since(t0);

  t0 = Clock::now();
  const Hierarchy fair = compose_fair_tree(inst, ls.decomposition, cfg.objective);
  rec.times.fair_tree = seconds_since(t0);

  rec.fairlets_final = d_total > 0.0 ? ls.trace.final_phi() / d_total : 0.0;
  rec.objective_fair = evaluate(cfg.objective, inst, fair).value;
  rec.objective_vanilla = evaluate(cfg.objective, inst, vanilla).value;
  rec.ratio_final = rec.objective_vanilla > 0.0 ? rec.objective_fair / rec.objective_vanilla : 0.0;
  rec.upper_bound = upper_bound(cfg.objective, inst);
  rec.vs_upper_bound = rec.upper_bound > 0.0 ? rec.objective_fair / rec.upper_bound : 0.0;
  rec.swaps = ls.trace.accepted();
  rec.failed_attempts = ls.trace.failed_attempts;
  rec.num_fairlets = ls.decomposition.size();
  rec.max_fairlet_size = ls.decomposition.max_size();
  rec.fair_tree_fair = tree_fairness_check(fair, inst.colors(), cfg.alpha).fair;
  rec.vanilla_fair = tree_fairness_check(vanilla, inst.colors(), cfg.alpha).fair;
  return rec;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Instance& population) {
  cfg.validate();
  ExperimentReport rep;
  rep.config = cfg;
  const std::size_t jobs = cfg.sizes.size() * cfg.trials;
  rep.trials.resize(jobs);
  parallel_for(jobs, cfg.threads, [&](std::size_t i) {
    rep.trials[i] = run_trial(population, cfg, cfg.sizes[i / cfg.trials], i % cfg.trials);
  });
  for (std::size_t s = 0; s < cfg.sizes.size(); ++s) {
    SizeSummary sum;
    sum.size = cfg.sizes[s];
    std::vector<double> ri, rf, fi, ff, ub, sw, sec;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const auto& r = rep.trials[s * cfg.trials + t];
      if (r.skipped) {
        ++sum.skipped;
        continue;
      }
      ++sum.completed;
      ri.push_back(r.ratio_initial);
      rf.push_back(r.ratio_final);
      fi.push_back(r.fairlets_initial);
      ff.push_back(r.fairlets_final);
      ub.push_back(r.vs_upper_bound);
      sw.push_back(static_cast<double>(r.swaps));
      sec.push_back(r.times.fair_total());
    }
    sum.ratio_initial = summarize(ri);
    sum.ratio_final = summarize(rf);
    sum.fairlets_initial = summarize(fi);
    sum.fairlets_final = summarize(ff);
    sum.vs_upper_bound = summarize(ub);
    sum.swaps = summarize(sw);
    sum.seconds = summarize(sec);
    rep.summaries.push_back(sum);
  }
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_population(cfg)); }

ExperimentReport multicolor_experiment(const ExperimentConfig& cfg, const Instance& population) {
  if (population.num_colors() < 3)
    throw std::invalid_argument("multicolor experiment needs at least 3 colors, population has " +
                                std::to_string(population.num_colors()));
  return run_experiment(cfg, population);
}

// ---- traces ----

std::vector<TraceRow> trace_sampling(const Instance& population, const ExperimentConfig& cfg, std::size_t size,
                                     std::size_t every) {
  if (every == 0) throw std::invalid_argument("trace: sampling interval must be positive");
  if (size > population.size()) throw std::invalid_argument("trace: sample size exceeds population");
  const std::uint64_t seed = derive_seed(cfg.seed, size, 0);
  const Instance inst = subsample(population, size, derive_seed(seed, 1));
  const Hierarchy vanilla = average_linkage(inst, objective_mode(cfg.objective)).tree;
  const double d_total = total_sum(inst, MetricMode::distance);
  const auto start = initial_decomposition(inst, cfg.alpha, derive_seed(seed, 2));

  LocalSearchOptions opt;
  opt.epsilon = cfg.epsilon;
  opt.seed = derive_seed(seed, 3);
  opt.stop_rule = cfg.stop_rule;
  opt.sample_every = every;
  opt.sampler = [&](const FairletDecomposition& y) {
    return tree_ratio(inst, compose_fair_tree(inst, y, cfg.objective), vanilla, cfg.objective);
  };
  const auto ls = local_search(inst, start, opt);

  auto frac = [&](double phi) { return d_total > 0.0 ? phi / d_total : 0.0; };
  std::vector<TraceRow> rows;
  rows.push_back({0, frac(ls.trace.initial_phi), ls.trace.initial_ratio_value.value_or(0.0)});
  for (std::size_t i = 0; i < ls.trace.swaps.size(); ++i) {
    const auto& p = ls.trace.swaps[i];
    if (p.ratio_value) rows.push_back({p.swap_index, frac(p.phi), *p.ratio_value});
  }
  if (rows.back().swap_index != ls.trace.accepted())
    rows.push_back({ls.trace.accepted(), frac(ls.trace.final_phi()), opt.sampler(ls.decomposition)});
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "swap_index,ratio_fairlets,ratio_value\n";
  for (const auto& r : rows) out << r.swap_index << ',' << fmt(r.ratio_fairlets) << ',' << fmt(r.ratio_value) << '\n';
}

// ---- timing ----

double loglog_slope(const std::vector<double>& sizes, const std::vector<double>& seconds) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= 0.0 || seconds[i] <= 0.0) continue;
    xs.push_back(std::log(sizes[i]));
    ys.push_back(std::log(seconds[i]));
  }
  if (xs.size() < 2) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

TimingSweep timing_sweep(const ExperimentConfig& cfg, const Instance& population) {
  ExperimentConfig serial = cfg;
  serial.threads = 1;  // timings from a loaded machine are noise
  const auto rep = run_experiment(serial, population);
  TimingSweep out;
  std::vector<double> sizes, fair, vanilla;
  for (const auto& s : rep.summaries) {
    std::vector<double> f, v;
    for (const auto& t : rep.trials) {
      if (t.size != s.size || t.skipped) continue;
      out.rows.push_back({t.size, t.trial, t.times});
      f.push_back(t.times.fair_total());
      v.push_back(t.times.vanilla_tree);
    }
    if (f.empty()) continue;
    sizes.push_back(static_cast<double>(s.size));
    fair.push_back(summarize(f).mean);
    vanilla.push_back(summarize(v).mean);
  }
  out.fair_slope = loglog_slope(sizes, fair);
  out.vanilla_slope = loglog_slope(sizes, vanilla);
  return out;
}

void TimingSweep::write_csv(std::ostream& out) const {
  out << "size,trial,decomposition_s,local_search_s,fair_tree_s,fair_total_s,vanilla_s\n";
  for (const auto& r : rows)
    out << r.size << ',' << r.trial << ',' << fmt(r.times.decomposition) << ',' << fmt(r.times.local_search) << ','
        << fmt(r.times.fair_tree) << ',' << fmt(r.times.fair_total()) << ',' << fmt(r.times.vanilla_tree) << '\n';
}

nlohmann::json TimingSweep::to_json() const {
  return {{"fair_slope", fair_slope}, {"vanilla_slope", vanilla_slope}, {"rows", rows.size()}};
}

}  // namespace fairhc
