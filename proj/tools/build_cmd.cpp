#include <iostream>
#include <memory>

#include "commands.hpp"
#include "input.hpp"
#include "fairhc/fairlets.hpp"
#include "fairhc/harness.hpp"
#include "fairhc/linkage.hpp"
#include "fairhc/objectives.hpp"

namespace fairhc::cli {

namespace {

struct BuildOptions {
  InputOptions input;
  std::string objective = "value";
  std::string alpha;
  std::string builder = "average";
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  std::string stop_rule = "randomized";
  std::string dump_tree, dump_merges, dump_fairlets, trace;
};

int run(const BuildOptions& o) {
  const Instance inst = load_input(o.input);
  const ObjectiveKind kind = parse_objective(o.objective);
  const MetricMode mode = objective_mode(kind);
  TreeBuilder builder = o.builder == "densest" ? densest_cut_builder(o.epsilon, o.seed) : TreeBuilder{};

  nlohmann::json j;
  j["n"] = inst.size();
  j["colors"] = inst.num_colors();
  j["objective"] = to_string(kind);
  j["builder"] = o.builder;

  Hierarchy tree;
  if (o.alpha.empty()) {
    if (o.builder == "densest") {
      tree = densest_cut_tree(inst, o.epsilon, o.seed);
    } else {
      auto res = average_linkage(inst, mode);
      if (!o.dump_merges.empty())
        with_output(o.dump_merges, [&](std::ostream& out) { write_merges_csv(out, res.merges); });
      tree = std::move(res.tree);
    }
  } else {
    const Alpha alpha = Alpha::parse(o.alpha);
    LocalSearchOptions opt;
    opt.epsilon = o.epsilon;
    opt.seed = o.seed;
    opt.stop_rule = o.stop_rule == "exhaustive" ? StopRule::exhaustive : StopRule::randomized;
    const auto start = initial_decomposition(inst, alpha, o.seed);
    const auto ls = local_search(inst, start, opt);
    tree = compose_fair_tree(inst, ls.decomposition, kind, builder);
    j["alpha"] = alpha.str();
    j["fairlets"] = ls.decomposition.size();
    j["max_fairlet_size"] = ls.decomposition.max_size();
    j["phi_initial"] = ls.trace.initial_phi;
    j["phi_final"] = ls.trace.final_phi();
    j["swaps"] = ls.trace.accepted();
    j["fair"] = tree_fairness_check(tree, inst.colors(), alpha).fair;
    if (!o.dump_fairlets.empty())
      with_output(o.dump_fairlets, [&](std::ostream& out) { out << ls.decomposition.to_json().dump() << '\n'; });
    if (!o.trace.empty()) with_output(o.trace, [&](std::ostream& out) { ls.trace.write_csv(out); });
  }
  j["value"] = evaluate(kind, inst, tree).value;
  if (kind == ObjectiveKind::revenue) j["upper_bound"] = revenue_upper_bound(inst);
  if (kind == ObjectiveKind::value) j["upper_bound"] = value_upper_bound(inst);
  if (!o.dump_tree.empty()) with_output(o.dump_tree, [&](std::ostream& out) { out << tree.to_json().dump() << '\n'; });
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

void add_build(CLI::App& app, int* code) {
  auto o = std::make_shared<BuildOptions>();
  auto* cmd = app.add_subcommand("build", "build one tree (vanilla, or fair when --alpha is given) and score it");
  o->input.add_to(*cmd);
  cmd->add_option("--objective", o->objective)->check(CLI::IsMember({"revenue", "value", "cost"}));
  cmd->add_option("--alpha", o->alpha, "fairness cap as p/q; enables fairlets + local search");
  cmd->add_option("--builder", o->builder)->check(CLI::IsMember({"average", "densest"}));
  cmd->add_option("--epsilon", o->epsilon, "local search and densest-cut slack");
  cmd->add_option("--seed", o->seed);
  cmd->add_option("--stop-rule", o->stop_rule)->check(CLI::IsMember({"randomized", "exhaustive"}));
  cmd->add_option("--dump-tree", o->dump_tree, "write the tree as nested JSON");
  cmd->add_option("--dump-merges", o->dump_merges, "write the average-linkage merge log as CSV");
  cmd->add_option("--dump-fairlets", o->dump_fairlets, "write the fairlet decomposition as JSON");
  cmd->add_option("--trace", o->trace, "write the swap trace as CSV");
  cmd->callback([o, code] { *code = run(*o); });
}

void add_synth(CLI::App& app, int* code) {
  struct SynthOptions {
    SyntheticSpec spec;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<SynthOptions>();
  auto* cmd = app.add_subcommand("synth", "write a Gaussian-blob CSV (features f0..f{d-1}, color)");
  cmd->add_option("--n", o->spec.n)->check(CLI::Range(2, 1 << 24));
  cmd->add_option("--dim", o->spec.dim)->check(CLI::PositiveNumber);
  cmd->add_option("--blobs", o->spec.blobs)->check(CLI::PositiveNumber);
  cmd->add_option("--spread", o->spec.spread);
  cmd->add_option("--separation", o->spec.separation);
  cmd->add_option("--ratio", o->spec.color_ratio, "relative color counts, e.g. 1,3")->delimiter(',');
  cmd->add_flag("--color-pure", o->spec.color_pure, "one color per blob");
  cmd->add_option("--seed", o->seed);
  cmd->add_option("--out,-o", o->out, "CSV output (default stdout)");
  cmd->callback([o, code] {
    const Instance inst = synthetic_blobs(o->spec, o->seed);
    with_output(o->out, [&](std::ostream& out) {
      for (std::size_t d = 0; d < inst.dim(); ++d) out << 'f' << d << ',';
      out << "color\n";
      char buf[32];
      for (std::size_t i = 0; i < inst.size(); ++i) {
        for (double x : inst.coords(static_cast<PointId>(i))) {
          std::snprintf(buf, sizeof buf, "%.17g", x);
          out << buf << ',';
        }
        out << inst.color(static_cast<PointId>(i)) << '\n';
      }
    });
    *code = 0;
  });
}

}  // namespace fairhc::cli
