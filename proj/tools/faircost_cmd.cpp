#include <iostream>
#include <memory>

#include "commands.hpp"
#include "input.hpp"
#include "fairhc/costfair.hpp"

namespace fairhc::cli {

namespace {

struct FaircostOptions {
  InputOptions input;
  std::optional<int> t;
  std::optional<int> ell;
  std::uint64_t seed = 0;
  bool relaxed = false;
  std::string builder = "average";
  double epsilon = 0.1;
  std::string out;
};

int run(const FaircostOptions& o) {
  const Instance inst = load_input(o.input);
  CostParams params = CostParams::defaults(inst.size());
  if (o.t) params.t = *o.t;
  if (o.ell) params.ell = *o.ell;
  params.relaxed = o.relaxed;
  TreeBuilder builder;
  if (o.builder == "densest") builder = densest_cut_builder(o.epsilon, o.seed);

  CostResult res;
  try {
    res = fair_cost_clustering(inst, params, o.seed, builder);
  } catch (const ShortfallError& e) {
    std::cerr << "faircost: " << e.what() << '\n';
    return 3;
  }
  nlohmann::json j;
  j["input"] = o.input.path;
  j["seed"] = o.seed;
  j["builder"] = o.builder;
  j["source_rows"] = inst.source_rows();
  j["clusters"] = res.clusters;
  j["tree"] = res.tree.to_json();
  j["report"] = res.report.to_json();
  with_output(o.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  return 0;
}

}  // namespace

void add_faircost(CLI::App& app, int* code) {
  auto o = std::make_shared<FaircostOptions>();
  o->input.add_to(app);
  app.add_option("--t", o->t, "cluster size scale t (default from n)")->check(CLI::PositiveNumber);
  app.add_option("--ell", o->ell, "component scale ell (default from n)")->check(CLI::PositiveNumber);
  app.add_option("--seed", o->seed, "random seed");
  app.add_flag("--relaxed", o->relaxed, "let donor rounds run past the strict budgets");
  app.add_option("--builder", o->builder, "unfair tree blackbox")->check(CLI::IsMember({"average", "densest"}));
  app.add_option("--epsilon", o->epsilon, "densest-cut local optimality slack");
  app.add_option("--out,-o", o->out, "output file (default stdout)");
  app.callback([o, code] { *code = run(*o); });
}

}  // namespace fairhc::cli
