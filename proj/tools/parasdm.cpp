// Command-line front end: simulate, anneal, baseline, verify.

#include <parasdm/parasdm.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace parasdm;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<double> dt, t_end, k0, resolve_every;
  std::optional<std::string> mode;
  bool csv = false;
  bool timing = false;
};

struct Loaded {
  Problem problem;
  RunConfig cfg;
};

Loaded load(const Overrides& o) {
  const auto raw = read_json_file(o.config);
  Loaded l{problem_from_json(raw), {}};
  RunConfig& cfg = l.cfg;
  cfg = run_config_from_json(raw, l.problem);
  cfg.output = o.out;
  if (o.dt) cfg.control.dt = *o.dt;
  if (o.t_end) cfg.t_end = *o.t_end;
  if (o.k0) cfg.control.k0 = *o.k0;
  if (o.resolve_every) cfg.resolve_every = *o.resolve_every;
  if (o.mode) cfg.control.mode = *o.mode == "taylor" ? RefreshMode::taylor : RefreshMode::exact;
  cfg.csv = cfg.csv || o.csv;
  cfg.timing = cfg.timing || o.timing;
  return l;
}

void print_summary(const char* what, const RunSummary& s) {
  std::printf("%s: %zu records\n", what, s.records.size());
  std::printf("  final |F|          %.6e\n", s.final_f_norm);
  std::printf("  total change in V  %.6e\n", s.delta_lyapunov);
  std::printf("  initial anneal     %.3f s\n", s.anneal_seconds);
  std::printf("  mean step time     %.6e s\n", s.mean_step_seconds);
  std::printf("  max displacement   %.6e\n", s.max_displacement);
  for (const auto& w : s.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

nlohmann::json anneal_to_json(const ModelSpec& model, const AnnealResult& r) {
  nlohmann::json j;
  j["beta"] = r.beta;
  j["lyapunov"] = r.lyapunov;
  j["gradient_inf_norm"] = r.gradient_inf_norm;
  j["descent_steps"] = r.descent_steps;
  j["upsilon"] = std::vector<double>(r.params.flat().begin(), r.params.flat().end());
  j["vstar"] = r.tables.vstar;
  nlohmann::json policy = nlohmann::json::object();
  for (Index s = 0; s < model.n_states(); ++s) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k)
      row[model.action_name(model.pair_action(k))] = r.policy.mu[k];
    policy[model.state_name(s)] = row;
  }
  j["policy"] = policy;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parameterized sequential decision making: annealing, control and baselines"};
  app.require_subcommand(1);

  Overrides sim;
  auto* simulate = app.add_subcommand("simulate", "closed-loop controller run");
  simulate->add_option("--config", sim.config, "problem/run JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "trajectory output")->required();
  simulate->add_option("--dt", sim.dt, "time step");
  simulate->add_option("--t-end", sim.t_end, "final time");
  simulate->add_option("--k0", sim.k0, "control gain");
  simulate->add_option("--mode", sim.mode, "value refresh")->check(CLI::IsMember({"exact", "taylor"}));
  simulate->add_flag("--csv", sim.csv, "write CSV instead of JSON lines");
  simulate->add_flag("--timing", sim.timing, "include per-step wall time in records");

  Overrides ann;
  std::optional<double> beta_min, beta_max, growth;
  std::optional<std::uint64_t> anneal_seed;
  auto* anneal_cmd = app.add_subcommand("anneal", "static deterministic annealing");
  anneal_cmd->add_option("--config", ann.config, "problem JSON")->required()->check(CLI::ExistingFile);
  anneal_cmd->add_option("--out", ann.out, "result JSON")->required();
  anneal_cmd->add_option("--beta-min", beta_min, "first inverse temperature");
  anneal_cmd->add_option("--beta-max", beta_max, "final inverse temperature");
  anneal_cmd->add_option("--growth", growth, "ratio between consecutive temperatures");
  anneal_cmd->add_option("--seed", anneal_seed, "perturbation seed");

  Overrides base;
  auto* baseline = app.add_subcommand("baseline", "re-anneal at every resolve period");
  baseline->add_option("--config", base.config, "problem/run JSON")->required()->check(CLI::ExistingFile);
  baseline->add_option("--out", base.out, "trajectory output")->required();
  baseline->add_option("--resolve-every", base.resolve_every, "resolve period")->required();
  baseline->add_option("--dt", base.dt, "time step");
  baseline->add_option("--t-end", base.t_end, "final time");
  baseline->add_flag("--csv", base.csv, "write CSV instead of JSON lines");
  baseline->add_flag("--timing", base.timing, "include per-resolve wall time in records");

  std::uint64_t verify_seed = 1;
  std::vector<std::size_t> sizes{4, 6};
  std::size_t cases = 3;
  bool quick = false;
  auto* verify = app.add_subcommand("verify", "randomized property suite");
  verify->add_option("--seed", verify_seed, "base seed for every property");
  verify->add_option("--sizes", sizes, "state counts to sample");
  verify->add_option("--cases", cases, "cases per property and size");
  verify->add_flag("--quick", quick, "skip properties that integrate or anneal");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const auto l = load(sim);
      print_summary("simulate", run_simulation(l.problem, l.cfg));
    } else if (*anneal_cmd) {
      auto raw = read_json_file(ann.config);
      auto problem = problem_from_json(raw);
      auto cfg = run_config_from_json(raw, problem);
      if (beta_min) cfg.anneal.beta_min = *beta_min;
      if (beta_max) cfg.anneal.beta_max = *beta_max;
      if (growth) cfg.anneal.growth = *growth;
      if (anneal_seed) cfg.anneal.seed = *anneal_seed;
      const auto result = anneal(problem.model, problem.params, cfg.anneal);
      std::ofstream out(ann.out);
      if (!out) throw Error("cannot open output file " + ann.out);
      out << anneal_to_json(problem.model, result).dump(2) << '\n';
      std::printf("anneal: beta %.6g, V %.10g, |F|_inf %.3e, %zu descent steps\n", result.beta, result.lyapunov,
                  result.gradient_inf_norm, result.descent_steps);
      for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    } else if (*baseline) {
      const auto l = load(base);
      print_summary("baseline", run_baseline(l.problem, l.cfg));
    } else if (*verify) {
      VerifyOptions opt;
      opt.cases = cases;
      opt.quick = quick;
      const auto report = verify_suite(verify_seed, sizes, opt);
      std::fputs(report.text().c_str(), stdout);
      return report.ok() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
