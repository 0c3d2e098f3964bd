#pragma once

// JSON problem and run configuration.
//
// A config file holds either a "scenario" object (UAV relay network) or a
// generic model at the top level, plus optional "run" and "anneal" sections.
// See README.md for the full schema.

#include <parasdm/anneal.hpp>
#include <parasdm/controller.hpp>
#include <parasdm/cost.hpp>
#include <parasdm/model.hpp>
#include <parasdm/scenario.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace parasdm {

/// A model, its initial parameters, the prescribed motion, and the states
/// whose routes are reported.
struct Problem {
  ModelSpec model;
  ParameterVector params;
  PrescribedDynamics dynamics;
  std::vector<Index> sources;
  double diameter = 0.0;
  bool scenario = false;
};

struct RunConfig {
  std::string output;
  double t_end = 0.0;
  ControlConfig control;
  /// Baseline re-solve period; zero means every step.
  double resolve_every = 0.0;
  std::uint64_t seed = 0;
  AnnealSchedule anneal;
  bool csv = false;
  bool timing = false;

  void validate() const {
    control.validate();
    if (!(t_end >= 0.0)) throw Error("t_end must be non-negative");
    if (!(resolve_every >= 0.0)) throw Error("resolve period must be non-negative");
    anneal.betas();
  }
};

namespace detail {

using nlohmann::json;

inline Index resolve_name(const json& j, const std::vector<std::string>& names, const char* what) {
  if (j.is_number_integer()) {
    const auto i = j.get<long long>();
    if (i < 0 || static_cast<std::size_t>(i) >= names.size()) throw ModelError(std::string(what) + " index out of range");
    return static_cast<Index>(i);
  }
  const auto name = j.get<std::string>();
  for (Index i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ModelError(std::string("unknown ") + what + " '" + name + "'");
}

inline std::vector<std::string> read_names(const json& j, const char* prefix) {
  std::vector<std::string> names;
  if (j.is_number_integer()) {
    for (long long i = 0; i < j.get<long long>(); ++i) names.push_back(prefix + std::to_string(i));
  } else {
    names = j.get<std::vector<std::string>>();
  }
  return names;
}

inline std::vector<Point> read_points(const json& j, std::mt19937_64& rng) {
  if (j.is_array()) return j.get<std::vector<Point>>();
  const auto count = j.at("count").get<std::size_t>();
  std::vector<std::pair<double, double>> box;
  for (const auto& side : j.at("box")) box.emplace_back(side.at(0).get<double>(), side.at(1).get<double>());
  return random_points(count, box, rng);
}

inline MotionSpec read_motion(const json& j) {
  MotionSpec m;
  if (j.is_null()) return m;
  m.kind = parse_motion_kind(j.value("kind", std::string("none")));
  if (j.contains("velocity")) m.velocity = j.at("velocity").get<Point>();
  m.amplitude = j.value("amplitude", m.amplitude);
  m.frequency = j.value("frequency", m.frequency);
  m.speed = j.value("speed", m.speed);
  m.modes = j.value("modes", m.modes);
  if (j.contains("waypoints")) m.waypoints = j.at("waypoints").get<std::vector<std::vector<Point>>>();
  m.segment_time = j.value("segment_time", m.segment_time);
  if (j.contains("stop_time") && !j.at("stop_time").is_null()) m.stop_time = j.at("stop_time").get<double>();
  m.move_base = j.value("move_base", m.move_base);
  return m;
}

}  // namespace detail

inline UavScenario scenario_from_json(const nlohmann::json& j) {
  UavScenario sc;
  sc.seed = j.value("seed", std::uint64_t{0});
  std::mt19937_64 placement(sc.seed ^ 0x9E3779B97F4A7C15ULL);
  sc.base = j.at("base").get<Point>();
  sc.users = detail::read_points(j.at("users"), placement);
  sc.uavs = detail::read_points(j.at("uavs"), placement);
  if (j.contains("motion")) sc.motion = detail::read_motion(j.at("motion"));
  sc.gamma = j.value("gamma", 1.0);
  sc.beta = j.value("beta", 10.0);
  const auto objective = j.value("objective", std::string("all"));
  if (objective == "all") {
    sc.objective = ScenarioObjective::all_states;
  } else if (objective == "users") {
    sc.objective = ScenarioObjective::users;
  } else {
    throw ModelError("objective must be 'all' or 'users'");
  }
  return sc;
}

inline Problem problem_from_scenario(const UavScenario& sc) {
  auto built = build_model(sc);
  return Problem{std::move(built.model), std::move(built.params), std::move(built.dynamics), std::move(built.users),
                 built.diameter, true};
}

/// Generic model object: states, actions, terminal, kernel, masks, gamma,
/// beta, cost, params, partition, objective_weights, motion.
inline Problem model_from_json(const nlohmann::json& j) {
  using detail::resolve_name;
  ModelSpec::Options opt;
  opt.state_names = detail::read_names(j.at("states"), "s");
  opt.action_names = detail::read_names(j.at("actions"), "a");
  const std::size_t n = opt.state_names.size();
  const std::size_t m = opt.action_names.size();
  if (n == 0) throw ModelError("model needs at least one state");
  opt.terminal = j.contains("terminal") ? resolve_name(j.at("terminal"), opt.state_names, "state") : n - 1;

  const auto& kernel = j.at("kernel");
  if (kernel.size() != n) throw ModelError("kernel must have one block per state");
  std::vector<double> dense(n * m * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (kernel[s].size() != m) throw ModelError("kernel block must have one row per action");
    for (std::size_t a = 0; a < m; ++a) {
      const auto row = kernel[s][a].get<std::vector<double>>();
      if (row.size() != n) throw ModelError("kernel row must have one entry per state");
      std::copy(row.begin(), row.end(), dense.begin() + static_cast<std::ptrdiff_t>((s * m + a) * n));
    }
  }
  opt.kernel = kernel_from_dense(n, m, dense);

  if (j.contains("masks")) {
    const auto& masks = j.at("masks");
    if (masks.size() != n) throw ModelError("masks must have one entry per state");
    opt.allowed.resize(n);
    for (std::size_t s = 0; s < n; ++s)
      for (const auto& a : masks[s]) opt.allowed[s].push_back(resolve_name(a, opt.action_names, "action"));
  }
  opt.gamma = j.value("gamma", 1.0);
  opt.beta = j.value("beta", 1.0);

  const auto cost_json = j.value("cost", nlohmann::json::object());
  std::vector<double> base;
  if (cost_json.contains("base")) {
    const auto& b = cost_json.at("base");
    base.assign(n * m * n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t t = 0; t < n; ++t) base[(s * m + a) * n + t] = b.at(s).at(a).at(t).get<double>();
  }
  opt.cost = std::make_shared<QuadraticCost>(n, m, std::move(base), cost_json.value("transition_weight", 0.0),
                                             cost_json.value("action_weight", 0.0));
  if (j.contains("objective_weights")) opt.objective_weights = j.at("objective_weights").get<std::vector<double>>();

  const auto params_json = j.value("params", nlohmann::json::object());
  const std::size_t sd = params_json.value("state_dim", std::size_t{0});
  const std::size_t ad = params_json.value("action_dim", std::size_t{0});
  std::vector<Index> man_states, man_actions;
  if (j.contains("partition")) {
    const auto& part = j.at("partition");
    for (const auto& s : part.value("states", nlohmann::json::array())) man_states.push_back(resolve_name(s, opt.state_names, "state"));
    for (const auto& a : part.value("actions", nlohmann::json::array())) man_actions.push_back(resolve_name(a, opt.action_names, "action"));
  }
  auto layout = std::make_shared<const ParameterLayout>(n, m, sd, ad, man_states, man_actions);
  ParameterVector params(layout);
  if (params_json.contains("states")) {
    const auto blocks = params_json.at("states").get<std::vector<std::vector<double>>>();
    if (blocks.size() != n) throw LayoutError("params.states must have one block per state");
    for (Index s = 0; s < n; ++s) {
      if (blocks[s].size() != sd) throw LayoutError("state parameter block has the wrong dimension");
      std::copy(blocks[s].begin(), blocks[s].end(), params.zeta(s).begin());
    }
  }
  if (params_json.contains("actions")) {
    const auto blocks = params_json.at("actions").get<std::vector<std::vector<double>>>();
    if (blocks.size() != m) throw LayoutError("params.actions must have one block per action");
    for (Index a = 0; a < m; ++a) {
      if (blocks[a].size() != ad) throw LayoutError("action parameter block has the wrong dimension");
      std::copy(blocks[a].begin(), blocks[a].end(), params.eta(a).begin());
    }
  }

  PrescribedDynamics dynamics = PrescribedDynamics::zero(layout->n_prescribed());
  if (j.contains("motion")) {
    const auto& mj = j.at("motion");
    const auto kind = parse_motion_kind(mj.value("kind", std::string("none")));
    if (kind == MotionKind::constant_velocity) {
      const auto v = mj.at("velocity").get<std::vector<double>>();
      if (v.size() != layout->n_prescribed()) throw LayoutError("generic motion velocity must cover every prescribed coordinate");
      dynamics = PrescribedDynamics(v.size(), [v](const ParameterVector&, double, std::span<double> out) {
        std::copy(v.begin(), v.end(), out.begin());
      });
    } else if (kind != MotionKind::none) {
      throw ModelError("generic models support only 'none' and 'constant-velocity' motion");
    }
    if (mj.contains("stop_time")) dynamics = dynamics.stopped_at(mj.at("stop_time").get<double>());
  }

  ModelSpec model(std::move(opt));
  const auto report = validate_model(model, params);
  if (!report.ok()) throw ModelError("model failed validation: " + report.summary());
  std::vector<Index> sources;
  for (Index s = 0; s < n; ++s)
    if (s != model.terminal()) sources.push_back(s);
  return Problem{std::move(model), std::move(params), std::move(dynamics), std::move(sources), 0.0, false};
}

inline Problem problem_from_json(const nlohmann::json& j) {
  if (j.contains("scenario")) return problem_from_scenario(scenario_from_json(j.at("scenario")));
  return model_from_json(j);
}

/// Run defaults: anneal ends at the model's beta; scenarios perturb by
/// 1e-3 of the scene diameter and cap |u| at 50 diameters per unit time.
inline RunConfig run_config_from_json(const nlohmann::json& j, const Problem& problem) {
  RunConfig cfg;
  cfg.anneal.beta_max = problem.model.beta();
  cfg.anneal.beta_min = std::min(cfg.anneal.beta_min, cfg.anneal.beta_max);
  if (problem.scenario) {
    cfg.anneal.perturbation = 1e-3 * problem.diameter;
    cfg.control.gain_cap = 50.0 * problem.diameter;
  }
  const auto run = j.value("run", nlohmann::json::object());
  cfg.control.dt = run.value("dt", cfg.control.dt);
  cfg.t_end = run.value("t_end", cfg.t_end);
  cfg.control.k0 = run.value("k0", cfg.control.k0);
  const auto mode = run.value("mode", std::string("exact"));
  if (mode == "exact") {
    cfg.control.mode = RefreshMode::exact;
  } else if (mode == "taylor") {
    cfg.control.mode = RefreshMode::taylor;
  } else {
    throw Error("mode must be 'exact' or 'taylor'");
  }
  cfg.control.zero_threshold = run.value("zero_threshold", cfg.control.zero_threshold);
  if (run.contains("gain_cap")) {
    cfg.control.gain_cap = run.at("gain_cap").is_null() ? std::numeric_limits<double>::infinity()
                                                        : run.at("gain_cap").get<double>();
  }
  cfg.control.fixed_point_tol = run.value("fixed_point_tol", cfg.control.fixed_point_tol);
  cfg.resolve_every = run.value("resolve_every", cfg.resolve_every);
  cfg.seed = run.value("seed", cfg.seed);
  cfg.csv = run.value("csv", cfg.csv);
  cfg.timing = run.value("timing", cfg.timing);

  const auto an = j.value("anneal", nlohmann::json::object());
  cfg.anneal.beta_min = an.value("beta_min", cfg.anneal.beta_min);
  cfg.anneal.beta_max = an.value("beta_max", cfg.anneal.beta_max);
  cfg.anneal.growth = an.value("growth", cfg.anneal.growth);
  cfg.anneal.gradient_tol = an.value("gradient_tol", cfg.anneal.gradient_tol);
  cfg.anneal.max_inner_iter = an.value("max_inner_iter", cfg.anneal.max_inner_iter);
  cfg.anneal.fixed_point_tol = an.value("fixed_point_tol", cfg.anneal.fixed_point_tol);
  cfg.anneal.perturbation = an.value("perturbation", cfg.anneal.perturbation);
  cfg.anneal.seed = an.value("seed", cfg.seed);
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  return nlohmann::json::parse(in);
}

}  // namespace parasdm
