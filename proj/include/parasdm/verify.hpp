#pragma once

// Randomized property suite over every module. Each property runs a few
// seeded cases per requested model size and keeps the first counterexamples.

#include <parasdm/anneal.hpp>
#include <parasdm/controller.hpp>
#include <parasdm/oracle.hpp>
#include <parasdm/random_models.hpp>
#include <parasdm/scenario.hpp>
#include <parasdm/sensitivity.hpp>
#include <parasdm/simulation.hpp>
#include <parasdm/soft_solver.hpp>
#include <parasdm/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace parasdm {

using ControlLawFn = std::function<std::vector<double>(std::span<const double>, double, const ControlConfig&)>;

struct VerifyOptions {
  std::size_t cases = 3;
  std::size_t policy_draws = 200;
  /// Law under test for the controller identities; defaults to control_law.
  ControlLawFn control_law;
  /// Skips the properties that integrate trajectories or anneal.
  bool quick = false;
};

struct PropertyOutcome {
  std::string module;
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::vector<std::string> counterexamples;

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::vector<PropertyOutcome> properties;

  bool ok() const {
    return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed(); });
  }
  const PropertyOutcome* find(const std::string& name) const {
    for (const auto& p : properties)
      if (p.name == name) return &p;
    return nullptr;
  }
  std::string text() const {
    std::ostringstream os;
    for (const auto& p : properties) {
      os << (p.passed() ? "PASS " : "FAIL ") << p.module << '/' << p.name << " (" << p.cases - p.failures << '/'
         << p.cases << ")\n";
      for (const auto& c : p.counterexamples) os << "  counterexample: " << c << '\n';
    }
    os << (ok() ? "all properties passed" : "some properties failed") << " (" << properties.size() << " properties)\n";
    return os.str();
  }
};

namespace detail {

using Check = std::function<std::optional<std::string>(std::mt19937_64&, std::size_t size)>;

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

inline double inf_norm_diff(std::span<const double> x, std::span<const double> y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline RandomModelOptions sized(std::size_t size, std::mt19937_64& rng) {
  RandomModelOptions o;
  o.n_states = std::max<std::size_t>(size, 2);
  o.n_actions = 1 + rng() % 4;
  const double gammas[] = {0.5, 0.9, 1.0};
  o.gamma = gammas[rng() % 3];
  o.beta = std::uniform_real_distribution<double>(0.5, 5.0)(rng);
  return o;
}

/// Scenario whose node count (users + UAVs + base) matches `size` where possible.
inline UavScenario sized_scenario(std::size_t size, std::mt19937_64& rng, double gamma, double beta) {
  const std::size_t uavs = size >= 6 ? 2 : 1;
  const std::size_t users = size > uavs + 1 ? size - uavs - 1 : 1;
  return random_scenario(rng, users, uavs, 3.0, gamma, beta);
}

inline ModelSpec::Options options_of(const ModelSpec& model) {
  ModelSpec::Options o;
  o.state_names = model.state_names();
  o.action_names = model.action_names();
  o.terminal = model.terminal();
  o.gamma = model.gamma();
  o.beta = model.beta();
  o.cost = model.cost_ptr();
  o.objective_weights = model.objective_weights();
  o.allowed.resize(model.n_states());
  for (Index s = 0; s < model.n_states(); ++s) {
    o.allowed[s].assign(model.allowed(s).begin(), model.allowed(s).end());
    for (Index a = 0; a < model.n_actions(); ++a)
      for (const auto& tr : model.transitions(s, a)) o.kernel.push_back({s, a, tr.next, tr.probability});
  }
  return o;
}

inline double lyapunov_at(const ModelSpec& model, const ParameterVector& params, double tol) {
  return lyapunov_value(model, solve_fixed_point(model, params, {}, tol, 100'000).tables);
}

// ---- model ----

inline std::optional<std::string> check_validation_detects(std::mt19937_64& rng, std::size_t size) {
  auto rm = random_model(rng, sized(size, rng));
  if (!validate_model(rm.model, rm.params).ok()) {
    return "generated model rejected: " + validate_model(rm.model, rm.params).summary();
  }
  auto o = options_of(rm.model);
  const Index term = o.terminal;
  const auto mode = rng() % 3;
  ViolationKind expected = ViolationKind::row_not_stochastic;
  if (mode == 0) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < o.kernel.size(); ++i)
      if (o.kernel[i].s != term && rm.model.pair_index(o.kernel[i].s, o.kernel[i].a)) candidates.push_back(i);
    auto& e = o.kernel[candidates[rng() % candidates.size()]];
    e.probability *= 0.5;
  } else if (mode == 1) {
    std::uniform_int_distribution<Index> pick(0, term - 1);
    o.allowed[pick(rng)].clear();
    expected = ViolationKind::empty_action_set;
  } else {
    for (auto& e : o.kernel)
      if (e.s == term) e.next = 0;
    expected = ViolationKind::terminal_not_absorbing;
  }
  ModelSpec broken(std::move(o));
  const auto report = validate_model(broken);
  if (!report.has(expected)) return "perturbation " + std::to_string(mode) + " not detected: " + report.summary();
  return std::nullopt;
}

inline std::optional<std::string> check_flatten_roundtrip(std::mt19937_64& rng, std::size_t size) {
  const std::size_t n = std::max<std::size_t>(size, 1);
  const std::size_t m = 1 + rng() % 4;
  const std::size_t ds = 1 + rng() % 3;
  const std::size_t da = 1 + rng() % 3;
  std::vector<Index> ms, ma;
  for (Index s = 0; s < n; ++s)
    if (rng() % 2) ms.push_back(s);
  for (Index a = 0; a < m; ++a)
    if (rng() % 2) ma.push_back(a);
  auto layout = std::make_shared<const ParameterLayout>(n, m, ds, da, ms, ma);
  std::normal_distribution<double> normal;
  std::vector<double> flat(layout->size());
  for (double& x : flat) x = normal(rng);
  const auto p = unflatten(flat, layout);
  if (flatten(p) != flat) return std::string("flatten(unflatten(x)) != x");
  if (!(unflatten(flatten(p), layout) == p)) return std::string("unflatten(flatten(p)) != p");
  for (Index s = 0; s < n; ++s) {
    const bool man = layout->state_manipulable(s);
    const std::size_t off = layout->state_offset(s);
    if (man != (off >= layout->n_prescribed())) return "state block " + std::to_string(s) + " in the wrong half";
  }
  return std::nullopt;
}

// ---- soft_solver ----

inline std::optional<std::string> check_contraction(std::mt19937_64& rng, std::size_t size) {
  auto rm = random_model(rng, sized(size, rng));
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<double> l1(rm.model.pair_count()), l2(rm.model.pair_count());
  for (double& x : l1) x = normal(rng);
  for (double& x : l2) x = normal(rng);
  for (std::size_t k = rm.model.pair_begin(rm.model.terminal()); k < rm.model.pair_end(rm.model.terminal()); ++k) {
    l1[k] = 0.0;
    l2[k] = 0.0;
  }
  const double before = inf_norm_diff(l1, l2);
  const double after =
      inf_norm_diff(soft_bellman_operator(l1, rm.model, rm.params), soft_bellman_operator(l2, rm.model, rm.params));
  if (after > rm.model.gamma() * before + 1e-12 * (1.0 + before)) {
    return "gamma=" + fmt(rm.model.gamma()) + " |TL1-TL2|=" + fmt(after) + " |L1-L2|=" + fmt(before);
  }
  return std::nullopt;
}

inline std::optional<std::string> check_gibbs_optimality(std::mt19937_64& rng, std::size_t size, std::size_t draws) {
  auto rm = random_model(rng, sized(size, rng));
  const auto sol = solve_fixed_point(rm.model, rm.params, {}, 1e-12, 100'000);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto mu = random_policy(rm.model, rng);
    const auto v = soft_policy_value(rm.model, rm.params, mu);
    for (Index s = 0; s < rm.model.n_states(); ++s) {
      if (sol.tables.vstar[s] > v[s] + 1e-9) {
        return "state " + std::to_string(s) + ": V*=" + fmt(sol.tables.vstar[s]) + " > V^mu=" + fmt(v[s]);
      }
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> check_policy_normalization(std::mt19937_64& rng, std::size_t size) {
  auto rm = random_model(rng, sized(size, rng));
  const auto sol = solve_fixed_point(rm.model, rm.params);
  const auto mu = gibbs_policy(sol.tables, rm.model);
  for (Index s = 0; s < rm.model.n_states(); ++s) {
    double total = 0.0;
    for (std::size_t k = rm.model.pair_begin(s); k < rm.model.pair_end(s); ++k) {
      if (!(mu.mu[k] > 0.0)) return "non-positive probability at state " + std::to_string(s);
      total += mu.mu[k];
    }
    if (rm.model.pair_begin(s) != rm.model.pair_end(s) && std::abs(total - 1.0) > 1e-12) {
      return "state " + std::to_string(s) + " sums to " + fmt(total);
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> check_beta_monotone(std::mt19937_64& rng, std::size_t size) {
  auto rm = random_model(rng, sized(size, rng));
  const double g = rm.model.gamma();
  std::vector<std::vector<double>> vs;
  std::vector<SoftPolicy> mus;
  std::vector<ValueTables> tabs;
  for (double ratio : {1.0, 10.0, 100.0}) {
    const auto m = rm.model.with_beta(ratio * g);
    auto sol = solve_fixed_point(m, rm.params, {}, 1e-12, 100'000);
    mus.push_back(gibbs_policy(sol.tables, m));
    vs.push_back(sol.tables.vstar);
    tabs.push_back(sol.tables);
  }
  for (std::size_t i = 1; i < vs.size(); ++i)
    for (Index s = 0; s < rm.model.n_states(); ++s)
      if (vs[i][s] < vs[i - 1][s] - 1e-9) return "V* decreased in beta at state " + std::to_string(s);
  // Concentration: with a unique minimizing row entry separated by a clear gap,
  // the hottest-to-coldest max probability must grow towards 1.
  for (Index s = 0; s < rm.model.n_states(); ++s) {
    const std::size_t b = rm.model.pair_begin(s), e = rm.model.pair_end(s);
    if (s == rm.model.terminal() || e - b < 2) continue;
    std::vector<double> row(tabs.back().lambda.begin() + static_cast<std::ptrdiff_t>(b),
                            tabs.back().lambda.begin() + static_cast<std::ptrdiff_t>(e));
    std::sort(row.begin(), row.end());
    const double gap = row[1] - row[0];
    if (gap * 100.0 < std::log(1e3 * static_cast<double>(e - b))) continue;
    const double hot = *std::max_element(mus.front().mu.begin() + static_cast<std::ptrdiff_t>(b),
                                         mus.front().mu.begin() + static_cast<std::ptrdiff_t>(e));
    const double cold = *std::max_element(mus.back().mu.begin() + static_cast<std::ptrdiff_t>(b),
                                          mus.back().mu.begin() + static_cast<std::ptrdiff_t>(e));
    if (cold < 0.99 || cold + 1e-12 < hot) {
      return "state " + std::to_string(s) + " max mu " + fmt(hot) + " -> " + fmt(cold) + " with gap " + fmt(gap);
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> check_determinism(std::mt19937_64& rng, std::size_t size) {
  auto rm = random_model(rng, sized(size, rng));
  const auto a = solve_fixed_point(rm.model, rm.params);
  const auto b = solve_fixed_point(rm.model, rm.params);
  if (a.tables.lambda != b.tables.lambda || a.tables.vstar != b.tables.vstar) return std::string("repeat solve differs");
  const auto ga = gradient_table(rm.model, rm.params, gibbs_policy(a.tables, rm.model));
  const auto gb = gradient_table(rm.model, rm.params, gibbs_policy(b.tables, rm.model));
  if (ga.values != gb.values) return std::string("repeat gradient differs");
  return std::nullopt;
}

// ---- sensitivity ----

inline std::optional<std::string> check_finite_difference(std::mt19937_64& rng, std::size_t size) {
  auto opt = sized(size, rng);
  opt.gamma = 0.9;
  auto rm = random_model(rng, opt);
  const double tol = 1e-13;
  const auto sol = solve_fixed_point(rm.model, rm.params, {}, tol, 100'000);
  const auto table = gradient_table(rm.model, rm.params, gibbs_policy(sol.tables, rm.model));
  const double h = 1e-5;
  std::vector<double> fd(rm.params.size()), an(rm.params.size());
  double scale = 0.0;
  for (std::size_t th = 0; th < fd.size(); ++th) {
    auto plus = rm.params, minus = rm.params;
    plus.flat()[th] += h;
    minus.flat()[th] -= h;
    fd[th] = (lyapunov_at(rm.model, plus, tol) - lyapunov_at(rm.model, minus, tol)) / (2.0 * h);
    for (Index s = 0; s < rm.model.n_states(); ++s) an[th] += rm.model.objective_weights()[s] * table(s, th);
    scale = std::max(scale, std::abs(fd[th]));
  }
  for (std::size_t th = 0; th < fd.size(); ++th) {
    const double denom = std::max({std::abs(fd[th]), 1e-3 * scale, 1e-8});
    if (std::abs(an[th] - fd[th]) / denom > 1e-5) {
      return "coordinate " + std::to_string(th) + ": analytic " + fmt(an[th]) + " vs fd " + fmt(fd[th]);
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> check_adjoint_matches_table(std::mt19937_64& rng, std::size_t size) {
  auto rm = random_model(rng, sized(size, rng));
  const auto sol = solve_fixed_point(rm.model, rm.params);
  const auto mu = gibbs_policy(sol.tables, rm.model);
  const auto direct = stacks_from_table(rm.model, rm.params.layout(), gradient_table(rm.model, rm.params, mu));
  const auto adj = assemble_stacks(rm.model, rm.params, mu);
  const double scale = 1.0 + std::max(direct.f_inf_norm(), inf_norm_diff(direct.G, std::vector<double>(direct.G.size())));
  const double err = std::max(inf_norm_diff(direct.F, adj.F), inf_norm_diff(direct.G, adj.G));
  if (err > 1e-9 * scale) return "adjoint and per-coordinate stacks differ by " + fmt(err);
  return std::nullopt;
}

inline std::optional<std::string> check_linearity(std::mt19937_64& rng, std::size_t size) {
  auto opt = sized(size, rng);
  opt.action_weight = 0.7;
  auto rm = random_model(rng, opt);
  const auto sol = solve_fixed_point(rm.model, rm.params);
  const auto mu = gibbs_policy(sol.tables, rm.model);
  const std::size_t n = rm.model.n_states(), m = rm.model.n_actions();
  auto c1 = std::make_shared<QuadraticCost>(n, m, std::vector<double>{}, 1.3, 0.0);
  std::shared_ptr<const CostModel> c2 = std::make_shared<QuadraticCost>(n, m, std::vector<double>{}, 0.0, 0.0);
  if (rm.params.layout().action_dim() == rm.params.layout().state_dim()) {
    c2 = std::make_shared<QuadraticCost>(n, m, std::vector<double>{}, 0.4, 0.0);
  }
  const auto sum = std::make_shared<SumCost>(c1, c2);
  const auto g1 = gradient_table(rm.model.with_cost(c1), rm.params, mu);
  const auto g2 = gradient_table(rm.model.with_cost(c2), rm.params, mu);
  const auto g12 = gradient_table(rm.model.with_cost(sum), rm.params, mu);
  const double err = (g12.values - g1.values - g2.values).cwiseAbs().maxCoeff();
  if (err > 1e-10 * (1.0 + g12.values.cwiseAbs().maxCoeff())) return "gradient of sum differs by " + fmt(err);
  return std::nullopt;
}

inline std::optional<std::string> check_stationarity(std::mt19937_64& rng, std::size_t size) {
  auto sc = sized_scenario(std::min<std::size_t>(size, 5), rng, 0.9, 5.0);
  auto built = build_model(sc);
  AnnealSchedule sched;
  sched.beta_min = 0.5;
  sched.beta_max = 5.0;
  sched.gradient_tol = 1e-6;
  sched.seed = rng();
  const auto res = anneal(built.model, built.params, sched);
  const auto m = built.model.with_beta(sched.beta_max);
  const auto fresh = solve_fixed_point(m, res.params, {}, 1e-12, 100'000);
  const auto stacks = assemble_stacks(m, res.params, gibbs_policy(fresh.tables, m));
  if (stacks.f_inf_norm() > sched.gradient_tol) {
    return "|F|_inf=" + fmt(stacks.f_inf_norm()) + " after anneal with tol " + fmt(sched.gradient_tol);
  }
  return std::nullopt;
}

// ---- controller ----

inline std::optional<std::string> check_control_identity(std::mt19937_64& rng, std::size_t size,
                                                         const ControlLawFn& law) {
  std::normal_distribution<double> normal;
  ControlConfig cfg;
  cfg.k0 = std::exp(normal(rng));
  cfg.zero_threshold = 0.0;
  std::vector<double> F(1 + rng() % std::max<std::size_t>(size, 1));
  for (double& f : F) f = normal(rng);
  const double alpha = 3.0 * normal(rng);
  const auto u = law(F, alpha, cfg);
  double f2 = 0.0, fu = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    f2 += F[i] * F[i];
    fu += F[i] * u[i];
  }
  const double lhs = alpha + fu;
  const double rhs = -cfg.k0 * f2 - std::hypot(alpha, f2);
  if (rhs > 0.0) return "identity right-hand side positive: " + fmt(rhs);
  if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(rhs))) {
    return "K0=" + fmt(cfg.k0) + " alpha=" + fmt(alpha) + " |F|^2=" + fmt(f2) + ": alpha+F.u=" + fmt(lhs) +
           " expected " + fmt(rhs);
  }
  return std::nullopt;
}

inline std::optional<std::string> check_lipschitz(std::mt19937_64& rng, std::size_t size, const ControlLawFn& law) {
  std::normal_distribution<double> normal;
  ControlConfig cfg;
  cfg.k0 = std::exp(normal(rng));
  cfg.zero_threshold = 0.0;
  std::vector<double> F(1 + rng() % std::max<std::size_t>(size, 1));
  for (double& f : F) f = normal(rng);
  const double alpha = -std::abs(3.0 * normal(rng));
  const auto u = law(F, alpha, cfg);
  double fn = 0.0, un = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    fn += F[i] * F[i];
    un += u[i] * u[i];
  }
  fn = std::sqrt(fn);
  un = std::sqrt(un);
  if (un > (1.0 + cfg.k0) * fn * (1.0 + 1e-12)) {
    return "alpha=" + fmt(alpha) + " |u|=" + fmt(un) + " > (1+K0)|F|=" + fmt((1.0 + cfg.k0) * fn);
  }
  return std::nullopt;
}

/// Short closed-loop run on a small scene whose users stop moving early:
/// F must be driven below 1e-3, with V finite throughout and non-increasing
/// once the motion has stopped.
inline std::optional<std::string> check_tracking(std::mt19937_64& rng, std::size_t size) {
  auto sc = sized_scenario(std::min<std::size_t>(size, 5), rng, 0.9, 2.0);
  sc.motion.kind = MotionKind::constant_velocity;
  sc.motion.velocity = {0.3, -0.2};
  sc.motion.stop_time = 0.5;
  auto built = build_model(sc);
  Problem problem{built.model, built.params, built.dynamics, built.users, built.diameter, true};
  RunConfig cfg;
  cfg.t_end = 6.0;
  cfg.control.dt = 0.01;
  cfg.anneal.beta_min = 0.5;
  cfg.anneal.beta_max = 2.0;
  cfg.anneal.seed = rng();
  const auto run = run_simulation(problem, cfg);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : run.records) {
    if (!std::isfinite(r.lyapunov)) return "non-finite V at t=" + fmt(r.t);
    if (r.t > sc.motion.stop_time + cfg.control.dt) {
      if (r.lyapunov > prev + 1e-9) return "V increased at t=" + fmt(r.t) + ": " + fmt(prev) + " -> " + fmt(r.lyapunov);
    }
    prev = r.lyapunov;
  }
  if (run.final_f_norm > 1e-3) return "|F| at t_end is " + fmt(run.final_f_norm);
  return std::nullopt;
}

// ---- scenario ----

inline std::optional<std::string> check_scenario_valid(std::mt19937_64& rng, std::size_t size) {
  const double gammas[] = {0.9, 1.0};
  auto sc = sized_scenario(size, rng, gammas[rng() % 2], 1.0 + 4.0 * std::uniform_real_distribution<double>()(rng));
  auto built = build_model(sc);
  const auto report = validate_model(built.model, built.params);
  if (!report.ok()) return report.summary();
  return std::nullopt;
}

inline std::optional<std::string> check_relabeling(std::mt19937_64& rng, std::size_t size) {
  auto sc = sized_scenario(std::max<std::size_t>(size, 6), rng, 0.9, 2.0);
  auto swapped = sc;
  std::reverse(swapped.uavs.begin(), swapped.uavs.end());
  auto a = build_model(sc), b = build_model(swapped);
  auto va = solve_fixed_point(a.model, a.params, {}, 1e-12, 100'000).tables.vstar;
  auto vb = solve_fixed_point(b.model, b.params, {}, 1e-12, 100'000).tables.vstar;
  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  const double err = inf_norm_diff(va, vb);
  if (err > 1e-9 * (1.0 + std::abs(va.back()))) return "sorted V* differs by " + fmt(err) + " after relabeling UAVs";
  return std::nullopt;
}

/// One UAV, users clustered away from the base so every user relays; with
/// only user states in the objective the optimum is (sum x + n z) / (2n).
inline std::optional<std::string> check_single_uav(std::mt19937_64& rng, std::size_t size) {
  const std::size_t n = std::max<std::size_t>(size, 3) - 2;
  UavScenario sc;
  sc.base = {0.0, 0.0};
  sc.users = random_points(n, {{4.0, 5.0}, {4.0, 5.0}}, rng);
  sc.uavs = {{1.0, 3.0}};
  sc.gamma = 1.0;
  sc.objective = ScenarioObjective::users;
  auto built = build_model(sc);
  AnnealSchedule sched;
  sched.beta_max = 100.0;
  sched.seed = rng();
  const auto res = anneal(built.model, built.params, sched);
  const auto y = res.params.zeta(built.uavs.front());
  std::vector<double> expect(2, 0.0);
  for (const auto& x : sc.users)
    for (int k = 0; k < 2; ++k) expect[k] += x[k];
  for (int k = 0; k < 2; ++k) expect[k] = (expect[k] + static_cast<double>(n) * sc.base[k]) / (2.0 * static_cast<double>(n));
  const double err = std::hypot(y[0] - expect[0], y[1] - expect[1]);
  if (err > 1e-3) return "UAV at (" + fmt(y[0]) + ", " + fmt(y[1]) + "), closed form (" + fmt(expect[0]) + ", " + fmt(expect[1]) + ")";
  return std::nullopt;
}

// ---- harness ----

inline std::optional<std::string> check_trajectory_roundtrip(std::mt19937_64& rng, std::size_t size) {
  std::normal_distribution<double> normal;
  std::vector<TrajectoryRecord> recs(1 + rng() % 4);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& r = recs[i];
    r.t = 0.1 * static_cast<double>(i);
    r.upsilon.resize(size);
    for (double& x : r.upsilon) x = normal(rng) * std::pow(10.0, normal(rng) * 5.0);
    r.lyapunov = normal(rng);
    r.f_norm = std::abs(normal(rng));
    r.u_norm = std::abs(normal(rng));
    r.alpha = normal(rng);
    r.routes = {{0, 2, 3}, {1, 3}};
    if (rng() % 2) r.jump = std::abs(normal(rng));
  }
  std::stringstream ss;
  for (const auto& r : recs) write_jsonl(ss, r, false);
  const auto back = read_jsonl(ss);
  if (back != recs) return std::string("records changed after a JSON lines round trip");
  return std::nullopt;
}

inline std::optional<std::string> check_routes(std::mt19937_64& rng, std::size_t size) {
  auto sc = sized_scenario(size, rng, 0.9, 0.5 + 5.0 * std::uniform_real_distribution<double>()(rng));
  auto built = build_model(sc);
  const auto sol = solve_fixed_point(built.model, built.params, {}, 1e-10, 100'000);
  const auto mu = gibbs_policy(sol.tables, built.model);
  std::vector<Index> all;
  for (Index s = 0; s < built.model.n_states(); ++s) all.push_back(s);
  for (const auto& chain : greedy_routes(built.model, mu, all)) {
    if (chain.back() != built.model.terminal() || chain.size() > built.model.n_states() + 1) {
      std::string path;
      for (Index s : chain) path += (path.empty() ? "" : ">") + std::to_string(s);
      return "route " + path + " does not reach the base";
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> check_start_agreement(std::mt19937_64& rng, std::size_t size) {
  auto sc = sized_scenario(std::min<std::size_t>(size, 5), rng, 0.9, 2.0);
  auto built = build_model(sc);
  Problem problem{built.model, built.params, built.dynamics, built.users, built.diameter, true};
  RunConfig cfg;
  cfg.anneal.beta_min = 0.5;
  cfg.anneal.beta_max = 2.0;
  cfg.anneal.seed = rng();
  const auto a = run_simulation(problem, cfg);
  const auto b = run_baseline(problem, cfg);
  const double diff = std::abs(a.records.front().lyapunov - b.records.front().lyapunov);
  if (diff > 1e-8) return "initial V differs by " + fmt(diff);
  return std::nullopt;
}

inline std::optional<std::string> check_brute_force(std::mt19937_64& rng, std::size_t size) {
  auto opt = sized(std::min<std::size_t>(size, 6), rng);
  opt.gamma = 0.9;
  opt.max_branches = 2;
  auto rm = random_model(rng, opt);
  const auto mu = random_policy(rm.model, rng);
  const auto v = soft_policy_value(rm.model, rm.params, mu);
  const auto bf = brute_force_value(rm.model, rm.params, mu, 400, 1e-8);
  const double err = inf_norm_diff(v, bf.values);
  if (err > bf.tail_bound + 1e-9) return "path oracle differs by " + fmt(err) + " (tail bound " + fmt(bf.tail_bound) + ")";
  return std::nullopt;
}

}  // namespace detail

/// Runs every property on `options.cases` seeded instances for each size in
/// `sizes` (a size is the number of states, terminal included). Sizes of zero
/// are skipped, so an all-zero size list yields an empty report.
inline VerifyReport verify_suite(std::uint64_t seed, const std::vector<std::size_t>& sizes,
                                 const VerifyOptions& options = {}) {
  VerifyReport report;
  std::vector<std::size_t> used;
  for (std::size_t s : sizes)
    if (s > 0) used.push_back(s);
  if (used.empty()) return report;

  const ControlLawFn law = options.control_law ? options.control_law : ControlLawFn(control_law);
  struct Property {
    const char* module;
    const char* name;
    detail::Check check;
    bool heavy;
  };
  using namespace detail;
  const std::vector<Property> properties{
      {"model", "validation_detects_perturbation", check_validation_detects, false},
      {"model", "flatten_roundtrip", check_flatten_roundtrip, false},
      {"soft_solver", "contraction", check_contraction, false},
      {"soft_solver", "gibbs_optimality",
       [&](std::mt19937_64& r, std::size_t n) { return check_gibbs_optimality(r, n, options.policy_draws); }, false},
      {"soft_solver", "policy_normalization", check_policy_normalization, false},
      {"soft_solver", "beta_monotonicity", check_beta_monotone, false},
      {"soft_solver", "determinism", check_determinism, false},
      {"sensitivity", "finite_difference", check_finite_difference, false},
      {"sensitivity", "adjoint_matches_table", check_adjoint_matches_table, false},
      {"sensitivity", "cost_linearity", check_linearity, false},
      {"sensitivity", "anneal_stationarity", check_stationarity, true},
      {"controller", "vdot_identity", [&](std::mt19937_64& r, std::size_t n) { return check_control_identity(r, n, law); },
       false},
      {"controller", "lipschitz_bound", [&](std::mt19937_64& r, std::size_t n) { return check_lipschitz(r, n, law); },
       false},
      {"controller", "asymptotic_tracking", check_tracking, true},
      {"scenario", "built_models_validate", check_scenario_valid, false},
      {"scenario", "relabeling_invariance", check_relabeling, false},
      {"scenario", "single_uav_closed_form", check_single_uav, true},
      {"harness", "trajectory_roundtrip", check_trajectory_roundtrip, false},
      {"harness", "routes_reach_terminal", check_routes, false},
      {"harness", "baseline_start_agreement", check_start_agreement, true},
      {"harness", "path_oracle_matches", check_brute_force, false},
  };

  for (std::size_t p = 0; p < properties.size(); ++p) {
    const auto& prop = properties[p];
    if (prop.heavy && options.quick) continue;
    PropertyOutcome out{prop.module, prop.name, 0, 0, {}};
    for (std::size_t size : used) {
      // Heavy properties integrate or anneal; one case per size keeps the suite short.
      const std::size_t cases = prop.heavy ? 1 : options.cases;
      for (std::size_t c = 0; c < cases; ++c) {
        std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(size), static_cast<std::uint32_t>(c)};
        std::mt19937_64 rng(sseq);
        ++out.cases;
        std::optional<std::string> failure;
        try {
          failure = prop.check(rng, size);
        } catch (const std::exception& e) {
          failure = std::string("exception: ") + e.what();
        }
        if (failure) {
          ++out.failures;
          if (out.counterexamples.size() < 3) {
            out.counterexamples.push_back("seed " + std::to_string(seed) + " size " + std::to_string(size) + " case " +
                                          std::to_string(c) + ": " + *failure);
          }
        }
      }
    }
    report.properties.push_back(std::move(out));
  }
  return report;
}

}  // namespace parasdm
