#pragma once

// Closed-loop runs (controller) and the re-annealing baseline, writing one
// trajectory record per step.

#include <parasdm/anneal.hpp>
#include <parasdm/config.hpp>
#include <parasdm/controller.hpp>
#include <parasdm/trajectory.hpp>

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace parasdm {

struct RunSummary {
  std::vector<TrajectoryRecord> records;
  double final_f_norm = 0.0;
  double delta_lyapunov = 0.0;
  /// Mean wall time of a controller step, or of a baseline re-solve.
  double mean_step_seconds = 0.0;
  /// Largest |dt * u| over the controller run, or largest jump for the baseline.
  double max_displacement = 0.0;
  double anneal_seconds = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline double norm2(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

inline std::size_t step_count(const RunConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.t_end / cfg.control.dt));
}

struct Sink {
  std::optional<TrajectoryWriter> writer;
  std::vector<TrajectoryRecord>* records;

  void push(TrajectoryRecord r) {
    if (writer) writer->write(r);
    records->push_back(std::move(r));
  }
};

inline Sink open_sink(const RunConfig& cfg, RunSummary& summary) {
  Sink sink{std::nullopt, &summary.records};
  if (!cfg.output.empty()) sink.writer.emplace(cfg.output, cfg.csv, cfg.timing);
  return sink;
}

inline void finish(RunSummary& s) {
  if (s.records.empty()) return;
  s.final_f_norm = s.records.back().f_norm;
  s.delta_lyapunov = s.records.back().lyapunov - s.records.front().lyapunov;
}

}  // namespace detail

/// Anneals the initial configuration at the run's schedule; both the
/// controller and the baseline start from this.
inline AnnealResult initial_solution(const Problem& problem, const RunConfig& cfg) {
  return anneal(problem.model, problem.params, cfg.anneal);
}

inline RunSummary run_simulation(const Problem& problem, const RunConfig& cfg) {
  cfg.validate();
  RunSummary summary;
  auto sink = detail::open_sink(cfg, summary);
  const ModelSpec model = problem.model.with_beta(cfg.anneal.beta_max);

  auto t0 = detail::Clock::now();
  auto start = initial_solution(problem, cfg);
  summary.anneal_seconds = detail::seconds_since(t0);
  summary.warnings = start.warnings;

  ControlState state = initial_state(model, start.params, start.tables, problem.dynamics, 0.0);
  TrajectoryRecord first{0.0, std::vector<double>(state.params.flat().begin(), state.params.flat().end()),
                         state.lyapunov, state.stacks.f_norm(), 0.0, state.alpha,
                         greedy_routes(model, state.policy, problem.sources), std::nullopt, summary.anneal_seconds};
  sink.push(std::move(first));

  const std::size_t steps = detail::step_count(cfg);
  double total = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    t0 = detail::Clock::now();
    state = step(state, model, problem.dynamics, cfg.control);
    const double elapsed = detail::seconds_since(t0);
    total += elapsed;
    // Times are k * dt rather than a running sum so they stay exact multiples.
    state.t = static_cast<double>(k) * cfg.control.dt;
    const double u_norm = detail::norm2(state.u);
    summary.max_displacement = std::max(summary.max_displacement, cfg.control.dt * u_norm);
    sink.push(TrajectoryRecord{state.t, std::vector<double>(state.params.flat().begin(), state.params.flat().end()),
                               state.lyapunov, state.stacks.f_norm(), u_norm, state.alpha,
                               greedy_routes(model, state.policy, problem.sources), std::nullopt, elapsed});
  }
  if (steps > 0) summary.mean_step_seconds = total / static_cast<double>(steps);
  detail::finish(summary);
  return summary;
}

/// Moves the prescribed coordinates along the same motion as the controller
/// run, but every resolve period re-anneals from scratch, starting from the
/// previous manipulable configuration plus seeded noise. Records between
/// re-solves hold the manipulable coordinates fixed.
inline RunSummary run_baseline(const Problem& problem, const RunConfig& cfg) {
  cfg.validate();
  RunSummary summary;
  auto sink = detail::open_sink(cfg, summary);
  const ModelSpec model = problem.model.with_beta(cfg.anneal.beta_max);
  const double dt = cfg.control.dt;

  auto t0 = detail::Clock::now();
  auto start = initial_solution(problem, cfg);
  summary.anneal_seconds = detail::seconds_since(t0);
  summary.warnings = start.warnings;

  ParameterVector params = start.params;
  ValueTables tables = start.tables;
  SoftPolicy policy = start.policy;
  auto record = [&](double t, double u_norm, std::optional<double> jump, std::optional<double> wall) {
    const auto stacks = assemble_stacks(model, params, policy);
    const auto kappa = problem.dynamics(params, t);
    double alpha = 0.0;
    for (std::size_t i = 0; i < kappa.size(); ++i) alpha += stacks.G[i] * kappa[i];
    sink.push(TrajectoryRecord{t, std::vector<double>(params.flat().begin(), params.flat().end()),
                               lyapunov_value(model, tables), stacks.f_norm(), u_norm, alpha,
                               greedy_routes(model, policy, problem.sources), jump, wall});
  };
  record(0.0, 0.0, 0.0, summary.anneal_seconds);

  const double period = cfg.resolve_every > 0.0 ? cfg.resolve_every : dt;
  const auto every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period / dt)));
  const double sigma = cfg.anneal.perturbation > 0.0 ? cfg.anneal.perturbation : 1e-3 * std::max(problem.diameter, 1.0);
  std::mt19937_64 rng(cfg.seed ^ 0xB5297A4D3F1C0E6BULL);
  std::normal_distribution<double> noise(0.0, 1.0);

  const std::size_t steps = detail::step_count(cfg);
  double total = 0.0;
  std::size_t resolves = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    const auto kappa = problem.dynamics(params, t_prev);
    auto pres = params.prescribed();
    for (std::size_t i = 0; i < pres.size(); ++i) pres[i] += dt * kappa[i];
    const double t = static_cast<double>(k) * dt;

    if (k % every != 0 && k != steps) {
      // Values follow the moving prescribed coordinates with the configuration held.
      tables = solve_fixed_point(model, params, tables.lambda, cfg.control.fixed_point_tol,
                                 cfg.control.max_fixed_point_iter)
                   .tables;
      policy = gibbs_policy(tables, model);
      record(t, 0.0, std::nullopt, std::nullopt);
      continue;
    }
    ParameterVector seed_point = params;
    for (double& x : seed_point.manipulable()) x += sigma * noise(rng);
    AnnealSchedule schedule = cfg.anneal;
    schedule.seed = cfg.anneal.seed + k;
    t0 = detail::Clock::now();
    auto res = anneal(problem.model, seed_point, schedule);
    const double elapsed = detail::seconds_since(t0);
    total += elapsed;
    ++resolves;
    std::vector<double> diff(params.layout().n_manipulable());
    const auto before = params.manipulable();
    const auto after = res.params.manipulable();
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = after[i] - before[i];
    const double jump = detail::norm2(diff);
    summary.max_displacement = std::max(summary.max_displacement, jump);
    summary.warnings.insert(summary.warnings.end(), res.warnings.begin(), res.warnings.end());
    params = std::move(res.params);
    tables = std::move(res.tables);
    policy = std::move(res.policy);
    record(t, jump / (static_cast<double>(every) * dt), jump, elapsed);
  }
  if (resolves > 0) summary.mean_step_seconds = total / static_cast<double>(resolves);
  detail::finish(summary);
  return summary;
}

}  // namespace parasdm
