#pragma once

// Deterministic annealing for the static problem: sweep beta geometrically
// from beta_min to beta_max; at each level solve the soft fixed point and run
// gradient descent of the Lyapunov sum over the manipulable coordinates, then
// perturb them slightly to break symmetries before the next level.

#include <parasdm/model.hpp>
#include <parasdm/sensitivity.hpp>
#include <parasdm/soft_solver.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace parasdm {

struct AnnealSchedule {
  double beta_min = 0.1;
  double beta_max = 100.0;
  double growth = 1.5;
  double fixed_point_tol = 1e-10;
  std::size_t max_fixed_point_iter = 10'000;
  double gradient_tol = 1e-6;
  std::size_t max_inner_iter = 500;
  double perturbation = 0.0;
  std::uint64_t seed = 0;

  /// beta_min * growth^k for k = 0, 1, ... while below beta_max, then beta_max.
  std::vector<double> betas() const {
    if (!(beta_min > 0.0) || !(beta_max >= beta_min) || !(growth > 1.0)) {
      throw Error("anneal schedule needs 0 < beta_min <= beta_max and growth > 1");
    }
    std::vector<double> out;
    for (double b = beta_min; b < beta_max * (1.0 - 1e-12); b *= growth) out.push_back(b);
    out.push_back(beta_max);
    return out;
  }
};

using StacksFn = std::function<DerivativeStacks(const ModelSpec&, const ParameterVector&, const SoftPolicy&)>;

struct AnnealResult {
  ParameterVector params;
  ValueTables tables;
  SoftPolicy policy;
  double beta = 0.0;
  double lyapunov = 0.0;
  double gradient_inf_norm = 0.0;
  std::size_t descent_steps = 0;
  std::vector<std::string> warnings;
};

inline double weighted_sum(const std::vector<double>& weights, const std::vector<double>& vstar) {
  double acc = 0.0;
  for (std::size_t s = 0; s < vstar.size(); ++s) acc += weights[s] * vstar[s];
  return acc;
}

namespace detail {

struct DescentPoint {
  ParameterVector params;
  ValueTables tables;
  double value = 0.0;
};

inline DescentPoint evaluate_point(const ModelSpec& model, ParameterVector params, const std::vector<double>& warm,
                                   const AnnealSchedule& schedule) {
  auto sol = solve_fixed_point(model, params, warm, schedule.fixed_point_tol, schedule.max_fixed_point_iter);
  const double value = weighted_sum(model.objective_weights(), sol.tables.vstar);
  return {std::move(params), std::move(sol.tables), value};
}

}  // namespace detail

/// Gradient descent of sum_s w(s) V*(s) over the manipulable coordinates at the
/// model's beta, using Barzilai-Borwein trial steps with Armijo backtracking.
/// Stops when |F|_inf <= gradient_tol or after max_inner_iter steps.
inline AnnealResult descend(const ModelSpec& model, ParameterVector params, std::vector<double> warm_lambda,
                            const AnnealSchedule& schedule, const StacksFn& stacks_fn = {}) {
  const auto stacks_of = [&](const ModelSpec& m, const ParameterVector& p, const SoftPolicy& mu) {
    return stacks_fn ? stacks_fn(m, p, mu) : assemble_stacks(m, p, mu);
  };

  AnnealResult result;
  result.beta = model.beta();
  auto point = detail::evaluate_point(model, std::move(params), warm_lambda, schedule);
  auto policy = gibbs_policy(point.tables, model);
  auto stacks = stacks_of(model, point.params, policy);
  const std::size_t nm = stacks.F.size();

  // Resolution of the weighted value sum given the fixed-point tolerance.
  double weight_total = 0.0;
  for (double w : model.objective_weights()) weight_total += std::abs(w);
  const double noise = 10.0 * schedule.fixed_point_tol * weight_total / std::max(1.0 - model.gamma(), 1e-3);

  double step = 0.0;
  std::vector<double> prev_x, prev_f;
  std::size_t it = 0;
  for (; it < schedule.max_inner_iter && nm > 0; ++it) {
    if (stacks.f_inf_norm() <= schedule.gradient_tol) break;
    double f2 = 0.0;
    for (double f : stacks.F) f2 += f * f;

    auto x = point.params.manipulable();
    if (!prev_x.empty()) {
      double sy = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < nm; ++i) {
        const double si = x[i] - prev_x[i];
        const double yi = stacks.F[i] - prev_f[i];
        sy += si * yi;
        ss += si * si;
      }
      if (sy > 0.0 && ss > 0.0) step = ss / sy;
    }
    if (!(step > 0.0) || !std::isfinite(step)) step = 1.0 / std::sqrt(f2);

    bool accepted = false;
    SoftPolicy next_policy;
    DerivativeStacks next_stacks;
    for (int trial = 0; trial < 60; ++trial) {
      ParameterVector cand = point.params;
      auto cx = cand.manipulable();
      for (std::size_t i = 0; i < nm; ++i) cx[i] -= step * stacks.F[i];
      try {
        auto next = detail::evaluate_point(model, std::move(cand), point.tables.lambda, schedule);
        bool take = next.value <= point.value - 1e-4 * step * f2;
        if (!take && next.value <= point.value + noise) {
          // Value differences are below the solver's resolution here, so
          // fall back to asking for a smaller gradient.
          next_policy = gibbs_policy(next.tables, model);
          next_stacks = stacks_of(model, next.params, next_policy);
          take = next_stacks.f_norm() < stacks.f_norm();
        }
        if (take) {
          prev_x.assign(x.begin(), x.end());
          prev_f = stacks.F;
          point = std::move(next);
          accepted = true;
          break;
        }
        next_stacks.F.clear();
      } catch (const ConvergenceError&) {
        // Treat as a rejected trial and shrink the step.
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.warnings.push_back("line search stalled at beta=" + std::to_string(model.beta()));
      break;
    }
    if (next_stacks.F.empty()) {
      policy = gibbs_policy(point.tables, model);
      stacks = stacks_of(model, point.params, policy);
    } else {
      policy = std::move(next_policy);
      stacks = std::move(next_stacks);
    }
  }
  if (nm > 0 && stacks.f_inf_norm() > schedule.gradient_tol) {
    result.warnings.push_back("gradient tolerance not reached at beta=" + std::to_string(model.beta()) +
                              " (|F|_inf=" + std::to_string(stacks.f_inf_norm()) + ")");
  }

  result.params = std::move(point.params);
  result.tables = std::move(point.tables);
  result.policy = std::move(policy);
  result.lyapunov = point.value;
  result.gradient_inf_norm = stacks.f_inf_norm();
  result.descent_steps = it;
  return result;
}

/// Anneals from `params0` and returns the solution at beta_max. The model's own
/// beta is ignored; each level uses a copy with the schedule's beta.
inline AnnealResult anneal(const ModelSpec& model, const ParameterVector& params0, const AnnealSchedule& schedule,
                           const StacksFn& stacks_fn = {}) {
  const auto betas = schedule.betas();
  std::mt19937_64 rng(schedule.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  ParameterVector params = params0;
  std::vector<double> warm;
  AnnealResult result;
  std::vector<std::string> warnings;
  std::size_t steps = 0;
  for (std::size_t level = 0; level < betas.size(); ++level) {
    const ModelSpec at_beta = model.with_beta(betas[level]);
    result = descend(at_beta, std::move(params), warm, schedule, stacks_fn);
    steps += result.descent_steps;
    warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
    params = result.params;
    warm = result.tables.lambda;
    if (level + 1 < betas.size() && schedule.perturbation > 0.0) {
      for (double& x : params.manipulable()) x += schedule.perturbation * noise(rng);
    }
  }
  result.warnings = std::move(warnings);
  result.descent_steps = steps;
  return result;
}

}  // namespace parasdm
