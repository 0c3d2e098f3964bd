#pragma once

// Control-Lyapunov tracking of the manipulable parameters.
//
// The Lyapunov candidate is the (weighted) free-energy sum
//   Vc(Upsilon) = sum_s w(s) V*(s),
// whose time derivative is affine in the control: dVc/dt = G^T kappa + F^T u.
// With alpha = G^T kappa and f = F^T F the feedback
//   u(F) = -[K0 + (alpha + sqrt(alpha^2 + f^2)) / f] F      (u = 0 when F = 0)
// gives dVc/dt = -K0 f - sqrt(alpha^2 + f^2) <= 0.

#include <parasdm/anneal.hpp>
#include <parasdm/model.hpp>
#include <parasdm/sensitivity.hpp>
#include <parasdm/soft_solver.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace parasdm {

enum class RefreshMode { exact, taylor };

struct ControlConfig {
  double k0 = 1.0;
  double dt = 0.01;
  /// u = 0 whenever F^T F <= zero_threshold.
  double zero_threshold = 1e-9;
  RefreshMode mode = RefreshMode::exact;
  /// Cap on |u|_2; infinity disables clipping.
  double gain_cap = std::numeric_limits<double>::infinity();
  double fixed_point_tol = 1e-10;
  std::size_t max_fixed_point_iter = 10'000;

  void validate() const {
    if (!(k0 > 0.0)) throw Error("control gain K0 must be positive");
    if (!(dt > 0.0)) throw Error("time step must be positive");
    if (!(zero_threshold >= 0.0)) throw Error("zero threshold must be non-negative");
    if (!(gain_cap > 0.0)) throw Error("gain cap must be positive");
  }
};

inline std::vector<double> control_law(std::span<const double> F, double alpha, const ControlConfig& cfg) {
  std::vector<double> u(F.size(), 0.0);
  double f2 = 0.0;
  for (double f : F) f2 += f * f;
  if (f2 <= cfg.zero_threshold || f2 == 0.0) return u;
  const double gain = cfg.k0 + (alpha + std::hypot(alpha, f2)) / f2;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    u[i] = -gain * F[i];
    norm2 += u[i] * u[i];
  }
  if (std::isfinite(cfg.gain_cap)) {
    const double norm = std::sqrt(norm2);
    if (norm > cfg.gain_cap) {
      for (double& x : u) x *= cfg.gain_cap / norm;
    }
  }
  return u;
}

/// Sum of V*(s) over all states.
inline double lyapunov_value(const ValueTables& tables) {
  double acc = 0.0;
  for (double v : tables.vstar) acc += v;
  return acc;
}

/// Weighted sum using the model's objective weights.
inline double lyapunov_value(const ModelSpec& model, const ValueTables& tables) {
  return weighted_sum(model.objective_weights(), tables.vstar);
}

/// First-order estimate V*(s) + sum_theta g_theta(s) dUpsilon_theta.
inline std::vector<double> taylor_update(std::span<const double> vstar, const GradientTable& gradients,
                                         std::span<const double> delta) {
  if (gradients.n_states() != vstar.size() || gradients.n_coords() != delta.size()) {
    throw LayoutError("taylor update dimensions do not match");
  }
  std::vector<double> out(vstar.begin(), vstar.end());
  for (std::size_t theta = 0; theta < delta.size(); ++theta) {
    if (delta[theta] == 0.0) continue;
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += gradients(s, theta) * delta[theta];
  }
  return out;
}

struct ControlState {
  double t = 0.0;
  ParameterVector params;
  ValueTables tables;
  SoftPolicy policy;
  DerivativeStacks stacks;
  double lyapunov = 0.0;
  double alpha = 0.0;
  std::vector<double> u;
};

/// Builds the state at time t from converged tables at `params`.
inline ControlState initial_state(const ModelSpec& model, ParameterVector params, ValueTables tables,
                                  const PrescribedDynamics& dynamics, double t = 0.0) {
  ControlState st;
  st.t = t;
  st.policy = gibbs_policy(tables, model);
  st.stacks = assemble_stacks(model, params, st.policy);
  const auto kappa = dynamics(params, t);
  st.alpha = 0.0;
  for (std::size_t i = 0; i < kappa.size(); ++i) st.alpha += st.stacks.G[i] * kappa[i];
  st.lyapunov = lyapunov_value(model, tables);
  st.u.assign(st.stacks.F.size(), 0.0);
  st.params = std::move(params);
  st.tables = std::move(tables);
  return st;
}

/// Advances one explicit-Euler step of length cfg.dt:
/// prescribed coordinates by kappa, manipulable coordinates by u(F), then
/// refreshes the values (exact warm-started re-solve or first-order update
/// followed by one Bellman sweep) and the Gibbs policy.
inline ControlState step(const ControlState& state, const ModelSpec& model, const PrescribedDynamics& dynamics,
                         const ControlConfig& cfg) {
  cfg.validate();
  ControlState next;
  next.t = state.t + cfg.dt;
  next.params = state.params;

  const auto kappa = dynamics(state.params, state.t);
  {
    auto pres = next.params.prescribed();
    for (std::size_t i = 0; i < pres.size(); ++i) pres[i] += cfg.dt * kappa[i];
  }

  next.stacks = assemble_stacks(model, next.params, state.policy);

  next.alpha = 0.0;
  for (std::size_t i = 0; i < kappa.size(); ++i) next.alpha += next.stacks.G[i] * kappa[i];
  next.u = control_law(next.stacks.F, next.alpha, cfg);
  {
    auto man = next.params.manipulable();
    for (std::size_t i = 0; i < man.size(); ++i) man[i] += cfg.dt * next.u[i];
  }

  if (cfg.mode == RefreshMode::taylor) {
    // The expansion point is the pre-step configuration, where the current
    // policy is exactly Gibbs.
    const auto table = gradient_table(model, state.params, state.policy);
    std::vector<double> delta(next.params.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = next.params.flat()[i] - state.params.flat()[i];
    const auto approx = taylor_update(state.tables.vstar, table, delta);
    next.tables = make_tables(model, state_action_values(model, next.params, approx));
  } else {
    auto sol = solve_fixed_point(model, next.params, state.tables.lambda, cfg.fixed_point_tol, cfg.max_fixed_point_iter);
    next.tables = std::move(sol.tables);
  }
  next.policy = gibbs_policy(next.tables, model);
  next.lyapunov = lyapunov_value(model, next.tables);
  return next;
}

}  // namespace parasdm
