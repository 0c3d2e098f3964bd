#pragma once

// Entropy-regularized (soft) Bellman machinery for a fixed parameter vector:
// the contraction map on state-action values, its fixed point, the Gibbs
// policy, the free energy, and evaluation of arbitrary proper policies.
//
// With temperature ratio r = beta / gamma:
//
//   V*(s)     = -(1/r) log sum_{a in allowed(s)} exp(-r Lambda(s,a))
//   [T L](s,a) = sum_s' p(s'|s,a) (c(s,a,s') + (gamma/beta) log p(s'|s,a) + gamma V*_L(s'))
//   mu(a|s)   = exp(-r Lambda(s,a)) / sum_a' exp(-r Lambda(s,a'))
//
// The terminal state is cost-free: Lambda(delta, .) = 0 and V*(delta) = 0.

#include <parasdm/model.hpp>
#include <parasdm/policy_system.hpp>
#include <parasdm/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace parasdm {

struct ValueTables {
  std::vector<double> lambda;  // per allowed state-action pair
  std::vector<double> vstar;   // per state
};

namespace detail {

/// Max-subtracted soft-min: -(1/r) log sum exp(-r x_i).
inline double soft_min(std::span<const double> x, double ratio) {
  double lo = std::numeric_limits<double>::infinity();
  for (double v : x) lo = std::min(lo, v);
  if (!std::isfinite(lo)) return lo;
  double sum = 0.0;
  for (double v : x) sum += std::exp(-ratio * (v - lo));
  return lo - std::log(sum) / ratio;
}

inline double entropy_term(double p, double gamma, double beta) {
  return p > 0.0 ? (gamma / beta) * std::log(p) : 0.0;
}

}  // namespace detail

/// Per pair: sum_s' p (c + (gamma/beta) log p). Independent of Lambda, so it
/// is evaluated once per parameter vector.
inline std::vector<double> immediate_costs(const ModelSpec& model, const ParameterVector& params) {
  std::vector<double> out(model.pair_count(), 0.0);
  const Index term = model.terminal();
  for (Index s = 0; s < model.n_states(); ++s) {
    if (s == term) continue;
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      const Index a = model.pair_action(k);
      double acc = 0.0;
      for (const auto& tr : model.transitions(s, a)) {
        const double c = model.cost().value(s, a, tr.next, params);
        if (!std::isfinite(c)) throw NumericError(s, a, tr.next, c);
        acc += tr.probability * (c + detail::entropy_term(tr.probability, model.gamma(), model.beta()));
      }
      out[k] = acc;
    }
  }
  return out;
}

/// Free energy V* of a state-action table; V*(delta) = 0.
inline std::vector<double> free_energy(std::span<const double> lambda, const ModelSpec& model) {
  if (lambda.size() != model.pair_count()) throw LayoutError("lambda size does not match the model");
  const double ratio = model.beta() / model.gamma();
  std::vector<double> v(model.n_states(), 0.0);
  for (Index s = 0; s < model.n_states(); ++s) {
    if (s == model.terminal()) continue;
    v[s] = detail::soft_min(lambda.subspan(model.pair_begin(s), model.pair_end(s) - model.pair_begin(s)), ratio);
  }
  return v;
}

/// Lambda(s,a) = immediate(s,a) + gamma sum_s' p V(s') for a given state value V.
inline std::vector<double> state_action_values(const ModelSpec& model, std::span<const double> immediate,
                                               std::span<const double> vstar) {
  std::vector<double> lambda(model.pair_count(), 0.0);
  const Index term = model.terminal();
  for (Index s = 0; s < model.n_states(); ++s) {
    if (s == term) continue;
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      double acc = 0.0;
      for (const auto& tr : model.transitions(s, model.pair_action(k))) {
        if (tr.next != term) acc += tr.probability * vstar[tr.next];
      }
      lambda[k] = immediate[k] + model.gamma() * acc;
    }
  }
  return lambda;
}

inline std::vector<double> state_action_values(const ModelSpec& model, const ParameterVector& params,
                                               std::span<const double> vstar) {
  const auto imm = immediate_costs(model, params);
  return state_action_values(model, imm, vstar);
}

/// One application of the soft Bellman operator T.
inline std::vector<double> soft_bellman_operator(std::span<const double> lambda, const ModelSpec& model,
                                                 const ParameterVector& params) {
  const auto v = free_energy(lambda, model);
  return state_action_values(model, params, v);
}

inline ValueTables make_tables(const ModelSpec& model, std::vector<double> lambda) {
  ValueTables t;
  t.vstar = free_energy(lambda, model);
  t.lambda = std::move(lambda);
  return t;
}

struct FixedPointSolution {
  ValueTables tables;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Iterates T from `lambda0` until |T L - L|_inf <= tol. Throws
/// ConvergenceError when `max_iter` applications do not suffice.
inline FixedPointSolution solve_fixed_point(const ModelSpec& model, const ParameterVector& params,
                                            std::vector<double> lambda0 = {}, double tol = 1e-10,
                                            std::size_t max_iter = 10'000) {
  if (!(tol > 0.0)) throw Error("fixed-point tolerance must be positive");
  if (lambda0.empty()) lambda0.assign(model.pair_count(), 0.0);
  if (lambda0.size() != model.pair_count()) throw LayoutError("initial lambda size does not match the model");

  const auto imm = immediate_costs(model, params);
  std::vector<double> cur = std::move(lambda0);
  // Terminal rows are pinned regardless of the initial guess.
  for (std::size_t k = model.pair_begin(model.terminal()); k < model.pair_end(model.terminal()); ++k) cur[k] = 0.0;

  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= max_iter; ++it) {
    auto v = free_energy(cur, model);
    auto next = state_action_values(model, imm, v);
    residual = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) residual = std::max(residual, std::abs(next[k] - cur[k]));
    cur.swap(next);
    if (!std::isfinite(residual)) break;
    if (residual <= tol) {
      FixedPointSolution sol;
      sol.tables = make_tables(model, std::move(cur));
      sol.iterations = it;
      sol.residual = residual;
      return sol;
    }
  }
  throw ConvergenceError("soft Bellman fixed point did not converge", max_iter, residual);
}

/// Gibbs policy of a state-action table. Terminal rows are uniform.
inline SoftPolicy gibbs_policy(const ValueTables& tables, const ModelSpec& model) {
  if (tables.lambda.size() != model.pair_count()) throw LayoutError("lambda size does not match the model");
  const double ratio = model.beta() / model.gamma();
  SoftPolicy policy;
  policy.mu.assign(model.pair_count(), 0.0);
  for (Index s = 0; s < model.n_states(); ++s) {
    const std::size_t b = model.pair_begin(s);
    const std::size_t e = model.pair_end(s);
    if (b == e) continue;
    if (s == model.terminal()) {
      for (std::size_t k = b; k < e; ++k) policy.mu[k] = 1.0 / static_cast<double>(e - b);
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t k = b; k < e; ++k) lo = std::min(lo, tables.lambda[k]);
    double sum = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      policy.mu[k] = std::exp(-ratio * (tables.lambda[k] - lo));
      sum += policy.mu[k];
    }
    for (std::size_t k = b; k < e; ++k) policy.mu[k] /= sum;
  }
  return policy;
}

/// Value V^mu of a proper policy under the entropy-augmented cost
/// c + (gamma/beta)(log p + log mu), solved directly from (I - gamma P_mu) V = b.
inline std::vector<double> soft_policy_value(const ModelSpec& model, const ParameterVector& params,
                                             const SoftPolicy& policy, PolicySystemOptions options = {}) {
  PolicySystem system(model, policy, options);
  const auto imm = immediate_costs(model, params);
  std::vector<double> b(model.n_states(), 0.0);
  for (Index s = 0; s < model.n_states(); ++s) {
    if (s == model.terminal()) continue;
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      const double mu = policy.mu[k];
      if (mu <= 0.0) continue;
      b[s] += mu * (imm[k] + (model.gamma() / model.beta()) * std::log(mu));
    }
  }
  return system.solve(b);
}

}  // namespace parasdm
