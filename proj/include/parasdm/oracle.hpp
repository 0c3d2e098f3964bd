#pragma once

// Path-space oracles for the entropy-augmented cumulative cost of a policy:
// the expectation over paths of sum_k gamma^k cbar_k with
//   cbar = c(s,a,s') + (gamma/beta)(log p(s'|s,a) + log mu(a|s)).
// Nothing here touches the linear policy system, so the results are an
// independent check on soft_policy_value.

#include <parasdm/model.hpp>
#include <parasdm/policy_system.hpp>
#include <parasdm/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace parasdm {

struct BruteForceValue {
  std::vector<double> values;
  /// Upper bound on the truncation error |V - values|_inf.
  double tail_bound = 0.0;
};

namespace detail {

inline double step_cost(const ModelSpec& model, const ParameterVector& params, Index s, Index a, Index next,
                        double p, double mu) {
  const double c = model.cost().value(s, a, next, params);
  if (!std::isfinite(c)) throw NumericError(s, a, next, c);
  return c + (model.gamma() / model.beta()) * (std::log(p) + std::log(mu));
}

inline void enumerate(const ModelSpec& model, const ParameterVector& params, const SoftPolicy& policy, Index s,
                      std::size_t depth, double prob, double discount, double accumulated, double& total) {
  if (s == model.terminal() || depth == 0) {
    total += prob * accumulated;
    return;
  }
  for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
    const Index a = model.pair_action(k);
    const double mu = policy.mu[k];
    if (mu <= 0.0) continue;
    for (const auto& tr : model.transitions(s, a)) {
      const double cbar = step_cost(model, params, s, a, tr.next, tr.probability, mu);
      enumerate(model, params, policy, tr.next, depth - 1, prob * mu * tr.probability, discount * model.gamma(),
                accumulated + discount * cbar, total);
    }
  }
}

}  // namespace detail

/// Explicit enumeration of every action/state path of length <= horizon from
/// `start`. Exponential in the horizon; intended for tiny models.
inline double enumerate_paths_value(const ModelSpec& model, const ParameterVector& params, const SoftPolicy& policy,
                                    Index start, std::size_t horizon) {
  double total = 0.0;
  detail::enumerate(model, params, policy, start, horizon, 1.0, 1.0, 0.0, total);
  return total;
}

/// Expectation over all paths of length <= horizon, aggregated by pushing the
/// path measure forward one hop at a time. Throws when the horizon cannot
/// guarantee `tol`: for gamma < 1 the geometric tail gamma^H cmax / (1 - gamma)
/// must be <= tol; for gamma = 1 every path must have been absorbed.
inline BruteForceValue brute_force_value(const ModelSpec& model, const ParameterVector& params,
                                         const SoftPolicy& policy, std::size_t horizon, double tol) {
  const std::size_t n = model.n_states();
  const Index term = model.terminal();
  const double gamma = model.gamma();

  // Expected one-hop cbar from each state under the policy.
  std::vector<double> hop(n, 0.0);
  double cmax = 0.0;
  for (Index s = 0; s < n; ++s) {
    if (s == term) continue;
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      const double mu = policy.mu[k];
      if (mu <= 0.0) continue;
      const Index a = model.pair_action(k);
      for (const auto& tr : model.transitions(s, a)) {
        hop[s] += mu * tr.probability * detail::step_cost(model, params, s, a, tr.next, tr.probability, mu);
      }
    }
    cmax = std::max(cmax, std::abs(hop[s]));
  }

  BruteForceValue out;
  out.values.assign(n, 0.0);
  double worst_survival = 0.0;
  for (Index start = 0; start < n; ++start) {
    if (start == term) continue;
    std::vector<double> mass(n, 0.0), next(n, 0.0);
    mass[start] = 1.0;
    double discount = 1.0;
    double value = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      for (Index s = 0; s < n; ++s) {
        if (s == term || mass[s] == 0.0) continue;
        value += discount * mass[s] * hop[s];
        for (std::size_t pk = model.pair_begin(s); pk < model.pair_end(s); ++pk) {
          const double mu = policy.mu[pk];
          for (const auto& tr : model.transitions(s, model.pair_action(pk))) next[tr.next] += mass[s] * mu * tr.probability;
        }
      }
      mass.swap(next);
      discount *= gamma;
    }
    double survival = 0.0;
    for (Index s = 0; s < n; ++s)
      if (s != term) survival += mass[s];
    worst_survival = std::max(worst_survival, survival);
    out.values[start] = value;
  }

  if (gamma < 1.0) {
    out.tail_bound = std::pow(gamma, static_cast<double>(horizon)) * cmax / (1.0 - gamma);
  } else {
    out.tail_bound = worst_survival == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if (out.tail_bound > tol) {
    throw Error("horizon " + std::to_string(horizon) + " is insufficient for tolerance " + std::to_string(tol));
  }
  return out;
}

}  // namespace parasdm
