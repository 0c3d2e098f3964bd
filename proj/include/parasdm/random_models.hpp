#pragma once

// Seeded generators of small validated models and policies, used by the
// verification suite and the tests.

#include <parasdm/cost.hpp>
#include <parasdm/model.hpp>
#include <parasdm/parameters.hpp>
#include <parasdm/policy_system.hpp>
#include <parasdm/scenario.hpp>

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

namespace parasdm {

struct RandomModelOptions {
  std::size_t n_states = 5;   // including the terminal (last index)
  std::size_t n_actions = 3;
  double gamma = 0.9;
  double beta = 2.0;
  std::size_t max_branches = 3;
  /// Minimum probability of jumping straight to the terminal from every (s, a).
  double exit_probability = 0.1;
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  double action_weight = 0.5;
};

struct RandomModel {
  ModelSpec model;
  ParameterVector params;
};

/// Random stochastic model with a cost mixing a random base table, squared
/// distances between state parameters and distances to action parameters.
/// Each (s, a) exits to the terminal with probability >= exit_probability so
/// every policy is proper, even with gamma = 1.
inline RandomModel random_model(std::mt19937_64& rng, const RandomModelOptions& opt) {
  const std::size_t n = std::max<std::size_t>(opt.n_states, 2);
  const std::size_t m = std::max<std::size_t>(opt.n_actions, 1);
  const Index term = n - 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ModelSpec::Options o;
  for (std::size_t s = 0; s < n; ++s) o.state_names.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < m; ++a) o.action_names.push_back("a" + std::to_string(a));
  o.terminal = term;
  o.allowed.resize(n);
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      if (s == term || a == 0 || unit(rng) < 0.7) o.allowed[s].push_back(a);
    }
  }
  for (Index s = 0; s < n; ++s) {
    for (Index a = 0; a < m; ++a) {
      if (s == term) {
        o.kernel.push_back({s, a, term, 1.0});
        continue;
      }
      const std::size_t branches = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(opt.max_branches));
      std::vector<Index> targets;
      std::uniform_int_distribution<Index> pick(0, n - 2);
      for (std::size_t b = 0; b < branches; ++b) {
        Index t = pick(rng);
        if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
      }
      std::vector<double> w(targets.size());
      double total = 0.0;
      for (double& x : w) {
        x = 0.1 + unit(rng);
        total += x;
      }
      const double exit = opt.exit_probability + (1.0 - opt.exit_probability) * 0.5 * unit(rng);
      double assigned = exit;
      o.kernel.push_back({s, a, term, exit});
      for (std::size_t k = 0; k < targets.size(); ++k) {
        double p = (1.0 - exit) * w[k] / total;
        if (k + 1 == targets.size()) p = 1.0 - assigned;
        assigned += p;
        o.kernel.push_back({s, a, targets[k], p});
      }
    }
  }
  std::vector<double> base(n * m * n, 0.0);
  for (Index s = 0; s < n; ++s) {
    if (s == term) continue;
    for (double* p = &base[s * m * n]; p != &base[s * m * n] + m * n; ++p) *p = unit(rng);
  }
  o.gamma = opt.gamma;
  o.beta = opt.beta;
  // Terminal transitions are self-loops, so the distance term vanishes there;
  // the action term is masked explicitly.
  auto quad = std::make_shared<QuadraticCost>(n, m, base, 1.0, 0.0);
  std::shared_ptr<const CostModel> cost = quad;
  if (opt.action_weight != 0.0 && opt.action_dim == opt.state_dim) {
    const double w = opt.action_weight;
    auto action_part = std::make_shared<QuadraticCost>(n, m, std::vector<double>{}, 0.0, w);
    auto guarded = std::make_shared<FunctionCost>(
        [action_part, term](Index s, Index a, Index t, const ParameterVector& p) {
          return s == term ? 0.0 : action_part->value(s, a, t, p);
        },
        [action_part, term](Index s, Index a, Index t, const ParameterVector& p, double weight, std::span<double> g) {
          if (s != term) action_part->add_gradient(s, a, t, p, weight, g);
        });
    cost = std::make_shared<SumCost>(quad, guarded);
  }
  o.cost = cost;

  std::vector<Index> man_states, man_actions;
  for (Index s = 0; s < n; ++s)
    if (s != term && unit(rng) < 0.5) man_states.push_back(s);
  for (Index a = 0; a < m; ++a)
    if (unit(rng) < 0.5) man_actions.push_back(a);
  const std::size_t adim = opt.action_dim == opt.state_dim ? opt.action_dim : 0;
  auto layout = std::make_shared<const ParameterLayout>(n, m, opt.state_dim, adim, man_states, man_actions);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(layout->size());
  for (double& x : values) x = normal(rng);
  return {ModelSpec(std::move(o)), ParameterVector(layout, std::move(values))};
}

/// Strictly positive random policy: normalized uniform(0.05, 1) weights.
inline SoftPolicy random_policy(const ModelSpec& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  SoftPolicy policy;
  policy.mu.assign(model.pair_count(), 0.0);
  for (Index s = 0; s < model.n_states(); ++s) {
    double total = 0.0;
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      policy.mu[k] = weight(rng);
      total += policy.mu[k];
    }
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) policy.mu[k] /= total;
  }
  return policy;
}

/// Random planar UAV scene with users and UAVs in [0, extent]^2.
inline UavScenario random_scenario(std::mt19937_64& rng, std::size_t n_users, std::size_t n_uavs, double extent,
                                   double gamma, double beta) {
  const std::vector<std::pair<double, double>> box{{0.0, extent}, {0.0, extent}};
  UavScenario sc;
  sc.users = random_points(n_users, box, rng);
  sc.uavs = random_points(n_uavs, box, rng);
  sc.base = random_points(1, box, rng).front();
  sc.gamma = gamma;
  sc.beta = beta;
  return sc;
}

}  // namespace parasdm
