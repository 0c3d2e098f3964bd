#pragma once

// Derivatives of the free energy with respect to parameter coordinates.
//
// At the Gibbs policy mu of (beta, Upsilon), g_theta(s) = dV*(s)/dtheta solves
//
//   g_theta(s) = sum_{a,s'} mu(a|s) p(s'|s,a) (dc(s,a,s')/dtheta + gamma g_theta(s'))
//
// with g_theta(delta) = 0. The policy-derivative terms vanish only at the Gibbs
// policy, so callers must pass the policy of the tables they differentiate.

#include <parasdm/model.hpp>
#include <parasdm/policy_system.hpp>
#include <parasdm/soft_solver.hpp>
#include <parasdm/types.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace parasdm {

/// g_theta(s) for every state s (rows) and flat coordinate theta (columns).
struct GradientTable {
  Eigen::MatrixXd values;

  std::size_t n_states() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t n_coords() const { return static_cast<std::size_t>(values.cols()); }
  double operator()(Index s, std::size_t theta) const {
    return values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(theta));
  }
};

/// F: derivatives of the Lyapunov sum over manipulable coordinates; G: over prescribed ones.
struct DerivativeStacks {
  std::vector<double> F;
  std::vector<double> G;

  double f_norm() const {
    double acc = 0.0;
    for (double f : F) acc += f * f;
    return std::sqrt(acc);
  }
  double f_inf_norm() const {
    double m = 0.0;
    for (double f : F) m = std::max(m, std::abs(f));
    return m;
  }
};

/// b(s, theta) = sum_{a,s'} mu p dc/dtheta for nonterminal s.
inline Eigen::MatrixXd cost_gradient_rhs(const ModelSpec& model, const ParameterVector& params,
                                         const SoftPolicy& policy) {
  const std::size_t n = model.n_states();
  const std::size_t dim = params.size();
  // Row-major scratch so each state's row is contiguous for add_gradient.
  std::vector<double> scratch(n * dim, 0.0);
  for (Index s = 0; s < n; ++s) {
    if (s == model.terminal()) continue;
    std::span<double> row(scratch.data() + s * dim, dim);
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      const Index a = model.pair_action(k);
      for (const auto& tr : model.transitions(s, a)) {
        model.cost().add_gradient(s, a, tr.next, params, policy.mu[k] * tr.probability, row);
      }
    }
  }
  Eigen::MatrixXd b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < dim; ++j) b(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = scratch[s * dim + j];
  return b;
}

/// Full gradient table, one shared factorization for all coordinates.
inline GradientTable gradient_table(const ModelSpec& model, const ParameterVector& params, const SoftPolicy& policy,
                                    PolicySystemOptions options = {}) {
  PolicySystem system(model, policy, options);
  return {system.solve(cost_gradient_rhs(model, params, policy))};
}

/// g_theta for a single flat coordinate.
inline std::vector<double> value_gradient(const ModelSpec& model, const ParameterVector& params,
                                          const SoftPolicy& policy, std::size_t theta,
                                          PolicySystemOptions options = {}) {
  if (theta >= params.size()) throw LayoutError("coordinate index out of range");
  PolicySystem system(model, policy, options);
  const Eigen::MatrixXd b = cost_gradient_rhs(model, params, policy);
  std::vector<double> column(model.n_states());
  for (std::size_t s = 0; s < column.size(); ++s) column[s] = b(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(theta));
  return system.solve(column);
}

/// Weighted state sums of a gradient table, split into F (manipulable) and G (prescribed).
inline DerivativeStacks stacks_from_table(const ModelSpec& model, const ParameterLayout& layout,
                                          const GradientTable& table) {
  const auto& w = model.objective_weights();
  DerivativeStacks out;
  out.G.assign(layout.n_prescribed(), 0.0);
  out.F.assign(layout.n_manipulable(), 0.0);
  for (std::size_t theta = 0; theta < layout.size(); ++theta) {
    double acc = 0.0;
    for (Index s = 0; s < model.n_states(); ++s) acc += w[s] * table(s, theta);
    if (theta < layout.n_prescribed()) {
      out.G[theta] = acc;
    } else {
      out.F[theta - layout.n_prescribed()] = acc;
    }
  }
  return out;
}

/// F and G through the adjoint system: with (I - gamma P)^T y = w, the
/// Lyapunov gradient is b^T y, avoiding one solve per coordinate.
inline DerivativeStacks assemble_stacks(const ModelSpec& model, const ParameterVector& params,
                                        const SoftPolicy& policy, PolicySystemOptions options = {}) {
  PolicySystem system(model, policy, options);
  const auto y = system.solve_transposed(model.objective_weights());
  const std::size_t n = model.n_states();
  const std::size_t dim = params.size();
  std::vector<double> grad(dim, 0.0);
  for (Index s = 0; s < n; ++s) {
    if (s == model.terminal() || y[s] == 0.0) continue;
    for (std::size_t k = model.pair_begin(s); k < model.pair_end(s); ++k) {
      const Index a = model.pair_action(k);
      for (const auto& tr : model.transitions(s, a)) {
        model.cost().add_gradient(s, a, tr.next, params, y[s] * policy.mu[k] * tr.probability, grad);
      }
    }
  }
  const std::size_t np = params.layout().n_prescribed();
  DerivativeStacks out;
  out.G.assign(grad.begin(), grad.begin() + static_cast<std::ptrdiff_t>(np));
  out.F.assign(grad.begin() + static_cast<std::ptrdiff_t>(np), grad.end());
  return out;
}

}  // namespace parasdm
