#pragma once

// Parameterized transition costs c(s, a, s'; Upsilon) with analytic partials.

#include <parasdm/parameters.hpp>
#include <parasdm/types.hpp>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace parasdm {

class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual double value(Index s, Index a, Index next, const ParameterVector& params) const = 0;

  /// Adds `weight * dc(s,a,next)/dtheta` to `grad[theta]` for every flat coordinate theta.
  virtual void add_gradient(Index s, Index a, Index next, const ParameterVector& params,
                            double weight, std::span<double> grad) const = 0;
};

/// c = base(s,a,s') + w_t * |zeta_s - zeta_s'|^2 + w_a * |zeta_s - eta_a|^2
///
/// `base` is dense in [s][a][s'] order or empty (all zero). The action term
/// requires state_dim == action_dim.
class QuadraticCost final : public CostModel {
 public:
  QuadraticCost(std::size_t n_states, std::size_t n_actions, std::vector<double> base,
                double transition_weight, double action_weight = 0.0)
      : n_states_(n_states),
        n_actions_(n_actions),
        base_(std::move(base)),
        transition_weight_(transition_weight),
        action_weight_(action_weight) {
    if (!base_.empty() && base_.size() != n_states * n_actions * n_states) {
      throw ModelError("cost base table must have N*M*N entries");
    }
  }

  double value(Index s, Index a, Index next, const ParameterVector& params) const override {
    double c = base_.empty() ? 0.0 : base_[(s * n_actions_ + a) * n_states_ + next];
    if (transition_weight_ != 0.0) {
      auto x = params.zeta(s);
      auto y = params.zeta(next);
      double d2 = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - y[k]) * (x[k] - y[k]);
      c += transition_weight_ * d2;
    }
    if (action_weight_ != 0.0) {
      auto x = params.zeta(s);
      auto e = params.eta(a);
      check_action_dims(x.size(), e.size());
      double d2 = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - e[k]) * (x[k] - e[k]);
      c += action_weight_ * d2;
    }
    return c;
  }

  void add_gradient(Index s, Index a, Index next, const ParameterVector& params, double weight,
                    std::span<double> grad) const override {
    const auto& layout = params.layout();
    if (transition_weight_ != 0.0 && s != next) {
      auto x = params.zeta(s);
      auto y = params.zeta(next);
      const std::size_t ox = layout.state_offset(s);
      const std::size_t oy = layout.state_offset(next);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double g = 2.0 * transition_weight_ * weight * (x[k] - y[k]);
        grad[ox + k] += g;
        grad[oy + k] -= g;
      }
    }
    if (action_weight_ != 0.0) {
      auto x = params.zeta(s);
      auto e = params.eta(a);
      check_action_dims(x.size(), e.size());
      const std::size_t ox = layout.state_offset(s);
      const std::size_t oe = layout.action_offset(a);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double g = 2.0 * action_weight_ * weight * (x[k] - e[k]);
        grad[ox + k] += g;
        grad[oe + k] -= g;
      }
    }
  }

  double transition_weight() const { return transition_weight_; }
  double action_weight() const { return action_weight_; }
  const std::vector<double>& base() const { return base_; }

 private:
  static void check_action_dims(std::size_t ds, std::size_t da) {
    if (ds != da) throw LayoutError("action cost term needs state_dim == action_dim");
  }

  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> base_;
  double transition_weight_;
  double action_weight_;
};

/// Pointwise sum of two costs.
class SumCost final : public CostModel {
 public:
  SumCost(std::shared_ptr<const CostModel> first, std::shared_ptr<const CostModel> second)
      : first_(std::move(first)), second_(std::move(second)) {}

  double value(Index s, Index a, Index next, const ParameterVector& params) const override {
    return first_->value(s, a, next, params) + second_->value(s, a, next, params);
  }

  void add_gradient(Index s, Index a, Index next, const ParameterVector& params, double weight,
                    std::span<double> grad) const override {
    first_->add_gradient(s, a, next, params, weight, grad);
    second_->add_gradient(s, a, next, params, weight, grad);
  }

 private:
  std::shared_ptr<const CostModel> first_;
  std::shared_ptr<const CostModel> second_;
};

/// Cost backed by user callables; handy for tests and ad-hoc models.
class FunctionCost final : public CostModel {
 public:
  using ValueFn = std::function<double(Index, Index, Index, const ParameterVector&)>;
  using GradientFn =
      std::function<void(Index, Index, Index, const ParameterVector&, double, std::span<double>)>;

  FunctionCost(ValueFn value, GradientFn gradient)
      : value_(std::move(value)), gradient_(std::move(gradient)) {}

  double value(Index s, Index a, Index next, const ParameterVector& params) const override {
    return value_(s, a, next, params);
  }

  void add_gradient(Index s, Index a, Index next, const ParameterVector& params, double weight,
                    std::span<double> grad) const override {
    if (gradient_) gradient_(s, a, next, params, weight, grad);
  }

 private:
  ValueFn value_;
  GradientFn gradient_;
};

}  // namespace parasdm
