#pragma once

// The linear system (I - gamma P_mu) x = b over the nonterminal states, where
// P_mu(s, s') = sum_a mu(a|s) p(s'|s,a). Used for policy evaluation and for
// the gradient recursions; one factorization serves any number of right-hand
// sides. Terminal entries of every solution are pinned to zero.

#include <parasdm/model.hpp>
#include <parasdm/types.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace parasdm {

/// mu(a|s) stored per allowed state-action pair (see ModelSpec::pair_index).
struct SoftPolicy {
  std::vector<double> mu;

  double operator()(const ModelSpec& model, Index s, Index a) const {
    auto k = model.pair_index(s, a);
    return k ? mu[*k] : 0.0;
  }
};

struct PolicySystemOptions {
  /// Dense LU up to this many states, fixed-point iteration above.
  std::size_t dense_limit = 512;
  double iterative_tol = 1e-12;
  std::size_t max_iter = 1'000'000;
  double min_rcond = 1e-13;
};

class PolicySystem {
 public:
  PolicySystem(const ModelSpec& model, const SoftPolicy& policy, PolicySystemOptions options = {})
      : n_(model.n_states()), terminal_(model.terminal()), gamma_(model.gamma()), options_(options) {
    if (policy.mu.size() != model.pair_count()) {
      throw LayoutError("policy size does not match the model's state-action pairs");
    }
    // Compact index over nonterminal states.
    index_.assign(n_, n_);
    for (Index s = 0; s < n_; ++s) {
      if (s != terminal_) {
        index_[s] = states_.size();
        states_.push_back(s);
      }
    }
    const std::size_t k = states_.size();
    transition_.setZero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      const Index s = states_[i];
      for (std::size_t pair = model.pair_begin(s); pair < model.pair_end(s); ++pair) {
        const Index a = model.pair_action(pair);
        const double mu = policy.mu[pair];
        for (const auto& tr : model.transitions(s, a)) {
          if (tr.next == terminal_) continue;
          transition_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(index_[tr.next])) += mu * tr.probability;
        }
      }
    }
    dense_ = k <= options_.dense_limit;
    if (dense_ && k > 0) {
      Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) -
                               gamma_ * transition_;
      lu_.compute(system);
      const double rcond = lu_.rcond();
      if (!(rcond > options_.min_rcond)) {
        throw SingularSystemError("I - gamma P_mu is singular (rcond=" + std::to_string(rcond) +
                                  "); the policy is not proper");
      }
    }
  }

  std::size_t n_states() const { return n_; }
  bool dense() const { return dense_; }

  /// Solves (I - gamma P) x = b. `rhs` is indexed by state; its terminal entry is ignored.
  std::vector<double> solve(std::span<const double> rhs) const {
    Eigen::MatrixXd b = gather(rhs);
    Eigen::MatrixXd x = solve_compact(b, false);
    return scatter_vector(x);
  }

  /// Solves (I - gamma P)^T y = w, the adjoint system.
  std::vector<double> solve_transposed(std::span<const double> rhs) const {
    Eigen::MatrixXd b = gather(rhs);
    Eigen::MatrixXd y = solve_compact(b, true);
    return scatter_vector(y);
  }

  /// Column-wise solve of an (n_states x k) right-hand side; terminal row ignored and zeroed.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
    if (static_cast<std::size_t>(rhs.rows()) != n_) throw LayoutError("rhs must have one row per state");
    Eigen::MatrixXd b(static_cast<Eigen::Index>(states_.size()), rhs.cols());
    for (std::size_t i = 0; i < states_.size(); ++i) b.row(static_cast<Eigen::Index>(i)) = rhs.row(static_cast<Eigen::Index>(states_[i]));
    Eigen::MatrixXd x = solve_compact(b, false);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < states_.size(); ++i) out.row(static_cast<Eigen::Index>(states_[i])) = x.row(static_cast<Eigen::Index>(i));
    return out;
  }

 private:
  Eigen::MatrixXd gather(std::span<const double> rhs) const {
    if (rhs.size() != n_) throw LayoutError("rhs must have one entry per state");
    Eigen::MatrixXd b(static_cast<Eigen::Index>(states_.size()), 1);
    for (std::size_t i = 0; i < states_.size(); ++i) b(static_cast<Eigen::Index>(i), 0) = rhs[states_[i]];
    return b;
  }

  std::vector<double> scatter_vector(const Eigen::MatrixXd& x) const {
    std::vector<double> out(n_, 0.0);
    for (std::size_t i = 0; i < states_.size(); ++i) out[states_[i]] = x(static_cast<Eigen::Index>(i), 0);
    return out;
  }

  Eigen::MatrixXd solve_compact(const Eigen::MatrixXd& b, bool transposed) const {
    if (states_.empty()) return b;
    if (dense_) {
      if (transposed) return lu_.transpose().solve(b);
      return lu_.solve(b);
    }
    // x <- b + gamma P x, converges for proper policies.
    Eigen::MatrixXd x = b;
    for (std::size_t it = 0; it < options_.max_iter; ++it) {
      Eigen::MatrixXd next = transposed ? Eigen::MatrixXd(b + gamma_ * transition_.transpose() * x)
                                        : Eigen::MatrixXd(b + gamma_ * transition_ * x);
      const double change = (next - x).cwiseAbs().maxCoeff();
      x.swap(next);
      if (!std::isfinite(change)) break;
      if (change <= options_.iterative_tol * std::max(1.0, x.cwiseAbs().maxCoeff())) return x;
    }
    throw SingularSystemError("policy system iteration did not converge; the policy is not proper");
  }

  std::size_t n_;
  Index terminal_;
  double gamma_;
  PolicySystemOptions options_;
  std::vector<Index> states_;
  std::vector<std::size_t> index_;
  Eigen::MatrixXd transition_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool dense_ = true;
};

}  // namespace parasdm
