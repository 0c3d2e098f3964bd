#pragma once

// The para-SDM data model: finite states/actions with a designated terminal
// state, a transition kernel, a parameterized cost, discount and inverse
// temperature; plus validation and the prescribed parameter dynamics.

#include <parasdm/cost.hpp>
#include <parasdm/parameters.hpp>
#include <parasdm/types.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace parasdm {

struct Transition {
  Index next;
  double probability;
};

/// One nonzero kernel entry p(next | s, a).
struct KernelEntry {
  Index s;
  Index a;
  Index next;
  double probability;
};

class ModelSpec {
 public:
  struct Options {
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    Index terminal = 0;
    std::vector<KernelEntry> kernel;
    /// allowed[s] lists the actions available at s; empty outer vector means "all actions everywhere".
    std::vector<std::vector<Index>> allowed;
    double gamma = 1.0;
    double beta = 1.0;
    std::shared_ptr<const CostModel> cost;
    /// Weights of V*(s) in the Lyapunov sum; empty means all ones.
    std::vector<double> objective_weights;
  };

  explicit ModelSpec(Options opt)
      : state_names_(std::move(opt.state_names)),
        action_names_(std::move(opt.action_names)),
        terminal_(opt.terminal),
        gamma_(opt.gamma),
        beta_(opt.beta),
        cost_(std::move(opt.cost)),
        weights_(std::move(opt.objective_weights)) {
    const std::size_t n = state_names_.size();
    const std::size_t m = action_names_.size();
    if (n == 0) throw ModelError("model needs at least one state");
    if (terminal_ >= n) throw ModelError("terminal index out of range");
    if (!cost_) throw ModelError("model needs a cost function");

    transitions_.assign(n * m, {});
    for (const auto& e : opt.kernel) {
      if (e.s >= n || e.next >= n || e.a >= m) throw ModelError("kernel entry index out of range");
      if (e.probability != 0.0) transitions_[e.s * m + e.a].push_back({e.next, e.probability});
    }
    for (auto& row : transitions_) {
      std::sort(row.begin(), row.end(), [](const Transition& x, const Transition& y) { return x.next < y.next; });
      for (std::size_t k = 1; k < row.size(); ++k) {
        if (row[k].next == row[k - 1].next) throw ModelError("duplicate kernel entry");
      }
    }

    if (opt.allowed.empty()) {
      std::vector<Index> all(m);
      std::iota(all.begin(), all.end(), Index{0});
      allowed_.assign(n, all);
    } else {
      if (opt.allowed.size() != n) throw ModelError("action mask must have one row per state");
      allowed_ = std::move(opt.allowed);
      for (auto& row : allowed_) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        for (Index a : row) {
          if (a >= m) throw ModelError("action mask index out of range");
        }
      }
    }

    if (weights_.empty()) weights_.assign(n, 1.0);
    if (weights_.size() != n) throw ModelError("objective weights must have one entry per state");

    pair_begin_.resize(n + 1, 0);
    for (Index s = 0; s < n; ++s) {
      pair_begin_[s + 1] = pair_begin_[s] + allowed_[s].size();
      for (Index a : allowed_[s]) pair_action_.push_back(a);
    }
  }

  std::size_t n_states() const { return state_names_.size(); }
  std::size_t n_actions() const { return action_names_.size(); }
  Index terminal() const { return terminal_; }
  double gamma() const { return gamma_; }
  double beta() const { return beta_; }
  const CostModel& cost() const { return *cost_; }
  const std::shared_ptr<const CostModel>& cost_ptr() const { return cost_; }
  const std::vector<double>& objective_weights() const { return weights_; }
  const std::string& state_name(Index s) const { return state_names_.at(s); }
  const std::string& action_name(Index a) const { return action_names_.at(a); }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::vector<std::string>& action_names() const { return action_names_; }

  std::span<const Index> allowed(Index s) const { return allowed_.at(s); }
  std::span<const Transition> transitions(Index s, Index a) const {
    return transitions_.at(s * n_actions() + a);
  }

  /// State-action pairs (s, a in allowed(s)) are numbered contiguously by state.
  std::size_t pair_count() const { return pair_action_.size(); }
  std::size_t pair_begin(Index s) const { return pair_begin_[s]; }
  std::size_t pair_end(Index s) const { return pair_begin_[s + 1]; }
  Index pair_action(std::size_t k) const { return pair_action_[k]; }
  std::optional<std::size_t> pair_index(Index s, Index a) const {
    auto row = allowed(s);
    auto it = std::lower_bound(row.begin(), row.end(), a);
    if (it == row.end() || *it != a) return std::nullopt;
    return pair_begin_[s] + static_cast<std::size_t>(it - row.begin());
  }

  ModelSpec with_beta(double beta) const {
    ModelSpec copy = *this;
    copy.beta_ = beta;
    return copy;
  }
  ModelSpec with_cost(std::shared_ptr<const CostModel> cost) const {
    ModelSpec copy = *this;
    copy.cost_ = std::move(cost);
    return copy;
  }
  ModelSpec with_objective_weights(std::vector<double> weights) const {
    if (weights.size() != n_states()) throw ModelError("objective weights must have one entry per state");
    ModelSpec copy = *this;
    copy.weights_ = std::move(weights);
    return copy;
  }

 private:
  std::vector<std::string> state_names_;
  std::vector<std::string> action_names_;
  Index terminal_;
  double gamma_;
  double beta_;
  std::shared_ptr<const CostModel> cost_;
  std::vector<double> weights_;
  std::vector<std::vector<Transition>> transitions_;
  std::vector<std::vector<Index>> allowed_;
  std::vector<std::size_t> pair_begin_;
  std::vector<Index> pair_action_;
};

/// Builds kernel entries from a dense [s][a][s'] array; zeros are dropped.
inline std::vector<KernelEntry> kernel_from_dense(std::size_t n_states, std::size_t n_actions,
                                                  std::span<const double> dense) {
  if (dense.size() != n_states * n_actions * n_states) {
    throw ModelError("dense kernel must have N*M*N entries");
  }
  std::vector<KernelEntry> out;
  for (Index s = 0; s < n_states; ++s)
    for (Index a = 0; a < n_actions; ++a)
      for (Index t = 0; t < n_states; ++t) {
        const double p = dense[(s * n_actions + a) * n_states + t];
        if (p != 0.0) out.push_back({s, a, t, p});
      }
  return out;
}

enum class ViolationKind {
  bad_discount,
  bad_temperature,
  probability_out_of_range,
  row_not_stochastic,
  empty_action_set,
  terminal_not_absorbing,
  terminal_not_cost_free,
  non_finite_cost,
  terminal_unreachable,
};

struct Violation {
  ViolationKind kind;
  Index state = 0;
  Index action = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
  }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.message;
    }
    return out.empty() ? "ok" : out;
  }
};

namespace detail {

inline void validate_structure(const ModelSpec& model, ValidationReport& report) {
  const std::size_t n = model.n_states();
  const Index term = model.terminal();
  auto add = [&](ViolationKind k, Index s, Index a, std::string msg) {
    report.violations.push_back({k, s, a, std::move(msg)});
  };

  if (!(model.gamma() > 0.0 && model.gamma() <= 1.0)) {
    add(ViolationKind::bad_discount, 0, 0, "discount must lie in (0, 1]");
  }
  if (!(model.beta() > 0.0) || !std::isfinite(model.beta())) {
    add(ViolationKind::bad_temperature, 0, 0, "inverse temperature must be positive and finite");
  }

  for (Index s = 0; s < n; ++s) {
    if (s != term && model.allowed(s).empty()) {
      add(ViolationKind::empty_action_set, s, 0,
          "state " + model.state_name(s) + " has no allowed action");
    }
    for (Index a : model.allowed(s)) {
      double total = 0.0;
      bool in_range = true;
      for (const auto& tr : model.transitions(s, a)) {
        if (!(tr.probability >= 0.0 && tr.probability <= 1.0)) in_range = false;
        total += tr.probability;
      }
      const std::string where = "(" + model.state_name(s) + ", " + model.action_name(a) + ")";
      if (!in_range) add(ViolationKind::probability_out_of_range, s, a, "probability outside [0,1] at " + where);
      if (std::abs(total - 1.0) > 1e-12) {
        add(ViolationKind::row_not_stochastic, s, a,
            "kernel row " + where + " sums to " + std::to_string(total));
      }
      if (s == term) {
        auto row = model.transitions(s, a);
        const bool absorbing = row.size() == 1 && row[0].next == term && row[0].probability == 1.0;
        if (!absorbing) add(ViolationKind::terminal_not_absorbing, s, a, "terminal state is not absorbing under " + where);
      }
    }
  }

  // Reverse breadth-first search from the terminal over positive-probability edges.
  std::vector<std::vector<Index>> predecessors(n);
  for (Index s = 0; s < n; ++s)
    for (Index a : model.allowed(s))
      for (const auto& tr : model.transitions(s, a))
        if (tr.probability > 0.0) predecessors[tr.next].push_back(s);
  std::vector<unsigned char> reached(n, 0);
  std::deque<Index> queue{term};
  reached[term] = 1;
  while (!queue.empty()) {
    const Index t = queue.front();
    queue.pop_front();
    for (Index s : predecessors[t]) {
      if (!reached[s]) {
        reached[s] = 1;
        queue.push_back(s);
      }
    }
  }
  for (Index s = 0; s < n; ++s) {
    if (!reached[s]) {
      add(ViolationKind::terminal_unreachable, s, 0,
          "terminal state unreachable from " + model.state_name(s));
    }
  }
}

}  // namespace detail

/// Structural validation: discount/temperature ranges, stochastic rows,
/// absorbing terminal, and reachability of the terminal from every state.
inline ValidationReport validate_model(const ModelSpec& model) {
  ValidationReport report;
  detail::validate_structure(model, report);
  return report;
}

/// Structural validation plus cost checks at the given parameters: finite
/// costs everywhere and a cost-free terminal.
inline ValidationReport validate_model(const ModelSpec& model, const ParameterVector& params) {
  ValidationReport report;
  detail::validate_structure(model, report);
  const Index term = model.terminal();
  for (Index s = 0; s < model.n_states(); ++s) {
    for (Index a : model.allowed(s)) {
      for (const auto& tr : model.transitions(s, a)) {
        const double c = model.cost().value(s, a, tr.next, params);
        if (!std::isfinite(c)) {
          report.violations.push_back({ViolationKind::non_finite_cost, s, a,
                                       "non-finite cost at state " + model.state_name(s)});
        } else if (s == term && c != 0.0) {
          report.violations.push_back({ViolationKind::terminal_not_cost_free, s, a,
                                       "terminal transition under " + model.action_name(a) + " has nonzero cost"});
        }
      }
    }
  }
  return report;
}

/// Velocity field kappa = [phi1; psi1] of the prescribed coordinates, in the
/// flat prescribed order of the parameter layout.
class PrescribedDynamics {
 public:
  using Field = std::function<void(const ParameterVector&, double t, std::span<double> velocity)>;

  PrescribedDynamics() = default;
  PrescribedDynamics(std::size_t dimension, Field field)
      : dimension_(dimension), field_(std::move(field)) {}

  static PrescribedDynamics zero(std::size_t dimension) {
    return PrescribedDynamics(dimension, [](const ParameterVector&, double, std::span<double>) {});
  }

  std::size_t dimension() const { return dimension_; }

  std::vector<double> operator()(const ParameterVector& params, double t) const {
    if (params.layout().n_prescribed() != dimension_) {
      throw LayoutError("prescribed dynamics dimension does not match the parameter layout");
    }
    std::vector<double> v(dimension_, 0.0);
    if (field_) field_(params, t, v);
    return v;
  }

  /// Same field, identically zero for t >= stop_time.
  PrescribedDynamics stopped_at(double stop_time) const {
    Field inner = field_;
    return PrescribedDynamics(dimension_, [inner, stop_time](const ParameterVector& p, double t, std::span<double> v) {
      if (t < stop_time && inner) inner(p, t, v);
    });
  }

 private:
  std::size_t dimension_ = 0;
  Field field_;
};

}  // namespace parasdm
