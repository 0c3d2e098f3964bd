#pragma once

// Independent reference computations for the tests: high-precision
// log-sum-exp and softmax, small hand-built models, and a brute-force
// fixed point evaluated in extended precision.

#include <parasdm/parasdm.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace oracle {

using Real = boost::multiprecision::cpp_bin_float_50;

/// -(1/r) log sum exp(-r x), evaluated in 50 digits without any shifting.
inline double soft_min(const std::vector<double>& x, double r) {
  Real acc = 0;
  for (double v : x) acc += boost::multiprecision::exp(-Real(r) * Real(v));
  return static_cast<double>(-boost::multiprecision::log(acc) / Real(r));
}

inline std::vector<double> softmax_neg(const std::vector<double>& x, double r) {
  Real total = 0;
  std::vector<Real> e;
  for (double v : x) {
    e.push_back(boost::multiprecision::exp(-Real(r) * Real(v)));
    total += e.back();
  }
  std::vector<double> out;
  for (const auto& v : e) out.push_back(static_cast<double>(v / total));
  return out;
}

/// Value iteration of the soft Bellman operator in 50 digits, straight from
/// the definition: L(s,a) = sum p (c + (g/b) log p) + g sum p V(s'),
/// V(s) = -(g/b) log sum exp(-(b/g) L(s,a)), with V(terminal) = 0.
inline std::vector<double> soft_values(const parasdm::ModelSpec& m, const parasdm::ParameterVector& p,
                                       int iterations) {
  const auto n = m.n_states();
  const Real g = m.gamma(), b = m.beta();
  std::vector<Real> v(n, Real(0));
  for (int it = 0; it < iterations; ++it) {
    std::vector<Real> next(n, Real(0));
    for (parasdm::Index s = 0; s < n; ++s) {
      if (s == m.terminal()) continue;
      Real acc = 0;
      for (parasdm::Index a : m.allowed(s)) {
        Real l = 0;
        for (const auto& tr : m.transitions(s, a)) {
          const Real pr = tr.probability;
          l += pr * (Real(m.cost().value(s, a, tr.next, p)) + g / b * boost::multiprecision::log(pr)) + g * pr * v[tr.next];
        }
        acc += boost::multiprecision::exp(-b / g * l);
      }
      next[s] = -g / b * boost::multiprecision::log(acc);
    }
    v = std::move(next);
  }
  std::vector<double> out;
  for (const auto& x : v) out.push_back(static_cast<double>(x));
  return out;
}

inline std::shared_ptr<const parasdm::ParameterLayout> empty_layout(std::size_t n, std::size_t m) {
  return std::make_shared<const parasdm::ParameterLayout>(n, m, 0, 0, std::vector<parasdm::Index>{},
                                                          std::vector<parasdm::Index>{});
}

/// Deterministic model given by a successor table next[s][a] and a cost
/// table cost[s][a]; missing actions are masked. The last state is terminal.
inline parasdm::ModelSpec table_model(const std::vector<std::vector<int>>& next,
                                      const std::vector<std::vector<double>>& cost, double gamma, double beta) {
  const std::size_t n = next.size();
  std::size_t m = 0;
  for (const auto& row : next) m = std::max(m, row.size());
  parasdm::ModelSpec::Options o;
  for (std::size_t s = 0; s < n; ++s) o.state_names.push_back("s" + std::to_string(s));
  for (std::size_t a = 0; a < m; ++a) o.action_names.push_back("a" + std::to_string(a));
  o.terminal = n - 1;
  o.allowed.resize(n);
  std::vector<double> base(n * m * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      if (s == n - 1) {
        o.allowed[s].push_back(a);
        o.kernel.push_back({s, a, s, 1.0});
        continue;
      }
      if (a >= next[s].size() || next[s][a] < 0) continue;
      o.allowed[s].push_back(a);
      const auto t = static_cast<std::size_t>(next[s][a]);
      o.kernel.push_back({s, a, t, 1.0});
      base[(s * m + a) * n + t] = cost[s][a];
    }
  }
  o.gamma = gamma;
  o.beta = beta;
  o.cost = std::make_shared<parasdm::QuadraticCost>(n, m, base, 0.0);
  return parasdm::ModelSpec(std::move(o));
}

/// Coarse-to-fine grid search for the minimizer of f over a square in the
/// plane. Each level evaluates a 21 x 21 grid and shrinks around the best cell.
template <class F>
std::array<double, 2> grid_argmin(F f, std::array<double, 2> center, double half_width, int levels = 12) {
  for (int level = 0; level < levels; ++level) {
    std::array<double, 2> best = center;
    double fbest = f(center);
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const std::array<double, 2> p{center[0] + half_width * i / 10.0, center[1] + half_width * j / 10.0};
        const double v = f(p);
        if (v < fbest) {
          fbest = v;
          best = p;
        }
      }
    }
    center = best;
    half_width *= 0.2;
  }
  return center;
}

}  // namespace oracle
