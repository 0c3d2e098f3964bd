#pragma once

// Multi-UAV relay network as a para-SDM.
//
// States: users 0..n-1, UAVs n..n+m-1, base station (terminal) last.
// Actions: one per UAV plus one for the base; taking action a moves the
// packet to the node a names with probability one. A node may not hop to
// itself, and the terminal is absorbing. Transition cost is the squared
// euclidean distance between the endpoint locations. User and base locations
// are prescribed; UAV locations are manipulable.

#include <parasdm/cost.hpp>
#include <parasdm/model.hpp>
#include <parasdm/parameters.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace parasdm {

using Point = std::vector<double>;

enum class MotionKind { none, constant_velocity, sinusoidal, waypoint, seeded_random_smooth };

inline MotionKind parse_motion_kind(const std::string& name) {
  if (name == "none" || name == "static") return MotionKind::none;
  if (name == "constant-velocity") return MotionKind::constant_velocity;
  if (name == "sinusoidal") return MotionKind::sinusoidal;
  if (name == "waypoint") return MotionKind::waypoint;
  if (name == "seeded-random-smooth") return MotionKind::seeded_random_smooth;
  throw ModelError("unknown motion kind '" + name + "'");
}

inline std::string motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::none: return "none";
    case MotionKind::constant_velocity: return "constant-velocity";
    case MotionKind::sinusoidal: return "sinusoidal";
    case MotionKind::waypoint: return "waypoint";
    case MotionKind::seeded_random_smooth: return "seeded-random-smooth";
  }
  return "none";
}

struct MotionSpec {
  MotionKind kind = MotionKind::none;
  /// constant-velocity: shared velocity of every moving node.
  Point velocity;
  /// sinusoidal: v_k(t) = amplitude * cos(frequency * t + phase_{node,k}), phases seeded.
  double amplitude = 0.0;
  double frequency = 1.0;
  /// seeded-random-smooth: speed scale and number of sinusoidal modes per coordinate.
  double speed = 1.0;
  std::size_t modes = 3;
  /// waypoint: per moving node, displacements visited at times segment_time, 2*segment_time, ...
  std::vector<std::vector<Point>> waypoints;
  double segment_time = 1.0;
  /// Velocity is zero from this time on.
  double stop_time = std::numeric_limits<double>::infinity();
  bool move_base = true;
};

/// Velocity field for `n_nodes` moving nodes in `dim` dimensions, laid out node-major.
/// Every kind is C^1 in t before stop_time.
inline PrescribedDynamics prescribed_motion(const MotionSpec& spec, std::size_t n_nodes, std::size_t dim,
                                            std::uint64_t seed, std::size_t layout_dim) {
  using Field = PrescribedDynamics::Field;
  const std::size_t width = n_nodes * dim;
  if (width > layout_dim) throw LayoutError("motion covers more coordinates than the prescribed layout");
  Field field;
  switch (spec.kind) {
    case MotionKind::none:
      break;
    case MotionKind::constant_velocity: {
      if (spec.velocity.size() != dim) throw ModelError("constant-velocity motion needs a velocity of the scene dimension");
      Point v = spec.velocity;
      field = [v, n_nodes, dim](const ParameterVector&, double, std::span<double> out) {
        for (std::size_t i = 0; i < n_nodes; ++i)
          for (std::size_t k = 0; k < dim; ++k) out[i * dim + k] = v[k];
      };
      break;
    }
    case MotionKind::sinusoidal: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      std::vector<double> phases(width);
      for (double& p : phases) p = phase(rng);
      const double amp = spec.amplitude;
      const double freq = spec.frequency;
      field = [phases, amp, freq](const ParameterVector&, double t, std::span<double> out) {
        for (std::size_t i = 0; i < phases.size(); ++i) out[i] = amp * std::cos(freq * t + phases[i]);
      };
      break;
    }
    case MotionKind::waypoint: {
      if (spec.waypoints.size() != n_nodes) throw ModelError("waypoint motion needs one waypoint list per moving node");
      if (!(spec.segment_time > 0.0)) throw ModelError("waypoint segment time must be positive");
      auto paths = spec.waypoints;
      for (const auto& path : paths)
        for (const auto& p : path)
          if (p.size() != dim) throw ModelError("waypoint dimension mismatch");
      const double seg = spec.segment_time;
      // Quintic smootherstep between consecutive displacements: velocity and
      // acceleration vanish at every waypoint, so the field is C^1.
      field = [paths, seg, dim](const ParameterVector&, double t, std::span<double> out) {
        for (std::size_t i = 0; i < paths.size(); ++i) {
          const auto& path = paths[i];
          if (path.empty() || t < 0.0) continue;
          const auto segment = static_cast<std::size_t>(t / seg);
          if (segment >= path.size()) continue;
          const double x = t / seg - static_cast<double>(segment);
          const double rate = 30.0 * x * x * (1.0 - x) * (1.0 - x) / seg;
          for (std::size_t k = 0; k < dim; ++k) {
            const double from = segment == 0 ? 0.0 : path[segment - 1][k];
            out[i * dim + k] = rate * (path[segment][k] - from);
          }
        }
      };
      break;
    }
    case MotionKind::seeded_random_smooth: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      std::uniform_real_distribution<double> omega(0.2, 1.0);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      const std::size_t modes = std::max<std::size_t>(spec.modes, 1);
      std::vector<double> a(width * modes), w(width * modes), ph(width * modes);
      for (std::size_t i = 0; i < width * modes; ++i) {
        a[i] = coef(rng);
        w[i] = omega(rng);
        ph[i] = phase(rng);
      }
      const double scale = spec.speed / std::sqrt(static_cast<double>(modes));
      field = [a, w, ph, modes, scale, width](const ParameterVector&, double t, std::span<double> out) {
        for (std::size_t i = 0; i < width; ++i) {
          double v = 0.0;
          for (std::size_t k = 0; k < modes; ++k) v += a[i * modes + k] * std::sin(w[i * modes + k] * t + ph[i * modes + k]);
          out[i] = scale * v;
        }
      };
      break;
    }
  }
  PrescribedDynamics dyn(layout_dim, std::move(field));
  if (std::isfinite(spec.stop_time)) dyn = dyn.stopped_at(spec.stop_time);
  return dyn;
}

enum class ScenarioObjective { all_states, users };

struct UavScenario {
  std::vector<Point> users;
  std::vector<Point> uavs;
  Point base;
  MotionSpec motion;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  double beta = 10.0;
  /// all_states sums V* over every state; users sums it over user states only.
  ScenarioObjective objective = ScenarioObjective::all_states;
};

struct ScenarioModel {
  ModelSpec model;
  ParameterVector params;
  PrescribedDynamics dynamics;
  std::vector<Index> users;  // source states
  std::vector<Index> uavs;
  Index base = 0;
  double diameter = 0.0;
};

/// Bounding-box diagonal of every node location.
inline double scene_diameter(const UavScenario& sc) {
  const std::size_t dim = sc.base.size();
  std::vector<double> lo(sc.base), hi(sc.base);
  auto grow = [&](const Point& p) {
    for (std::size_t k = 0; k < dim; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  };
  for (const auto& p : sc.users) grow(p);
  for (const auto& p : sc.uavs) grow(p);
  double d2 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) d2 += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(d2);
}

inline ScenarioModel build_model(const UavScenario& sc) {
  const std::size_t n = sc.users.size();
  const std::size_t m = sc.uavs.size();
  if (m < 1) throw ModelError("scenario needs at least one UAV");
  const std::size_t dim = sc.base.size();
  if (dim == 0) throw ModelError("scenario base location is empty");
  for (const auto& p : sc.users)
    if (p.size() != dim) throw ModelError("user location dimension mismatch");
  for (const auto& p : sc.uavs)
    if (p.size() != dim) throw ModelError("UAV location dimension mismatch");

  const std::size_t n_states = n + m + 1;
  const std::size_t n_actions = m + 1;
  const Index base = n + m;
  auto target = [&](Index a) -> Index { return a < m ? n + a : base; };

  ModelSpec::Options opt;
  for (std::size_t i = 0; i < n; ++i) opt.state_names.push_back("user" + std::to_string(i));
  for (std::size_t j = 0; j < m; ++j) opt.state_names.push_back("uav" + std::to_string(j));
  opt.state_names.push_back("base");
  for (std::size_t j = 0; j < m; ++j) opt.action_names.push_back("uav" + std::to_string(j));
  opt.action_names.push_back("base");
  opt.terminal = base;

  opt.allowed.resize(n_states);
  for (Index s = 0; s < n_states; ++s) {
    for (Index a = 0; a < n_actions; ++a) {
      if (target(a) == s) continue;
      opt.allowed[s].push_back(a);
      opt.kernel.push_back({s, a, s == base ? base : target(a), 1.0});
    }
  }
  opt.gamma = sc.gamma;
  opt.beta = sc.beta;
  opt.cost = std::make_shared<QuadraticCost>(n_states, n_actions, std::vector<double>{}, 1.0);
  if (sc.objective == ScenarioObjective::users) {
    opt.objective_weights.assign(n_states, 0.0);
    for (std::size_t i = 0; i < n; ++i) opt.objective_weights[i] = 1.0;
  }

  std::vector<Index> uav_states;
  for (std::size_t j = 0; j < m; ++j) uav_states.push_back(n + j);
  auto layout = std::make_shared<const ParameterLayout>(n_states, n_actions, dim, 0, uav_states, std::vector<Index>{});
  ParameterVector params(layout);
  for (std::size_t i = 0; i < n; ++i) std::copy(sc.users[i].begin(), sc.users[i].end(), params.zeta(i).begin());
  for (std::size_t j = 0; j < m; ++j) std::copy(sc.uavs[j].begin(), sc.uavs[j].end(), params.zeta(n + j).begin());
  std::copy(sc.base.begin(), sc.base.end(), params.zeta(base).begin());

  // Prescribed layout is users then base, node-major: exactly the order motion fields use.
  const std::size_t moving = sc.motion.move_base ? n + 1 : n;
  auto dynamics = prescribed_motion(sc.motion, moving, dim, sc.seed, layout->n_prescribed());

  ScenarioModel out{ModelSpec(std::move(opt)), std::move(params), std::move(dynamics), {}, uav_states, base,
                    scene_diameter(sc)};
  for (std::size_t i = 0; i < n; ++i) out.users.push_back(i);
  const auto report = validate_model(out.model, out.params);
  if (!report.ok()) throw ModelError("scenario model failed validation: " + report.summary());
  return out;
}

/// Uniform random points in an axis-aligned box, for config-generated scenes.
inline std::vector<Point> random_points(std::size_t count, const std::vector<std::pair<double, double>>& box,
                                        std::mt19937_64& rng) {
  std::vector<Point> out(count, Point(box.size()));
  for (auto& p : out)
    for (std::size_t k = 0; k < box.size(); ++k) {
      std::uniform_real_distribution<double> u(box[k].first, box[k].second);
      p[k] = u(rng);
    }
  return out;
}

}  // namespace parasdm
