#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "whoeffding/errors.hpp"
#include "whoeffding/functional.hpp"
#include "whoeffding/models.hpp"
#include "whoeffding/numerics.hpp"
#include "whoeffding/rng.hpp"
#include "whoeffding/space.hpp"

namespace whoeffding {

/// Sampled path. On continuous-time subordinated models the state is
/// piecewise constant: states[i] holds on [times[i], times[i+1]).
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  Space space = Space::interval(0.0, 1.0);
  std::string model_id;
  std::uint64_t seed = 0;
  TimeDomain domain = TimeDomain::Discrete;
  double horizon = 0.0;

  // Set for the unsubordinated flow: the path is x0 -> flow_state(x0, s, alpha).
  struct FlowPath {
    double x0;
    double alpha;
  };
  std::optional<FlowPath> flow;

  State state(std::size_t i) const { return State{states[i], space}; }

  /// CSV with header "time,state", reals at 17 significant digits.
  void write_csv(std::ostream& os) const {
    os << "time,state\n";
    for (std::size_t i = 0; i < times.size(); ++i) os << format_real(times[i]) << ',' << format_real(states[i]) << '\n';
  }
};

namespace detail {

inline bool is_whole(double t) { return t == std::floor(t); }

// Integer grid 0, 1, ..., floor(h), plus h itself when it is fractional.
inline std::vector<double> unit_grid(double horizon) {
  std::vector<double> g;
  for (double s = 0.0; s <= horizon; s += 1.0) g.push_back(s);
  if (!is_whole(horizon)) g.push_back(horizon);
  return g;
}

}  // namespace detail

inline Trajectory simulate_path(const ModelSpec& model, const State& x0, double horizon, std::uint64_t seed) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ArgumentError("horizon must be finite and >= 0");
  const Space space = model.space();
  if (!(x0.space == space)) throw DomainError("initial state lives on " + x0.space.describe() + ", model on " + space.describe());
  const double x = model.require_state(x0.value);
  if (model.time_domain() == TimeDomain::Discrete && !detail::is_whole(horizon)) {
    throw ArgumentError("discrete-time horizon must be an integer");
  }

  Trajectory tr;
  tr.space = space;
  tr.model_id = model.name();
  tr.seed = seed;
  tr.domain = model.time_domain();
  tr.horizon = horizon;
  Rng rng(seed);
  const ModelSpec& root = model.root();
  const bool flow_base = root.kind() == ModelSpec::Kind::Flow;

  if (!model.subordinated()) {
    if (flow_base) {
      tr.flow = Trajectory::FlowPath{x, model.alpha()};
      tr.times = detail::unit_grid(horizon);
      for (double s : tr.times) tr.states.push_back(flow_state(x, s, model.alpha()));
      return tr;
    }
    const auto n = static_cast<std::int64_t>(horizon);
    tr.times.reserve(n + 1);
    tr.states.reserve(n + 1);
    double cur = x;
    for (std::int64_t s = 0; s <= n; ++s) {
      if (s > 0) cur = step(model, cur, rng);
      tr.times.push_back(static_cast<double>(s));
      tr.states.push_back(cur);
    }
    return tr;
  }

  const auto& sub = model.subordinator();
  double clock = 0.0;  // S_t so far
  double cur = x;
  auto run_base = [&](double increment) {
    clock += increment;
    cur = flow_base ? flow_state(x, clock, root.alpha()) : advance(root, cur, increment, rng);
  };

  switch (sub.kind()) {
    case SubordinatorSpec::Kind::DiscreteIID: {
      const auto n = static_cast<std::int64_t>(horizon);
      for (std::int64_t s = 0; s <= n; ++s) {
        if (s > 0) run_base(static_cast<double>(sub.draw_step(rng)));
        tr.times.push_back(static_cast<double>(s));
        tr.states.push_back(cur);
      }
      return tr;
    }
    case SubordinatorSpec::Kind::PoissonProcess: {
      // jump times of the clock merged with the integer grid
      double next_jump = rng.exponential(sub.lambda());
      double next_grid = 0.0;
      while (true) {
        const bool grid_first = next_grid <= next_jump;
        const double at = grid_first ? next_grid : next_jump;
        if (at > horizon) break;
        if (!grid_first) {
          run_base(1.0);
          next_jump += rng.exponential(sub.lambda());
        }
        if (tr.times.empty() || at > tr.times.back()) {
          tr.times.push_back(at);
          tr.states.push_back(cur);
        } else {
          tr.states.back() = cur;  // a jump exactly on a grid point
        }
        if (grid_first) next_grid += 1.0;
      }
      if (tr.times.back() < horizon) {
        tr.times.push_back(horizon);
        tr.states.push_back(cur);
      }
      return tr;
    }
    case SubordinatorSpec::Kind::BernsteinDescribed:
      throw UnsupportedError("Bernstein-described subordinators cannot be simulated");
  }
  return tr;
}

namespace detail {

// Integral of f(flow_state(x0, s)) over [0, t].
inline double flow_path_integral(const Trajectory::FlowPath& fp, const Functional& f, double t) {
  if (f.affine) {
    const double x = fp.x0;
    double path;  // integral of flow_state(x, s) ds over [0, t]
    if (fp.alpha == 1.0) {
      path = -x * std::expm1(-t);
    } else if (x == 0.0) {
      path = 0.0;
    } else {
      const double a = fp.alpha - 1.0;
      const double k = a * std::pow(std::fabs(x), a);
      const double e = 1.0 - 1.0 / a;  // < 0
      path = x * (std::pow(k * t + 1.0, e) - 1.0) / (k * e);
    }
    return f.affine->slope * path + f.affine->intercept * t;
  }
  return integrate([&](double s) { return f(flow_state(fp.x0, s, fp.alpha)); }, 0.0, t, 1e-12);
}

}  // namespace detail

/// S_{t-1}: the sum of f(X_s) over s = 0..t-1 (discrete) or the integral of
/// f(X_s) over [0, t) (continuous).
inline double time_average_statistic(const Trajectory& traj, const Functional& f, double t, TimeDomain domain) {
  if (domain != traj.domain) throw ArgumentError("time domain does not match the trajectory");
  if (!(t >= 0.0)) throw ArgumentError("t must be >= 0");
  if (domain == TimeDomain::Discrete) {
    if (!detail::is_whole(t)) throw ArgumentError("discrete statistic needs integer t");
    const auto n = static_cast<std::size_t>(t);
    if (traj.states.size() < n) throw ArgumentError("trajectory is shorter than t");
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f(traj.states[i]);
    return s;
  }
  if (traj.times.empty() || traj.horizon < t) throw ArgumentError("trajectory does not cover [0, t)");
  if (traj.flow) return detail::flow_path_integral(*traj.flow, f, t);
  double s = 0.0;
  for (std::size_t i = 0; i < traj.times.size() && traj.times[i] < t; ++i) {
    const double end = i + 1 < traj.times.size() ? std::fmin(traj.times[i + 1], t) : t;
    s += f(traj.states[i]) * (end - traj.times[i]);
  }
  return s;
}

}  // namespace whoeffding
