#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "whoeffding/errors.hpp"
#include "whoeffding/functional.hpp"
#include "whoeffding/models.hpp"
#include "whoeffding/numerics.hpp"
#include "whoeffding/subordinator.hpp"

namespace whoeffding {

// ---------------------------------------------------------------------------
// Hoeffding bound

/// Published: exponent (eps t - 2 L gamma)^2 / (8 (L gamma + |f|) T).
/// ScaleConsistent: the same with (L gamma + |f|)^2, which is what Hoeffding's
/// lemma gives for increments of range 2(L gamma + |f|) and is invariant under
/// f -> c f, eps -> c eps.
enum class BoundVariant { Published, ScaleConsistent };

inline const char* to_string(BoundVariant v) noexcept {
  return v == BoundVariant::Published ? "published" : "scale-consistent";
}

struct BoundInput {
  double lip = 0.0;
  double sup_f = 0.0;
  double gamma = 0.0;
  double eps = 0.0;
  double t = 0.0;
  TimeDomain domain = TimeDomain::Discrete;
  BoundVariant variant = BoundVariant::Published;
};

enum class Regime { Informative, Vacuous, Degenerate };

inline const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Informative: return "informative";
    case Regime::Vacuous: return "vacuous";
    case Regime::Degenerate: return "degenerate";
  }
  return "?";
}

struct BoundReport {
  double bound = 1.0;
  double theta_star = 0.0;
  Regime regime = Regime::Vacuous;
};

namespace detail {

inline void validate(const BoundInput& in) {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(in.lip) || !finite_nonneg(in.sup_f) || !finite_nonneg(in.gamma)) {
    throw ArgumentError("lip, sup_f and gamma must be finite and >= 0");
  }
  if (!(in.eps > 0.0) || !std::isfinite(in.eps)) throw ArgumentError("eps must be finite and > 0");
  if (!(in.t > 0.0) || !std::isfinite(in.t)) throw ArgumentError("t must be finite and > 0");
}

inline double horizon_factor(const BoundInput& in) {
  return in.domain == TimeDomain::Discrete ? in.t : in.t + 1.0;
}

inline double spread(const BoundInput& in) {
  const double k = in.lip * in.gamma + in.sup_f;
  return in.variant == BoundVariant::Published ? k : k * k;
}

}  // namespace detail

/// The exponent minimized over theta inside the proof:
///   -theta eps t + 2 theta L gamma + 2 theta^2 K T,   K = spread.
inline double bound_exponent(const BoundInput& in, double theta) {
  detail::validate(in);
  const double T = detail::horizon_factor(in);
  return -theta * in.eps * in.t + 2.0 * theta * in.lip * in.gamma + 2.0 * theta * theta * detail::spread(in) * T;
}

inline BoundReport hoeffding_bound(const BoundInput& in) {
  detail::validate(in);
  BoundReport r;
  const double margin = in.eps * in.t - 2.0 * in.lip * in.gamma;
  const double K = detail::spread(in);
  if (K == 0.0) {
    // f == 0: the deviation is identically zero
    r.bound = 0.0;
    r.regime = Regime::Degenerate;
    return r;
  }
  if (margin <= 0.0) return r;
  const double T = detail::horizon_factor(in);
  r.regime = Regime::Informative;
  r.theta_star = margin / (4.0 * K * T);
  r.bound = std::fmin(1.0, 2.0 * std::exp(-margin * margin / (8.0 * K * T)));
  return r;
}

// ---------------------------------------------------------------------------
// gamma

struct GammaReport {
  double value = std::numeric_limits<double>::infinity();
  SeriesStatus status = SeriesStatus::Inconclusive;
  double argmax = 0.0;
  double horizon = 0.0;
  std::vector<double> series;  // W(P^t(argmax, .), pi) at t = 0, 1, ..., horizon
  double head = 0.0;           // sum or integral over [0, horizon] at argmax
  double tail = 0.0;           // bound on the rest at argmax
  double grid_correction = 0.0;
  std::optional<SeriesResult> rate_series;  // subordinated models
  std::string provenance;
  std::string witness;  // set when gamma is infinite

  bool finite() const noexcept { return status == SeriesStatus::Converged && std::isfinite(value); }
};

namespace detail {

// Largest distance from a point of `space` to the nearest grid point (intervals).
inline double grid_half_gap(std::vector<double> grid, const Space& space) {
  std::sort(grid.begin(), grid.end());
  double h = std::max(grid.front() - space.lo(), space.hi() - grid.back());
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) h = std::max(h, 0.5 * (grid[i + 1] - grid[i]));
  return h;
}

// Lower bound on gamma for the torus walk (plain or subordinated) from the
// 1-Lipschitz test functions cos(m(theta - x)) / m:
//   W_t >= |E cos(m)^{S_t}| / m.
inline std::pair<double, int> torus_fourier_lower_bound(const ModelSpec& model) {
  // numerators of continued-fraction convergents of pi and their doubles
  static constexpr int kCandidates[] = {3, 6, 22, 44, 333, 355, 666, 710, 103993, 104348, 207986, 208696};
  double best = 0.0;
  int best_m = 0;
  for (int m : kCandidates) {
    const double c = std::cos(static_cast<double>(m));
    double mass = 0.0;  // integral over tau of |E c^{S_t}|
    if (!model.subordinated()) {
      mass = 1.0 / (1.0 - std::fabs(c));
    } else {
      const auto& sub = model.subordinator();
      switch (sub.kind()) {
        case SubordinatorSpec::Kind::DiscreteIID: {
          double phi = 0.0;
          for (const auto& a : sub.steps()) phi += a.prob * std::pow(c, static_cast<double>(a.size));
          mass = 1.0 / (1.0 - std::fabs(phi));
          break;
        }
        case SubordinatorSpec::Kind::PoissonProcess: mass = 1.0 / (sub.lambda() * (1.0 - c)); break;
        case SubordinatorSpec::Kind::BernsteinDescribed:
          mass = c > 0.0 ? 1.0 / sub.psi().value()(-std::log(c)) : 0.0;
          break;
      }
    }
    const double lb = mass / m;
    if (lb > best) {
      best = lb;
      best_m = m;
    }
  }
  return {best, best_m};
}

inline GammaReport torus_gamma(const ModelSpec& model, double x, double horizon) {
  GammaReport rep;
  rep.status = SeriesStatus::Divergent;
  rep.argmax = x;
  rep.horizon = horizon;
  if (!model.subordinated()) {
    const int h = static_cast<int>(std::min<double>(horizon, kTorusLawCap));
    rep.horizon = h;
    for (int t = 0; t <= h; ++t) {
      rep.series.push_back(exact_w_to_invariant(model, x, t));
      rep.head += rep.series.back();
    }
  }
  const auto [lb, m] = torus_fourier_lower_bound(model);
  std::ostringstream os;
  os.precision(6);
  os << "cos(m(theta-x))/m is 1-Lipschitz, so W_t >= |E cos(m)^{S_t}|/m; at m=" << m << " this gives gamma >= " << lb
     << "; m(1-|cos m|) -> 0 along convergents of pi, so gamma is infinite";
  rep.witness = os.str();
  rep.provenance = "analytic divergence: the torus walk is a mixture of rotations and has no Wasserstein contraction";
  return rep;
}

}  // namespace detail

/// Upper bound on gamma = sup_x of the tau-integral of W(P^t(x,.), pi).
/// `x_grid` is probed with exact laws up to `horizon`; `analytic_tail`, when
/// given, replaces the model's own bound on the integral past the horizon.
inline GammaReport gamma_bound(const ModelSpec& model, std::vector<double> x_grid, double horizon,
                               std::optional<double> analytic_tail = std::nullopt) {
  if (x_grid.empty()) throw ArgumentError("gamma_bound needs a non-empty grid");
  if (!(horizon >= 0.0)) throw ArgumentError("gamma_bound horizon must be >= 0");
  for (double& x : x_grid) x = model.require_state(x);
  const ModelSpec& root = model.root();
  GammaReport rep;
  rep.horizon = horizon;

  if (model.subordinated()) {
    const auto& sub = model.subordinator();
    if (root.kind() == ModelSpec::Kind::TorusWalk) return detail::torus_gamma(model, x_grid.front(), horizon);
    std::optional<RateFunction> rate;
    double scale = 1.0;
    if (root.kind() == ModelSpec::Kind::Flow) {
      rate = root.alpha() == 1.0 ? RateFunction::exp_decay(1.0) : RateFunction::poly_decay(root.alpha());
      rep.argmax = 1.0;
      rep.provenance =
          "W(P_S^t(x,.), delta_0) = E|flow_state(x, S_t)|, maximal at |x| = 1 where it equals E r(S_t); "
          "gamma = integrated_rate(" + rate->name() + ")";
    } else {
      rate = RateFunction::exp_decay(std::numbers::ln2);
      scale = 0.5;
      rep.argmax = 0.0;
      rep.provenance =
          "mixture convexity: W(P_S^t(x,.), Leb) <= E W_{S_t}(x) = E 2^{-S_t} W_0(x), sup_x W_0(x) = 1/2; "
          "gamma <= integrated_rate(exp_decay(ln 2)) / 2";
    }
    auto series = integrated_rate(sub, *rate, model.time_domain());
    rep.status = series.status;
    rep.value = series.converged() ? scale * series.value : std::numeric_limits<double>::infinity();
    rep.head = scale * series.partial;
    rep.tail = scale * series.tail_estimate;
    rep.rate_series = std::move(series);
    if (sub.kind() != SubordinatorSpec::Kind::BernsteinDescribed || root.alpha() == 1.0) {
      for (int t = 0; t <= static_cast<int>(horizon); ++t) {
        rep.series.push_back(scale * expected_rate(sub, *rate, t));
      }
    }
    return rep;
  }

  switch (model.kind()) {
    case ModelSpec::Kind::Flow: {
      // W_t(x) = |flow_state(x, t)| grows with |x|, so the endpoints are always probed
      x_grid.push_back(-1.0);
      x_grid.push_back(1.0);
      const double alpha = model.alpha();
      double best = -1.0;
      for (double x : x_grid) {
        const double head = integrate([&](double s) { return std::fabs(flow_state(x, s, alpha)); }, 0.0, horizon, 1e-14);
        double tail;
        if (analytic_tail) {
          tail = *analytic_tail;
        } else if (alpha == 1.0) {
          tail = std::fabs(x) * std::exp(-horizon);
        } else if (x == 0.0) {
          tail = 0.0;
        } else {
          const double a = alpha - 1.0;
          const double k = a * std::pow(std::fabs(x), a);
          tail = std::fabs(x) * std::pow(k * horizon + 1.0, 1.0 - 1.0 / a) / (k * (1.0 / a - 1.0));
        }
        if (head + tail > best) {
          best = head + tail;
          rep.argmax = x;
          rep.head = head;
          rep.tail = tail;
        }
      }
      rep.value = best;
      rep.status = SeriesStatus::Converged;
      for (int t = 0; t <= static_cast<int>(horizon); ++t) rep.series.push_back(std::fabs(flow_state(rep.argmax, t, alpha)));
      rep.provenance =
          "W_t(x) = |flow_state(x,t)|, monotone in |x| (sup at |x| = 1); quadrature on [0, horizon] plus closed-form tail";
      return rep;
    }
    case ModelSpec::Kind::Ar1Binary: {
      const int h = static_cast<int>(horizon);
      if (h != horizon || h > kAr1LawCap) throw ArgumentError("ar1 gamma horizon must be an integer <= 24");
      double best = -1.0;
      for (double x : x_grid) {
        std::vector<double> w;
        double head = 0.0;
        for (int t = 0; t <= h; ++t) {
          w.push_back(exact_w_to_invariant(model, x, t));
          head += w.back();
        }
        // contraction: W_{h+k}(x) <= 2^{-k} W_h(x), so the tail is at most W_h(x)
        const double tail = analytic_tail ? *analytic_tail : w.back();
        if (head + tail > best) {
          best = head + tail;
          rep.argmax = x;
          rep.head = head;
          rep.tail = tail;
          rep.series = std::move(w);
        }
      }
      // |gamma(x) - gamma(y)| <= sum_t W(P^t x, P^t y) = sum_t 2^{-t} |x - y| = 2 |x - y|
      rep.grid_correction = 2.0 * detail::grid_half_gap(x_grid, model.space());
      rep.value = best + rep.grid_correction;
      rep.status = SeriesStatus::Converged;
      rep.provenance =
          "exact W_t from t-step laws on the grid, contraction tail W_h(x), plus 2 * (largest grid half-gap) since "
          "gamma(x) is 2-Lipschitz";
      return rep;
    }
    case ModelSpec::Kind::TorusWalk: return detail::torus_gamma(model, x_grid.front(), horizon);
    case ModelSpec::Kind::Subordinated: break;
  }
  return rep;
}

/// gamma with the default probe grid and horizon of each model.
inline GammaReport gamma_bound(const ModelSpec& model) {
  switch (model.root().kind()) {
    case ModelSpec::Kind::Flow: return gamma_bound(model, {-1.0, -0.5, 0.0, 0.5, 1.0}, 60.0);
    case ModelSpec::Kind::Ar1Binary: {
      if (model.subordinated()) return gamma_bound(model, {0.0}, 12.0);
      std::vector<double> grid;
      for (int i = 0; i <= 64; ++i) grid.push_back(i / 64.0);
      return gamma_bound(model, grid, 12.0);
    }
    default: return gamma_bound(model, {0.0}, 30.0);
  }
}

/// sup_x |f_hat(x)| when the Poisson equation has a closed-form solution for
/// a functional whose gamma may be infinite (cosine on the torus: cos is an
/// eigenfunction, E cos(X_t) = cos(1)^t cos x).
inline std::optional<double> exact_fhat_sup(const ModelSpec& model, const Functional& f) {
  if (model.root().kind() != ModelSpec::Kind::TorusWalk || !f.cosine_amplitude) return std::nullopt;
  const double a = std::fabs(*f.cosine_amplitude);
  const double c1 = std::cos(1.0);
  if (!model.subordinated()) return a / (1.0 - c1);
  const auto s = integrated_rate(model.subordinator(), RateFunction::exp_decay(-std::log(c1)), model.time_domain());
  if (!s.converged()) return std::nullopt;
  return a * s.value;
}

// ---------------------------------------------------------------------------
// Poisson equation

namespace detail {

// Upper bound on W(P^u(x, .), pi).
inline double w_upper(const ModelSpec& model, double x, double u) {
  const ModelSpec& root = model.root();
  switch (root.kind()) {
    case ModelSpec::Kind::Flow: return exact_w_to_invariant(model, x, u);
    case ModelSpec::Kind::Ar1Binary: {
      const double w0 = exact_w_to_invariant(root, x, 0.0);
      if (!model.subordinated()) return std::ldexp(w0, -static_cast<int>(u));
      return w0 * expected_rate(model.subordinator(), RateFunction::exp_decay(std::numbers::ln2), u);
    }
    default: {
      // W_s is non-increasing along the torus walk; beyond the law cap use W at the cap
      auto w_torus = [&](double s) { return exact_w_to_invariant(root, x, std::min<double>(s, kTorusLawCap)); };
      if (!model.subordinated()) return w_torus(u);
      const auto clock = subordinator_law(model.subordinator(), u);
      double acc = clock.dropped_mass * std::numbers::pi / 2.0;
      for (std::size_t i = 0; i < clock.p.size(); ++i) {
        if (clock.p[i] > 0.0) acc += clock.p[i] * w_torus(static_cast<double>(clock.first + static_cast<std::int64_t>(i)));
      }
      return acc;
    }
  }
}

// Bound on the tau-integral of |E_x f(X_u) - pi(f)| over [from, from + length).
inline double deviation_bound(const ModelSpec& model, const Functional& f, double x, double from, double length) {
  if (length <= 0.0 || f.lip == 0.0) return 0.0;
  const bool discrete = model.time_domain() == TimeDomain::Discrete;
  std::function<double(double)> g;
  if (model.root().kind() == ModelSpec::Kind::TorusWalk && f.cosine_amplitude) {
    // exact: |E_x f(X_u)| = |a cos x| E cos(1)^{S_u}
    const double a = std::fabs(*f.cosine_amplitude * std::cos(x));
    const double k = -std::log(std::cos(1.0));
    if (!model.subordinated()) {
      g = [a, k](double u) { return a * std::exp(-k * u); };
    } else {
      const auto sub = model.subordinator();
      g = [a, k, sub](double u) { return a * expected_rate(sub, RateFunction::exp_decay(k), u); };
    }
  } else {
    const double lip = f.lip;
    g = [lip, &model, x](double u) { return lip * w_upper(model, x, u); };
  }
  if (std::isinf(length)) {
    if (model.root().kind() == ModelSpec::Kind::TorusWalk && !f.cosine_amplitude) {
      return std::numeric_limits<double>::infinity();
    }
    SeriesOptions opt;
    opt.abs_tol = 1e-14;
    const auto s = discrete ? sum_to_infinity(g, static_cast<std::int64_t>(from), opt) : integrate_to_infinity(g, from, opt);
    return s.converged() ? s.value + s.error_estimate : std::numeric_limits<double>::infinity();
  }
  if (discrete) {
    double acc = 0.0;
    for (double u = from; u < from + length; u += 1.0) acc += g(u);
    return acc;
  }
  return integrate(g, from, from + length, 1e-12);
}

}  // namespace detail

struct PoissonSolution {
  double value = 0.0;       // truncated f_hat(x)
  double tail_bound = 0.0;  // bound on |f_hat(x) - value|
  double truncation = 0.0;  // horizon actually used
  double pi_f = 0.0;
};

/// f_hat(x) = tau-integral of E_x[f(X_t)] - pi(f), truncated at `trunc`. When
/// exact expectations stop earlier (enumeration caps) the truncation is
/// shortened and the tail bound widened accordingly.
inline PoissonSolution poisson_solution(const ModelSpec& model, const Functional& f, double x, double trunc) {
  if (!(trunc >= 0.0)) throw ArgumentError("truncation must be >= 0");
  x = model.require_state(x);
  PoissonSolution sol;
  sol.pi_f = invariant_mean(model, f);
  if (model.time_domain() == TimeDomain::Discrete) {
    const auto n = static_cast<std::int64_t>(std::floor(trunc));
    std::int64_t used = 0;
    for (; used < n; ++used) {
      const auto e = exact_expectation(model, f, x, static_cast<double>(used));
      if (!e) break;
      sol.value += *e - sol.pi_f;
    }
    sol.truncation = static_cast<double>(used);
  } else {
    auto g = [&](double u) {
      const auto e = exact_expectation(model, f, x, u);
      if (!e) throw UnsupportedError("no exact expectation for this continuous-time model and functional");
      return *e - sol.pi_f;
    };
    sol.value = integrate(g, 0.0, trunc, 1e-13);
    sol.truncation = trunc;
  }
  sol.tail_bound = detail::deviation_bound(model, f, x, sol.truncation, std::numeric_limits<double>::infinity());
  return sol;
}

struct ResidualCheck {
  double residual = 0.0;
  double tolerance = 0.0;  // truncation window bound + 1e-9
  bool ok() const noexcept { return residual <= tolerance; }
};

/// |E_x[f_hat(X_t)] - f_hat(x) + tau-integral over [0, t) of E_x[f(X_s) - pi(f)]|
/// with f_hat truncated at `trunc`. For the truncated solution this equals the
/// window sum over [trunc, trunc + t), which sets the tolerance.
inline ResidualCheck poisson_residual(const ModelSpec& model, const Functional& f, double x, double t,
                                      double trunc = 60.0) {
  x = model.require_state(x);
  if (!(t >= 0.0)) throw ArgumentError("t must be >= 0");
  const auto at_x = poisson_solution(model, f, x, trunc);
  const double T = at_x.truncation;
  const double pi = at_x.pi_f;
  const auto law = transition_law(model, x, t);
  const double e_fhat = law.measure.expectation([&](double y) { return poisson_solution(model, f, y, T).value; });
  double run = 0.0;
  if (model.time_domain() == TimeDomain::Discrete) {
    for (double s = 0.0; s < t; s += 1.0) run += exact_expectation(model, f, x, s).value() - pi;
  } else {
    run = integrate([&](double s) { return exact_expectation(model, f, x, s).value() - pi; }, 0.0, t, 1e-13);
  }
  ResidualCheck rc;
  rc.residual = std::fabs(e_fhat - at_x.value + run);
  rc.tolerance = detail::deviation_bound(model, f, x, T, t) + 1e-9 + law.dropped_mass * 2.0 * f.sup_norm * (T + 1.0);
  return rc;
}

/// max over F_s-atoms of |E[M_t | F_s] - M_s| for the martingale
///   M_t = f_hat(X_t) - f_hat(x) + sum_{u<t} (f(X_u) - pi(f)),
/// by enumerating all 2^t noise paths of an unsubordinated discrete chain.
inline ResidualCheck martingale_residual(const ModelSpec& model, const Functional& f, double x, int s, int t,
                                         double trunc = 30.0) {
  if (model.subordinated() || model.time_domain() != TimeDomain::Discrete) {
    throw UnsupportedError("martingale_residual enumerates unsubordinated discrete-time chains");
  }
  if (!(s >= 0 && s < t)) throw ArgumentError("martingale_residual needs 0 <= s < t");
  if (t > 14) throw UnsupportedError("martingale_residual: 2^t paths exceed the enumeration cap 2^14");
  x = model.require_state(x);
  const double pi = invariant_mean(model, f);
  std::map<double, double> cache;
  double T = trunc;
  auto fhat = [&](double y) {
    auto it = cache.find(y);
    if (it != cache.end()) return it->second;
    const auto sol = poisson_solution(model, f, y, trunc);
    T = sol.truncation;
    return cache.emplace(y, sol.value).first->second;
  };
  const Space space = model.space();
  auto next = [&](double y, bool bit) {
    if (model.kind() == ModelSpec::Kind::Ar1Binary) return 0.5 * y + (bit ? 0.5 : 0.0);
    return space.canonical(y + (bit ? 1.0 : -1.0));
  };
  const double f0 = fhat(x);
  ResidualCheck rc;
  const std::uint32_t prefixes = 1u << s, suffixes = 1u << (t - s);
  for (std::uint32_t p = 0; p < prefixes; ++p) {
    double y = x, run = 0.0;
    for (int u = 0; u < s; ++u) {
      run += f(y) - pi;
      y = next(y, (p >> u) & 1u);
    }
    const double m_s = fhat(y) - f0 + run;
    double mean = 0.0;
    for (std::uint32_t q = 0; q < suffixes; ++q) {
      double z = y, r2 = run;
      for (int u = 0; u < t - s; ++u) {
        r2 += f(z) - pi;
        z = next(z, (q >> u) & 1u);
      }
      mean += fhat(z) - f0 + r2;
    }
    mean /= suffixes;
    rc.residual = std::max(rc.residual, std::fabs(mean - m_s));
    rc.tolerance = std::max(rc.tolerance, detail::deviation_bound(model, f, y, T, t - s));
  }
  rc.tolerance += 1e-9;
  return rc;
}

// ---------------------------------------------------------------------------
// Conditions (i)-(iv)

struct DriftSpec {
  std::function<double(double)> V;
  std::function<double(double)> phi;
  double kappa = 1.0;
  std::string name;

  /// V == 1, phi(v) = v, kappa = 1.
  static DriftSpec trivial() {
    return {[](double) { return 1.0; }, [](double v) { return v; }, 1.0, "V=1,phi(v)=v,kappa=1"};
  }
};

namespace detail {

// phi(0) = 0, increasing and concave on a geometric grid.
inline void validate_drift(const DriftSpec& d) {
  if (!d.V || !d.phi) throw ArgumentError("invalid DriftSpec: V and phi are required");
  if (std::fabs(d.phi(0.0)) > 1e-12) throw ArgumentError("invalid DriftSpec: phi(0) must be 0");
  double prev = 0.0;
  for (int k = -20; k <= 40; ++k) {
    const double u = std::ldexp(1.0, k);
    const double a = d.phi(u), lo = d.phi(0.5 * u), hi = d.phi(1.5 * u);
    if (!(a > prev) || !std::isfinite(a)) throw ArgumentError("invalid DriftSpec: phi must be increasing and positive");
    if (lo + hi > 2.0 * a * (1.0 + 1e-12) + 1e-300) throw ArgumentError("invalid DriftSpec: phi is not concave");
    prev = a;
  }
}

}  // namespace detail

/// Phi(u) = integral of 1/phi over [1, u], computed in log u.
inline double big_phi(const std::function<double(double)>& phi, double u) {
  if (!(u > 0.0)) throw ArgumentError("Phi needs u > 0");
  return integrate([&](double w) { return std::exp(w) / phi(std::exp(w)); }, 0.0, std::log(u), 1e-14);
}

/// Phi^{-1}(t) for t >= 0 by bisection in log u to 1e-12.
inline double big_phi_inverse(const std::function<double(double)>& phi, double t) {
  if (!(t >= 0.0)) throw ArgumentError("Phi^{-1} needs t >= 0");
  auto g = [&](double w) { return big_phi(phi, std::exp(w)); };
  double hi = 1.0;
  while (g(hi) < t) {
    hi *= 2.0;
    if (hi > 700.0) return std::numeric_limits<double>::infinity();
  }
  return std::exp(bisect_increasing(g, t, 0.0, hi, 1e-12));
}

struct ConditionCheck {
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct ConditionOptions {
  std::vector<double> states;  // empty: a model-specific grid
  std::vector<double> times;   // empty: 1..6 (discrete) or 0.5, 1, 2, 4 (continuous)
  double tolerance = 1e-9;
};

struct ConditionReport {
  ConditionCheck bounded_metric;  // (i)
  ConditionCheck contraction;     // (ii)
  ConditionCheck drift;           // (iii)
  ConditionCheck phi_integral;    // (iv)
  std::vector<std::pair<double, double>> contraction_by_t;  // (t, max W(P^t x, P^t y) / d(x, y))
  SeriesResult phi_lebesgue;                 // integral over [1, inf)
  std::optional<SeriesResult> phi_counting;  // sum over n >= 1 (discrete models)
  double phi_inverse_at_one = 0.0;

  bool all_pass() const noexcept {
    return bounded_metric.pass && contraction.pass && drift.pass && phi_integral.pass;
  }
};

inline ConditionReport check_conditions(const ModelSpec& model, const DriftSpec& drift, double rho_probe,
                                        double epsilon_iv, ConditionOptions opt = {}) {
  detail::validate_drift(drift);
  if (!(rho_probe > 0.0 && rho_probe < 1.0)) throw ArgumentError("rho must lie in (0, 1)");
  if (!(epsilon_iv > 0.0 && epsilon_iv < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  const Space space = model.space();
  const bool discrete = model.time_domain() == TimeDomain::Discrete;
  if (opt.states.empty()) {
    const double lo = space.lo(), hi = space.is_circle() ? space.circumference() : space.hi();
    const int n = space.is_circle() ? 8 : 9;
    for (int i = 0; i < n; ++i) opt.states.push_back(lo + (hi - lo) * i / (space.is_circle() ? n : n - 1));
  }
  if (opt.times.empty()) {
    opt.times = discrete ? std::vector<double>{1, 2, 3, 4, 5, 6} : std::vector<double>{0.5, 1, 2, 4};
  }
  ConditionReport rep;

  // (i)
  rep.bounded_metric.value = space.diameter();
  rep.bounded_metric.pass = std::isfinite(rep.bounded_metric.value);
  rep.bounded_metric.detail = "diameter of " + space.describe();

  // (ii)
  double worst = 0.0;
  for (double t : opt.times) {
    double m = 0.0;
    for (std::size_t i = 0; i < opt.states.size(); ++i) {
      for (std::size_t j = i + 1; j < opt.states.size(); ++j) {
        const double d = space.distance(opt.states[i], opt.states[j]);
        if (d == 0.0) continue;
        m = std::max(m, transition_distance(model, opt.states[i], opt.states[j], t) / d);
      }
    }
    rep.contraction_by_t.emplace_back(t, m);
    worst = std::max(worst, m);
  }
  rep.contraction.value = worst;
  rep.contraction.pass = worst <= 1.0 - rho_probe + 1e-12;
  rep.contraction.detail = "max over probed (x, y, t) of W(P^t x, P^t y) / d(x, y) against 1 - rho";

  // (iii): E_x V(X_t) - V(x) - kappa t + tau-integral of E_x phi(V(X_s)) over [0, t) <= 0
  double slack = -std::numeric_limits<double>::infinity();
  auto pv = [&](double y) { return drift.phi(drift.V(y)); };
  for (double x : opt.states) {
    for (double t : opt.times) {
      const double ev = transition_law(model, x, t).measure.expectation(drift.V);
      double integral = 0.0;
      if (discrete) {
        for (double s = 0.0; s < t; s += 1.0) integral += transition_law(model, x, s).measure.expectation(pv);
      } else {
        integral = integrate([&](double s) { return transition_law(model, x, s).measure.expectation(pv); }, 0.0, t, 1e-12);
      }
      slack = std::max(slack, ev - drift.V(x) - drift.kappa * t + integral);
    }
  }
  rep.drift.value = slack;
  rep.drift.pass = slack <= opt.tolerance;
  rep.drift.detail = "max over grid of LHS - RHS of the drift inequality (" + drift.name + ")";

  // (iv): with t = Phi(u), the integral of (phi o Phi^{-1})^{eps-1} over [1, inf)
  // equals the integral of phi(u)^{eps-2} over [Phi^{-1}(1), inf)
  rep.phi_inverse_at_one = big_phi_inverse(drift.phi, 1.0);
  SeriesOptions sopt;
  sopt.abs_tol = 1e-11;
  rep.phi_lebesgue = integrate_to_infinity([&](double u) { return std::pow(drift.phi(u), epsilon_iv - 2.0); },
                                           rep.phi_inverse_at_one, sopt);
  if (discrete) {
    SeriesOptions copt;
    copt.max_blocks = 14;
    rep.phi_counting = sum_to_infinity(
        [&](double n) { return std::pow(drift.phi(big_phi_inverse(drift.phi, n)), epsilon_iv - 1.0); }, 1, copt);
  }
  const SeriesResult& governing = discrete ? *rep.phi_counting : rep.phi_lebesgue;
  rep.phi_integral.value = rep.phi_lebesgue.value;
  rep.phi_integral.pass = rep.phi_lebesgue.converged() && governing.converged();
  rep.phi_integral.detail = std::string("Lebesgue integral ") + to_string(rep.phi_lebesgue.status) +
                            (discrete ? std::string(", counting-measure sum ") + to_string(rep.phi_counting->status) : "");
  return rep;
}

}  // namespace whoeffding
