#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "whoeffding/errors.hpp"
#include "whoeffding/functional.hpp"
#include "whoeffding/measures.hpp"
#include "whoeffding/numerics.hpp"
#include "whoeffding/rng.hpp"
#include "whoeffding/space.hpp"
#include "whoeffding/subordinator.hpp"
#include "whoeffding/wasserstein.hpp"

namespace whoeffding {

inline constexpr int kAr1LawCap = 24;
inline constexpr int kTorusLawCap = 30;
inline constexpr int kAr1ExpectationCap = 20;
inline constexpr std::size_t kMixtureAtomCap = std::size_t{1} << 22;

/// Invariant law of an example model.
struct InvariantMeasure {
  enum class Kind { DiracAtZero, UniformInterval01, UniformCircle };
  Kind kind;
  Space space;

  /// pi(f): closed form for Dirac and affine or cosine functionals, else quadrature.
  double mean_of(const Functional& f) const {
    switch (kind) {
      case Kind::DiracAtZero: return f(0.0);
      case Kind::UniformInterval01:
        if (f.affine) return f.affine->slope * 0.5 + f.affine->intercept;
        return integrate(f.eval, 0.0, 1.0, 1e-10);
      case Kind::UniformCircle:
        if (f.cosine_amplitude) return 0.0;
        if (f.affine && f.affine->slope == 0.0) return f.affine->intercept;
        return integrate(f.eval, 0.0, space.circumference(), 1e-10) / space.circumference();
    }
    return 0.0;
  }

  const char* name() const noexcept {
    switch (kind) {
      case Kind::DiracAtZero: return "dirac(0)";
      case Kind::UniformInterval01: return "uniform[0,1]";
      case Kind::UniformCircle: return "uniform(circle)";
    }
    return "?";
  }
};

/// One of the example models, or a subordinated wrapper around one.
///   flow:  dX = -|X|^alpha sign(X) dt on [-1, 1], continuous time, pi = delta_0
///   ar1:   X' = X/2 + xi, xi uniform on {0, 1/2}, on [0, 1], pi = Leb
///   torus: Y' = Y + xi mod 2pi, xi uniform on {-1, +1}, pi = uniform
class ModelSpec {
 public:
  enum class Kind { Flow, Ar1Binary, TorusWalk, Subordinated };

  static ModelSpec flow(double alpha = 1.0) {
    if (!(alpha >= 1.0 && alpha < 2.0)) throw ArgumentError("flow alpha must lie in [1, 2)");
    ModelSpec m(Kind::Flow);
    m.alpha_ = alpha;
    return m;
  }
  static ModelSpec ar1() { return ModelSpec(Kind::Ar1Binary); }
  static ModelSpec torus() { return ModelSpec(Kind::TorusWalk); }

  static ModelSpec by_name(const std::string& name, double alpha = 1.0) {
    if (name == "flow") return flow(alpha);
    if (name == "ar1") return ar1();
    if (name == "torus") return torus();
    throw ArgumentError("unknown model '" + name + "' (flow, ar1, torus)");
  }

  Kind kind() const noexcept { return kind_; }
  bool subordinated() const noexcept { return kind_ == Kind::Subordinated; }
  double alpha() const noexcept { return subordinated() ? base_->alpha() : alpha_; }
  const ModelSpec& base() const {
    if (!base_) throw ArgumentError("model is not subordinated");
    return *base_;
  }
  /// The unsubordinated model at the bottom.
  const ModelSpec& root() const { return subordinated() ? *base_ : *this; }
  const SubordinatorSpec& subordinator() const {
    if (!sub_) throw ArgumentError("model is not subordinated");
    return *sub_;
  }
  Kind base_kind() const noexcept { return root().kind(); }

  TimeDomain time_domain() const noexcept {
    switch (kind_) {
      case Kind::Flow: return TimeDomain::Continuous;
      case Kind::Ar1Binary:
      case Kind::TorusWalk: return TimeDomain::Discrete;
      case Kind::Subordinated: return sub_->time_domain();
    }
    return TimeDomain::Discrete;
  }

  Space space() const {
    switch (root().kind()) {
      case Kind::Flow: return Space::interval(-1.0, 1.0);
      case Kind::Ar1Binary: return Space::interval(0.0, 1.0);
      default: return Space::circle(kTwoPi);
    }
  }

  InvariantMeasure invariant() const {
    switch (root().kind()) {
      case Kind::Flow: return {InvariantMeasure::Kind::DiracAtZero, space()};
      case Kind::Ar1Binary: return {InvariantMeasure::Kind::UniformInterval01, space()};
      default: return {InvariantMeasure::Kind::UniformCircle, space()};
    }
  }

  std::string name() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::Flow: os << "flow(alpha=" << alpha_ << ")"; break;
      case Kind::Ar1Binary: os << "ar1"; break;
      case Kind::TorusWalk: os << "torus"; break;
      case Kind::Subordinated: os << base_->name() << "@" << sub_->name(); break;
    }
    return os.str();
  }

  /// Validates and canonicalizes a state of this model.
  double require_state(double x) const { return State::make(x, space()).value; }

  friend ModelSpec subordinate_model(const ModelSpec& base, const SubordinatorSpec& spec);

 private:
  explicit ModelSpec(Kind k) : kind_(k) {}

  Kind kind_;
  double alpha_ = 1.0;
  std::shared_ptr<const ModelSpec> base_;
  std::optional<SubordinatorSpec> sub_;
};

/// X^S_t = X_{S_t}. A discrete-time base needs an integer-valued clock; the
/// invariant law is inherited from the base.
inline ModelSpec subordinate_model(const ModelSpec& base, const SubordinatorSpec& spec) {
  if (base.subordinated()) throw ArgumentError("nested subordination is not supported");
  if (base.time_domain() == TimeDomain::Discrete && !spec.integer_valued()) {
    throw ArgumentError("a discrete-time base needs an integer-valued subordinator");
  }
  ModelSpec m(ModelSpec::Kind::Subordinated);
  m.base_ = std::make_shared<const ModelSpec>(base);
  m.sub_ = spec;
  return m;
}

/// Closed-form solution of the flow started at x.
inline double flow_state(double x, double t, double alpha) {
  if (!(alpha >= 1.0 && alpha < 2.0)) throw ArgumentError("flow alpha must lie in [1, 2)");
  if (!(x >= -1.0 && x <= 1.0)) throw DomainError("flow state must lie in [-1, 1]");
  if (!(t >= 0.0)) throw ArgumentError("flow time must be >= 0");
  if (alpha == 1.0) return x * std::exp(-t);
  if (x == 0.0) return 0.0;
  const double a = alpha - 1.0;
  return x / std::pow(a * std::pow(std::fabs(x), a) * t + 1.0, 1.0 / a);
}

namespace detail {

inline int require_step_count(double t, int cap, const char* what) {
  if (!(t >= 0.0) || t != std::floor(t)) throw ArgumentError(std::string(what) + ": t must be a non-negative integer");
  if (t > cap) {
    throw ArgumentError(std::string(what) + ": t exceeds the exact-law cap " + std::to_string(cap) +
                        "; use sampling instead");
  }
  return static_cast<int>(t);
}

}  // namespace detail

/// Law of the ar1 chain after t steps: uniform on (x + j) / 2^t, j < 2^t.
inline DiscreteMeasure ar1_t_step_law(double x, int t) {
  detail::require_step_count(t, kAr1LawCap, "ar1_t_step_law");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("ar1 state must lie in [0, 1]");
  const std::size_t n = std::size_t{1} << t;
  const double scale = std::ldexp(1.0, -t);
  std::vector<double> atoms(n), weights(n, scale);
  for (std::size_t j = 0; j < n; ++j) atoms[j] = (x + static_cast<double>(j)) * scale;
  return DiscreteMeasure(std::move(atoms), std::move(weights), Space::interval(0.0, 1.0));
}

/// Law of the torus walk after t steps: atom x + 2k - t with weight C(t, k) / 2^t.
inline DiscreteMeasure torus_t_step_law(double x, int t) {
  detail::require_step_count(t, kTorusLawCap, "torus_t_step_law");
  Space circle = Space::circle(kTwoPi);
  std::vector<double> atoms(t + 1), weights(t + 1);
  double c = 1.0;  // C(t, k)
  for (int k = 0; k <= t; ++k) {
    atoms[k] = circle.canonical(x + 2.0 * k - t);
    weights[k] = std::ldexp(c, -t);
    c = c * (t - k) / (k + 1);
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights), circle);
}

/// Exact law of X_t, truncated only where the clock is Poisson; `dropped_mass`
/// bounds the probability of the clock values left out.
struct ExactLaw {
  DiscreteMeasure measure;
  double dropped_mass = 0.0;
};

namespace detail {

inline DiscreteMeasure base_law(const ModelSpec& base, double x, double s) {
  switch (base.kind()) {
    case ModelSpec::Kind::Flow: return DiscreteMeasure::dirac(flow_state(x, s, base.alpha()), base.space());
    case ModelSpec::Kind::Ar1Binary: return ar1_t_step_law(x, require_step_count(s, kAr1LawCap, "ar1"));
    case ModelSpec::Kind::TorusWalk: return torus_t_step_law(x, require_step_count(s, kTorusLawCap, "torus"));
    case ModelSpec::Kind::Subordinated: break;
  }
  throw ArgumentError("base_law needs an unsubordinated model");
}

}  // namespace detail

inline ExactLaw transition_law(const ModelSpec& model, double x, double t) {
  x = model.require_state(x);
  if (!model.subordinated()) return {detail::base_law(model, x, t), 0.0};
  const auto clock = subordinator_law(model.subordinator(), t);
  std::vector<double> coeffs;
  std::vector<DiscreteMeasure> parts;
  std::size_t atoms = 0;
  for (std::size_t i = 0; i < clock.p.size(); ++i) {
    if (clock.p[i] == 0.0) continue;
    const auto s = static_cast<double>(clock.first + static_cast<std::int64_t>(i));
    parts.push_back(detail::base_law(model.base(), x, s));
    atoms += parts.back().size();
    if (atoms > kMixtureAtomCap) throw ArgumentError("transition_law: mixture exceeds the atom cap");
    coeffs.push_back(clock.p[i]);
  }
  return {mixture(coeffs, parts), clock.dropped_mass};
}

/// W(P^t(x, .), pi), exact up to the exact-law caps.
inline double exact_w_to_invariant(const ModelSpec& model, double x, double t) {
  x = model.require_state(x);
  const ModelSpec& root = model.root();
  if (root.kind() == ModelSpec::Kind::Flow) {
    if (!model.subordinated()) return std::fabs(flow_state(x, t, model.alpha()));
    // mixture of Diracs on one side of 0 against delta_0: W = E|X_t|
    if (model.alpha() == 1.0) {
      return std::fabs(x) * expected_rate(model.subordinator(), RateFunction::exp_decay(1.0), t);
    }
    return transition_law(model, x, t).measure.expectation([](double y) { return std::fabs(y); });
  }
  const auto law = transition_law(model, x, t).measure;
  return w1_vs_uniform(law, UniformMeasure{model.space()});
}

/// Exact W(P^t(x, .), P^t(y, .)).
inline double transition_distance(const ModelSpec& model, double x, double y, double t) {
  x = model.require_state(x);
  y = model.require_state(y);
  if (model.kind() == ModelSpec::Kind::Flow) {
    return std::fabs(flow_state(x, t, model.alpha()) - flow_state(y, t, model.alpha()));
  }
  return w1(transition_law(model, x, t).measure, transition_law(model, y, t).measure);
}

/// W(P(x, .), P(y, .)) for discrete-time models.
inline double one_step_contraction(const ModelSpec& model, double x, double y) {
  if (model.time_domain() != TimeDomain::Discrete) {
    throw UnsupportedError("one_step_contraction needs a discrete-time model");
  }
  return transition_distance(model, x, y, 1.0);
}

/// pi(f) for the model's invariant law.
inline double invariant_mean(const ModelSpec& model, const Functional& f) { return model.invariant().mean_of(f); }

/// E_x[f(X_t)] when it can be computed exactly; nullopt otherwise.
inline std::optional<double> exact_expectation(const ModelSpec& model, const Functional& f, double x, double t) {
  x = model.require_state(x);
  const ModelSpec& root = model.root();
  if (!model.subordinated()) {
    switch (model.kind()) {
      case ModelSpec::Kind::Flow: return f(flow_state(x, t, model.alpha()));
      case ModelSpec::Kind::Ar1Binary: {
        const int n = detail::require_step_count(t, std::numeric_limits<int>::max(), "ar1");
        if (f.affine) {
          const double q = std::ldexp(1.0, -n);
          return f.affine->slope * (x * q + 0.5 * (1.0 - q)) + f.affine->intercept;
        }
        if (n > kAr1ExpectationCap) return std::nullopt;
        return ar1_t_step_law(x, n).expectation(f.eval);
      }
      case ModelSpec::Kind::TorusWalk: {
        const int n = detail::require_step_count(t, std::numeric_limits<int>::max(), "torus");
        if (f.cosine_amplitude) return *f.cosine_amplitude * std::pow(std::cos(1.0), n) * std::cos(x);
        if (f.affine && f.affine->slope == 0.0) return f.affine->intercept;
        if (n > kTorusLawCap) return std::nullopt;
        return torus_t_step_law(x, n).expectation(f.eval);
      }
      case ModelSpec::Kind::Subordinated: break;
    }
  }
  const auto& sub = model.subordinator();
  if (f.affine && f.affine->slope == 0.0) return f.affine->intercept;
  // closed forms through the Laplace transform of S_t
  if (root.kind() == ModelSpec::Kind::Flow && root.alpha() == 1.0 && f.affine) {
    return f.affine->slope * x * expected_rate(sub, RateFunction::exp_decay(1.0), t) + f.affine->intercept;
  }
  if (root.kind() == ModelSpec::Kind::Ar1Binary && f.affine) {
    const double q = expected_rate(sub, RateFunction::exp_decay(std::numbers::ln2), t);
    return f.affine->slope * (x * q + 0.5 * (1.0 - q)) + f.affine->intercept;
  }
  if (root.kind() == ModelSpec::Kind::TorusWalk && f.cosine_amplitude) {
    const double q = expected_rate(sub, RateFunction::exp_decay(-std::log(std::cos(1.0))), t);
    return *f.cosine_amplitude * q * std::cos(x);
  }
  if (!sub.integer_valued()) return std::nullopt;
  const auto clock = subordinator_law(sub, t);
  double acc = 0.0;
  for (std::size_t i = 0; i < clock.p.size(); ++i) {
    if (clock.p[i] == 0.0) continue;
    const auto s = static_cast<double>(clock.first + static_cast<std::int64_t>(i));
    const auto e = exact_expectation(root, f, x, s);
    if (!e) return std::nullopt;
    acc += clock.p[i] * *e;
  }
  return acc;
}

/// One transition of an unsubordinated discrete-time model.
inline double step(const ModelSpec& model, double x, Rng& rng) {
  switch (model.kind()) {
    case ModelSpec::Kind::Ar1Binary: return 0.5 * x + (rng.coin() ? 0.5 : 0.0);
    case ModelSpec::Kind::TorusWalk: {
      static const Space circle = Space::circle(kTwoPi);
      return circle.canonical(x + (rng.coin() ? 1.0 : -1.0));
    }
    default: break;
  }
  throw UnsupportedError("step needs an unsubordinated discrete-time model");
}

/// Runs the unsubordinated model forward for time s from x (n steps, or the flow map).
inline double advance(const ModelSpec& model, double x, double s, Rng& rng) {
  if (model.kind() == ModelSpec::Kind::Flow) return flow_state(x, s, model.alpha());
  if (model.subordinated()) throw UnsupportedError("advance works on the base model");
  const auto n = detail::require_step_count(s, std::numeric_limits<int>::max(), "advance");
  for (int i = 0; i < n; ++i) x = step(model, x, rng);
  return x;
}

}  // namespace whoeffding
