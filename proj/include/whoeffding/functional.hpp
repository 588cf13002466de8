#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "whoeffding/errors.hpp"
#include "whoeffding/space.hpp"

namespace whoeffding {

/// Bounded Lipschitz observable f with its constants Lip(f) and ||f||_inf
/// with respect to a given state space. Only named functionals are built so
/// that both constants are known exactly.
struct Functional {
  struct Affine {
    double slope;
    double intercept;
  };

  std::string name;
  std::function<double(double)> eval;
  double lip = 0.0;
  double sup_norm = 0.0;
  // Set when f is affine on the whole state space; expectations then reduce to f(mean).
  std::optional<Affine> affine;
  // Set when f = a cos(theta) on the 2pi circle, an eigenfunction of the torus walk.
  std::optional<double> cosine_amplitude;

  double operator()(double x) const { return eval(x); }

  /// c * f, with constants scaled by |c|.
  Functional scaled(double c) const {
    Functional g = *this;
    auto inner = eval;
    g.eval = [inner, c](double x) { return c * inner(x); };
    g.name = std::to_string(c) + "*" + name;
    g.lip = std::fabs(c) * lip;
    g.sup_norm = std::fabs(c) * sup_norm;
    if (affine) g.affine = Affine{c * affine->slope, c * affine->intercept};
    if (cosine_amplitude) g.cosine_amplitude = c * *cosine_amplitude;
    return g;
  }
};

namespace functionals {

inline Functional identity(const Space& space) {
  if (space.is_circle()) throw ArgumentError("identity functional is defined on intervals only");
  return Functional{"identity", [](double x) { return x; }, 1.0,
                    std::fmax(std::fabs(space.lo()), std::fabs(space.hi())), Functional::Affine{1.0, 0.0},
                    std::nullopt};
}

inline Functional constant(double c) {
  return Functional{"constant", [c](double) { return c; }, 0.0, std::fabs(c), Functional::Affine{0.0, c}, std::nullopt};
}

/// cos(theta) on the circle of circumference 2pi; 1-Lipschitz for arc length.
inline Functional cosine(const Space& space) {
  if (!space.is_circle() || space.circumference() != kTwoPi) {
    throw ArgumentError("cosine functional needs the 2pi circle");
  }
  return Functional{"cosine", [](double x) { return std::cos(x); }, 1.0, 1.0, std::nullopt, 1.0};
}

/// min(d(theta, anchor), clip) for the arc-length metric.
inline Functional clipped_distance(const Space& space, double anchor = 0.0, double clip = 1.0) {
  if (!space.is_circle()) throw ArgumentError("clipped-distance functional is defined on the circle");
  if (!(clip > 0.0)) throw ArgumentError("clip must be positive");
  const double sup = std::fmin(clip, space.diameter());
  return Functional{"clipped-distance",
                    [space, anchor, clip](double x) { return std::fmin(space.distance(x, anchor), clip); },
                    1.0, sup, std::nullopt, std::nullopt};
}

/// Resolves a functional by its CLI / config name.
inline Functional by_name(const std::string& name, const Space& space) {
  if (name == "identity") return identity(space);
  if (name == "cosine" || name == "cos") return cosine(space);
  if (name == "clipped-distance") return clipped_distance(space);
  if (name.rfind("constant:", 0) == 0) return constant(std::stod(name.substr(9)));
  throw ArgumentError("unknown functional '" + name + "' (identity, cosine, clipped-distance, constant:<c>)");
}

}  // namespace functionals

}  // namespace whoeffding
