#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "whoeffding/errors.hpp"

namespace whoeffding {

/// Counting measure on {0,1,2,...} or Lebesgue measure on [0, inf).
enum class TimeDomain { Discrete, Continuous };

inline const char* to_string(TimeDomain d) noexcept {
  return d == TimeDomain::Discrete ? "discrete" : "continuous";
}

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// State space tag: a closed interval with |x - y|, or a circle with the
/// arc-length metric. Circle points are kept in [0, circumference).
class Space {
 public:
  enum class Kind { Interval, Circle };

  static Space interval(double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ArgumentError("interval space needs finite lo < hi");
    }
    return Space(Kind::Interval, lo, hi);
  }

  static Space circle(double circumference = kTwoPi) {
    if (!(circumference > 0.0) || !std::isfinite(circumference)) {
      throw ArgumentError("circle space needs a positive circumference");
    }
    return Space(Kind::Circle, 0.0, circumference);
  }

  Kind kind() const noexcept { return kind_; }
  bool is_circle() const noexcept { return kind_ == Kind::Circle; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double circumference() const noexcept { return hi_; }
  double length() const noexcept { return hi_ - lo_; }

  bool contains(double v) const noexcept {
    if (!std::isfinite(v)) return false;
    if (kind_ == Kind::Circle) return v >= 0.0 && v < hi_;
    return v >= lo_ && v <= hi_;
  }

  /// Circle: reduce mod circumference into [0, c). Interval: identity.
  double canonical(double v) const noexcept {
    if (kind_ == Kind::Interval) return v;
    double r = std::fmod(v, hi_);
    if (r < 0.0) r += hi_;
    if (r >= hi_) r = 0.0;
    return r;
  }

  double distance(double a, double b) const noexcept {
    double d = std::fabs(a - b);
    if (kind_ == Kind::Circle) {
      d = std::fmod(d, hi_);
      d = std::fmin(d, hi_ - d);
    }
    return d;
  }

  double diameter() const noexcept {
    return kind_ == Kind::Circle ? 0.5 * hi_ : hi_ - lo_;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::Circle) {
      os << "circle(" << hi_ << ")";
    } else {
      os << "interval(" << lo_ << "," << hi_ << ")";
    }
    return os.str();
  }

  bool operator==(const Space&) const = default;

 private:
  Space(Kind k, double lo, double hi) : kind_(k), lo_(lo), hi_(hi) {}

  Kind kind_;
  double lo_;
  double hi_;
};

/// A point of a state space. Construction validates membership.
struct State {
  double value;
  Space space;

  static State make(double v, const Space& s) {
    double c = s.canonical(v);
    if (!s.contains(c)) {
      std::ostringstream os;
      os.precision(17);
      os << "state " << v << " outside " << s.describe();
      throw DomainError(os.str());
    }
    return State{c, s};
  }
};

}  // namespace whoeffding
