#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "whoeffding/errors.hpp"
#include "whoeffding/space.hpp"

namespace whoeffding {

/// Finitely supported probability measure on an interval or circle.
///
/// Atoms are sorted, canonicalized (circle atoms in [0, 2pi)) and merged when
/// closer than kMergeTolerance; on the circle the merge also wraps around the
/// cut at 0. Weights are non-negative and sum to one within kMassTolerance.
class DiscreteMeasure {
 public:
  static constexpr double kMergeTolerance = 1e-12;
  static constexpr double kMassTolerance = 1e-12;

  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights, Space space)
      : atoms_(std::move(atoms)), weights_(std::move(weights)), space_(space) {
    normalize_layout(false);
  }

  static DiscreteMeasure dirac(double at, const Space& space) {
    return DiscreteMeasure({at}, {1.0}, space);
  }

  /// Same as the constructor but rescales weights to sum to one first
  /// (used for truncated mixtures whose dropped mass is reported separately).
  static DiscreteMeasure normalized(std::vector<double> atoms, std::vector<double> weights,
                                    const Space& space) {
    DiscreteMeasure m(std::move(atoms), std::move(weights), space, Unchecked{});
    m.normalize_layout(true);
    return m;
  }

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  const Space& space() const noexcept { return space_; }

  template <class F>
  double expectation(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) s += weights_[i] * f(atoms_[i]);
    return s;
  }

  double mean() const {
    return expectation([](double x) { return x; });
  }

  /// Pushforward under a map of the state space into itself.
  template <class F>
  DiscreteMeasure map(F&& f) const {
    std::vector<double> a(atoms_.size());
    for (std::size_t i = 0; i < atoms_.size(); ++i) a[i] = f(atoms_[i]);
    return DiscreteMeasure(std::move(a), weights_, space_);
  }

  nlohmann::json to_json() const {
    nlohmann::json space;
    if (space_.is_circle()) {
      space = {{"type", "circle"}, {"circumference", space_.circumference()}};
    } else {
      space = {{"type", "interval"}, {"lo", space_.lo()}, {"hi", space_.hi()}};
    }
    return {{"space", space}, {"atoms", atoms_}, {"weights", weights_}};
  }

  static DiscreteMeasure from_json(const nlohmann::json& j) {
    if (!j.contains("atoms") || !j.contains("weights")) {
      throw ArgumentError("measure json needs atoms[] and weights[]");
    }
    return DiscreteMeasure(j.at("atoms").get<std::vector<double>>(),
                           j.at("weights").get<std::vector<double>>(), space_from_json(j));
  }

  static Space space_from_json(const nlohmann::json& j) {
    if (!j.contains("space")) return Space::interval(-1e300, 1e300);
    const auto& s = j.at("space");
    const auto type = s.at("type").get<std::string>();
    if (type == "circle") return Space::circle(s.value("circumference", kTwoPi));
    if (type == "interval") return Space::interval(s.at("lo").get<double>(), s.at("hi").get<double>());
    throw ArgumentError("unknown space type '" + type + "'");
  }

 private:
  struct Unchecked {};
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights, Space space, Unchecked)
      : atoms_(std::move(atoms)), weights_(std::move(weights)), space_(space) {}

  void normalize_layout(bool rescale) {
    if (atoms_.empty() || atoms_.size() != weights_.size()) {
      throw ArgumentError("measure needs equally many (>0) atoms and weights");
    }
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
        throw ArgumentError("measure weights must be finite and non-negative");
      }
      const double c = space_.canonical(atoms_[i]);
      if (!space_.contains(c)) {
        std::ostringstream os;
        os.precision(17);
        os << "atom " << atoms_[i] << " outside " << space_.describe();
        throw DomainError(os.str());
      }
      atoms_[i] = c;
    }
    if (!std::is_sorted(atoms_.begin(), atoms_.end())) {
      std::vector<std::size_t> idx(atoms_.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return atoms_[a] < atoms_[b]; });
      std::vector<double> a(idx.size()), w(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        a[i] = atoms_[idx[i]];
        w[i] = weights_[idx[i]];
      }
      atoms_ = std::move(a);
      weights_ = std::move(w);
    }
    std::vector<double> a, w;
    a.reserve(atoms_.size());
    w.reserve(atoms_.size());
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!a.empty() && atoms_[i] - a.back() <= kMergeTolerance) {
        w.back() += weights_[i];
      } else {
        a.push_back(atoms_[i]);
        w.push_back(weights_[i]);
      }
    }
    if (space_.is_circle() && a.size() > 1 &&
        space_.circumference() - a.back() + a.front() <= kMergeTolerance) {
      w.front() += w.back();
      a.pop_back();
      w.pop_back();
    }
    double total = 0.0;
    for (double x : w) total += x;
    if (rescale) {
      if (!(total > 0.0)) throw ArgumentError("measure has zero total mass");
      for (double& x : w) x /= total;
    } else if (std::fabs(total - 1.0) > kMassTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "measure weights sum to " << total << ", expected 1";
      throw ArgumentError(os.str());
    }
    atoms_ = std::move(a);
    weights_ = std::move(w);
  }

  std::vector<double> atoms_;
  std::vector<double> weights_;
  Space space_;
};

/// Normalized Lebesgue measure on an interval or circle.
struct UniformMeasure {
  Space space;
};

/// Convex combination sum_k c_k mu_k of measures on one space.
inline DiscreteMeasure mixture(std::span<const double> coefficients,
                               std::span<const DiscreteMeasure> components) {
  if (coefficients.size() != components.size() || components.empty()) {
    throw ArgumentError("mixture needs one coefficient per component");
  }
  std::vector<double> a, w;
  const Space& space = components.front().space();
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (!(components[k].space() == space)) throw ArgumentError("mixture components on different spaces");
    for (std::size_t i = 0; i < components[k].size(); ++i) {
      a.push_back(components[k].atoms()[i]);
      w.push_back(coefficients[k] * components[k].weights()[i]);
    }
  }
  return DiscreteMeasure::normalized(std::move(a), std::move(w), space);
}

}  // namespace whoeffding
