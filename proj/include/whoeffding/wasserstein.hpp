#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "whoeffding/measures.hpp"
#include "whoeffding/transport.hpp"

namespace whoeffding {

namespace detail {

// Merged sorted breakpoints of two measures with the signed CDF difference
// F_mu - F_nu on [points[i], points[i+1]).
struct CdfProfile {
  std::vector<double> points;
  std::vector<double> diff;
};

inline CdfProfile cdf_difference(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  CdfProfile prof;
  const auto a = mu.atoms(), wa = mu.weights(), b = nu.atoms(), wb = nu.weights();
  prof.points.reserve(a.size() + b.size());
  prof.diff.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  double level = 0.0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) level += wa[i++];
    while (j < b.size() && b[j] == x) level -= wb[j++];
    prof.points.push_back(x);
    prof.diff.push_back(level);
  }
  return prof;
}

// Weighted median of values with non-negative weights; minimizes sum w|v - c|.
inline double weighted_median(std::vector<std::pair<double, double>> value_weight) {
  std::sort(value_weight.begin(), value_weight.end());
  double total = 0.0;
  for (auto& [v, w] : value_weight) total += w;
  double acc = 0.0;
  for (auto& [v, w] : value_weight) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return value_weight.back().first;
}

// Integral over [0, len] of |v0 + slope * u|.
inline double abs_linear_integral(double v0, double slope, double len) {
  const double v1 = v0 + slope * len;
  if ((v0 >= 0.0 && v1 >= 0.0) || (v0 <= 0.0 && v1 <= 0.0)) {
    return 0.5 * std::fabs(v0 + v1) * len;
  }
  // sign change at u0 = -v0 / slope
  const double u0 = -v0 / slope;
  return 0.5 * std::fabs(v0) * u0 + 0.5 * std::fabs(v1) * (len - u0);
}

inline void require_same_space(const DiscreteMeasure& mu, const Space& s, const char* what) {
  if (!(mu.space() == s)) throw ArgumentError(std::string(what) + ": measures live on different spaces");
}

}  // namespace detail

/// W1 on an interval: integral of |F_mu - F_nu|.
inline double w1_line(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  detail::require_same_space(mu, nu.space(), "w1_line");
  if (mu.space().is_circle()) throw ArgumentError("w1_line: circle measures need w1_circle");
  const auto prof = detail::cdf_difference(mu, nu);
  double w = 0.0;
  for (std::size_t k = 0; k + 1 < prof.points.size(); ++k) {
    w += std::fabs(prof.diff[k]) * (prof.points[k + 1] - prof.points[k]);
  }
  return w;
}

/// W1 on a circle with arc-length cost:
///   min over c of the integral of |F_mu - F_nu - c|,
/// attained at a length-weighted median c of the CDF-difference levels.
inline double w1_circle(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  detail::require_same_space(mu, nu.space(), "w1_circle");
  if (!mu.space().is_circle()) throw ArgumentError("w1_circle: interval measures need w1_line");
  const double C = mu.space().circumference();
  const auto prof = detail::cdf_difference(mu, nu);
  std::vector<std::pair<double, double>> levels;  // (level, arc length)
  levels.reserve(prof.points.size() + 1);
  // arc [0, first point) has level 0, [last point, C) has the final level (= 0 up to rounding)
  levels.emplace_back(0.0, prof.points.front());
  for (std::size_t k = 0; k < prof.points.size(); ++k) {
    const double end = k + 1 < prof.points.size() ? prof.points[k + 1] : C;
    levels.emplace_back(prof.diff[k], end - prof.points[k]);
  }
  levels.back().first = 0.0;
  const double c = detail::weighted_median(levels);
  double w = 0.0;
  for (auto& [v, len] : levels) w += std::fabs(v - c) * len;
  return w;
}

/// Dispatches on the space kind.
inline double w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return mu.space().is_circle() ? w1_circle(mu, nu) : w1_line(mu, nu);
}

/// Exact W1 between a discrete measure and normalized Lebesgue measure,
/// integrating the piecewise linear CDF difference in closed form.
inline double w1_vs_uniform(const DiscreteMeasure& mu, const UniformMeasure& uniform) {
  detail::require_same_space(mu, uniform.space, "w1_vs_uniform");
  const Space& s = mu.space();
  const auto a = mu.atoms(), wa = mu.weights();
  // segments [start_k, end_k) with F_mu = level_k and F_unif(u) = (u - lo) / L
  struct Segment {
    double start, end, level;
  };
  std::vector<Segment> segs;
  segs.reserve(a.size() + 1);
  double level = 0.0;
  double prev = s.lo();
  for (std::size_t i = 0; i < a.size(); ++i) {
    segs.push_back({prev, a[i], level});
    level += wa[i];
    prev = a[i];
  }
  segs.push_back({prev, s.hi(), level});
  const double L = s.length();
  const double slope = -1.0 / L;
  auto cost_at = [&](double c) {
    double w = 0.0;
    for (const auto& g : segs) {
      if (g.end <= g.start) continue;
      w += detail::abs_linear_integral(g.level - (g.start - s.lo()) / L - c, slope, g.end - g.start);
    }
    return w;
  };
  if (!s.is_circle()) return cost_at(0.0);

  // Circle: c* is the median of D(theta) = F_mu(theta) - theta / C under arc length;
  // measure{D <= c} is continuous and increasing in c, so bisect it to C/2.
  auto below = [&](double c) {
    double m = 0.0;
    for (const auto& g : segs) {
      if (g.end <= g.start) continue;
      // D decreases on the segment; D <= c  <=>  theta >= lo + L (level - c)
      const double cut = s.lo() + L * (g.level - c);
      m += std::clamp(g.end - std::max(g.start, cut), 0.0, g.end - g.start);
    }
    return m;
  };
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (below(mid) < 0.5 * L) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return cost_at(0.5 * (lo + hi));
}

/// Reference transport cost by solving the coupling linear program exactly.
/// Intended as an independent oracle; capped at `cap` atoms per side.
inline constexpr std::size_t kOracleAtomCap = 64;

inline double w1_oracle_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                           std::size_t cap = kOracleAtomCap) {
  detail::require_same_space(mu, nu.space(), "w1_oracle_lp");
  if (mu.size() > cap || nu.size() > cap) {
    throw ArgumentError("w1_oracle_lp: measures exceed the oracle atom cap");
  }
  const Space& s = mu.space();
  std::vector<std::vector<double>> cost(mu.size(), std::vector<double>(nu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) cost[i][j] = s.distance(mu.atoms()[i], nu.atoms()[j]);
  }
  detail::TransportSolver solver(mu.weights(), nu.weights(), cost);
  return solver.solve();
}

}  // namespace whoeffding
