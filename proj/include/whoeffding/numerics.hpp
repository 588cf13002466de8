#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "whoeffding/errors.hpp"

namespace whoeffding {

/// Reals are written with 17 significant digits everywhere (CSV and reports).
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Adaptive Gauss-Kronrod (15/31 nodes) on a finite interval.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 18) {
  if (a == b) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      std::forward<F>(f), a, b, max_depth, rel_tol, &err);
}

enum class SeriesStatus { Converged, Divergent, Inconclusive };

inline const char* to_string(SeriesStatus s) noexcept {
  switch (s) {
    case SeriesStatus::Converged: return "converged";
    case SeriesStatus::Divergent: return "divergent";
    case SeriesStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

/// Result of summing a non-negative series or integrating a non-negative
/// function over [a, inf) in dyadic blocks.
struct SeriesResult {
  SeriesStatus status = SeriesStatus::Inconclusive;
  double value = 0.0;           // partial sum plus extrapolated tail
  double partial = 0.0;         // sum of evaluated blocks
  double tail_estimate = 0.0;   // geometric extrapolation of the rest
  double error_estimate = 0.0;  // uncertainty of the extrapolated tail
  std::vector<double> blocks;   // block_k covers [a + 2^(k-1), a + 2^k), block_0 = [a, a+1)

  bool converged() const noexcept { return status == SeriesStatus::Converged; }
};

struct SeriesOptions {
  double abs_tol = 1e-10;
  double divergence_cap = 1e15;
  int min_blocks = 4;
  int max_blocks = 60;
  int growth_blocks = 6;  // consecutive blocks with ratio ~1 that count as divergence
};

namespace detail {

// Shared block driver. block(k) must return the mass of block k.
template <class Block>
SeriesResult dyadic_blocks(Block&& block, const SeriesOptions& opt) {
  SeriesResult res;
  double prev = std::numeric_limits<double>::quiet_NaN();
  double prev_ratio = std::numeric_limits<double>::quiet_NaN();
  int flat = 0;
  for (int k = 0; k < opt.max_blocks; ++k) {
    const double b = std::fabs(block(k));
    res.blocks.push_back(b);
    res.partial += b;
    if (!std::isfinite(res.partial) || res.partial > opt.divergence_cap) {
      res.status = SeriesStatus::Divergent;
      res.value = std::numeric_limits<double>::infinity();
      return res;
    }
    double ratio = std::numeric_limits<double>::quiet_NaN();
    // block 1 has the same width as block 0; ratios only make sense from k >= 2
    if (k >= 2 && prev > 0.0) ratio = b / prev;
    if (k + 1 >= opt.min_blocks) {
      if (b == 0.0 && prev == 0.0) {
        res.status = SeriesStatus::Converged;
        res.value = res.partial;
        return res;
      }
      if (std::isfinite(ratio)) {
        flat = ratio >= 1.0 - 1e-3 ? flat + 1 : 0;
        if (flat >= opt.growth_blocks) {
          res.status = SeriesStatus::Divergent;
          res.value = std::numeric_limits<double>::infinity();
          return res;
        }
        if (ratio < 1.0) {
          const double tail = b * ratio / (1.0 - ratio);
          double unc = std::numeric_limits<double>::infinity();
          if (std::isfinite(prev_ratio) && prev_ratio < 1.0) {
            const double dr = std::fabs(ratio - prev_ratio);
            unc = b * dr / ((1.0 - ratio) * (1.0 - std::max(ratio, prev_ratio)));
          }
          if (b <= 1e-3 * opt.abs_tol || (tail <= 1e-3 * opt.abs_tol && unc <= opt.abs_tol) ||
              unc <= opt.abs_tol) {
            res.status = SeriesStatus::Converged;
            res.tail_estimate = tail;
            res.error_estimate = std::isfinite(unc) ? unc : tail;
            res.value = res.partial + tail;
            return res;
          }
        }
      }
    }
    prev = b;
    if (std::isfinite(ratio)) prev_ratio = ratio;
  }
  res.status = SeriesStatus::Inconclusive;
  res.value = res.partial;
  return res;
}

}  // namespace detail

/// Integral of a non-negative f over [a, inf); blocks [a,a+1), [a+1,a+2), [a+2,a+4), ...
/// Successive block masses drive a ratio test: ratio ~1 or growth means divergence,
/// a stable ratio < 1 gives a geometric tail estimate.
template <class F>
SeriesResult integrate_to_infinity(F&& f, double a, const SeriesOptions& opt = {}) {
  auto block = [&](int k) {
    const double lo = k == 0 ? a : a + std::ldexp(1.0, k - 1);
    const double hi = a + std::ldexp(1.0, k);
    return integrate(f, lo, hi, 1e-14);
  };
  return detail::dyadic_blocks(block, opt);
}

/// Sum of a non-negative term(n) over integers n = first, first+1, ... in
/// dyadic blocks. `term` takes a double so that, when `smooth` is set, blocks
/// longer than `explicit_block_limit` are summed by Euler-Maclaurin (integral
/// plus endpoint and first-derivative corrections) instead of term by term.
template <class Term>
SeriesResult sum_to_infinity(Term&& term, std::int64_t first, const SeriesOptions& opt = {},
                             bool smooth = false, std::int64_t explicit_block_limit = 1 << 14) {
  auto block = [&](int k) {
    const std::int64_t lo = k == 0 ? first : first + (std::int64_t{1} << (k - 1));
    const std::int64_t hi = first + (std::int64_t{1} << k);  // exclusive
    if (!smooth || hi - lo <= explicit_block_limit) {
      double s = 0.0;
      for (std::int64_t n = lo; n < hi; ++n) s += term(static_cast<double>(n));
      return s;
    }
    const double a = static_cast<double>(lo);
    const double b = static_cast<double>(hi - 1);
    const double h = 1e-3 * a;
    const double da = (term(a + h) - term(a - h)) / (2 * h);
    const double db = (term(b + h) - term(b - h)) / (2 * h);
    return integrate(term, a, b, 1e-14) + 0.5 * (term(a) + term(b)) + (db - da) / 12.0;
  };
  return detail::dyadic_blocks(block, opt);
}

/// Root of an increasing function on [lo, hi] by bisection to absolute tolerance tol
/// (tol = 0: until lo and hi are adjacent doubles).
template <class F>
double bisect_increasing(F&& f, double target, double lo, double hi, double tol = 1e-12,
                         int max_iter = 400) {
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Poisson(mean) probabilities restricted to a window [first, first + p.size())
/// whose complement has mass at most `tail_mass`.
struct PoissonWindow {
  std::int64_t first = 0;
  std::vector<double> p;
  double tail_mass = 0.0;

  std::int64_t last() const noexcept { return first + static_cast<std::int64_t>(p.size()) - 1; }
};

inline PoissonWindow poisson_window(double mean, double eps = 1e-16) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ArgumentError("poisson mean must be finite and >= 0");
  PoissonWindow w;
  if (mean == 0.0) {
    w.p = {1.0};
    return w;
  }
  const auto mode = static_cast<std::int64_t>(std::floor(mean));
  auto log_pmf = [&](std::int64_t n) {
    const double dn = static_cast<double>(n);
    return dn * std::log(mean) - mean - std::lgamma(dn + 1.0);
  };
  const double pm = std::exp(log_pmf(mode));
  std::vector<double> up;  // mode+1, mode+2, ...
  double tail_up = 0.0;
  {
    double p = pm;
    for (std::int64_t n = mode + 1;; ++n) {
      p *= mean / static_cast<double>(n);
      // tail beyond n is at most p * r / (1 - r) with r = mean / (n + 1)
      const double r = mean / static_cast<double>(n + 1);
      up.push_back(p);
      const double rest = p * r / (1.0 - r);
      if (rest < 0.5 * eps) {
        tail_up = rest;
        break;
      }
    }
  }
  std::vector<double> down;  // mode-1, mode-2, ...
  double tail_down = 0.0;
  {
    double p = pm;
    for (std::int64_t n = mode; n > 0; --n) {
      p *= static_cast<double>(n) / mean;  // pmf(n-1)
      down.push_back(p);
      const double r = static_cast<double>(n - 1) / mean;
      const double rest = r < 1.0 ? p * r / (1.0 - r) : std::numeric_limits<double>::infinity();
      if (rest < 0.5 * eps) {
        tail_down = rest;
        break;
      }
    }
  }
  w.first = mode - static_cast<std::int64_t>(down.size());
  w.p.reserve(down.size() + 1 + up.size());
  for (auto it = down.rbegin(); it != down.rend(); ++it) w.p.push_back(*it);
  w.p.push_back(pm);
  w.p.insert(w.p.end(), up.begin(), up.end());
  w.tail_mass = tail_up + tail_down;
  return w;
}

}  // namespace whoeffding
