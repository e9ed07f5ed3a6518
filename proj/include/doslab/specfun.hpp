#pragma once

// Special functions and 1-D numerical routines shared by the solvers.

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "doslab/errors.hpp"

namespace doslab {

struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_iter = 200;

  void validate() const;
};

/// E1(x) = \int_x^\infty e^{-t}/t dt for x > 0. Returns 0 once e^{-x}
/// underflows (x beyond ~745).
double exp_integral_e1(double x);

/// e^x E1(x), evaluated without forming e^x. Finite for every x > 0.
double scaled_e1(double x);

/// Bisection root of f on [lo, hi] (either order). The interval must carry a
/// sign change. Stops when the bracket is narrower than tol.abs_tol or f hits
/// an exact zero; the midpoint of the last bracket is returned.
template <class F>
double find_root(F&& f, double lo, double hi, const Tolerance& tol = {}) {
  tol.validate();
  if (!(std::isfinite(lo) && std::isfinite(hi))) {
    throw DomainError("find_root: non-finite bracket");
  }
  if (hi < lo) std::swap(lo, hi);
  double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (std::signbit(f_lo) == std::signbit(f_hi) || std::isnan(f_lo) ||
      std::isnan(f_hi)) {
    std::ostringstream msg;
    msg << "find_root: no sign change on [" << lo << ", " << hi
        << "] (f = " << f_lo << ", " << f_hi << ")";
    throw BracketError(msg.str());
  }
  for (int it = 0; it < tol.max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (hi - lo <= tol.abs_tol || mid <= lo || mid >= hi) return mid;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  throw ConvergenceError("find_root: iteration cap reached", lo + 0.5 * (hi - lo));
}

struct Maximum {
  double argmax;
  double value;
};

inline constexpr std::size_t kDefaultMaximizeGrid = 1024;

/// Global-ish maximizer: evaluates f on an evenly spaced grid of `grid_points`
/// (>= 1024) including both ends, then golden-section refines between the
/// neighbours of the best grid point.
template <class F>
Maximum maximize_1d(F&& f, double lo, double hi, const Tolerance& tol = {},
                    std::size_t grid_points = kDefaultMaximizeGrid) {
  tol.validate();
  if (!(lo < hi)) throw DomainError("maximize_1d: need lo < hi");
  if (grid_points < kDefaultMaximizeGrid) {
    throw DomainError("maximize_1d: grid must have at least 1024 points");
  }
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  auto at = [&](std::size_t i) {
    return i + 1 == grid_points ? hi : lo + step * static_cast<double>(i);
  };
  auto checked = [&](double s) {
    const double v = f(s);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "maximize_1d: objective is " << v << " at " << s;
      throw EvaluationError(msg.str(), s);
    }
    return v;
  };

  std::size_t best_i = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double v = checked(at(i));
    if (v > best_v) {
      best_v = v;
      best_i = i;
    }
  }
  Maximum best{at(best_i), best_v};

  double a = at(best_i == 0 ? 0 : best_i - 1);
  double b = at(best_i + 1 == grid_points ? best_i : best_i + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = checked(c);
  double fd = checked(d);
  for (int it = 0; it < tol.max_iter && (b - a) > tol.abs_tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = checked(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = checked(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double f_mid = checked(mid);
  if (f_mid > best.value) best = {mid, f_mid};
  if (fc > best.value) best = {c, fc};
  if (fd > best.value) best = {d, fd};
  return best;
}

}  // namespace doslab
