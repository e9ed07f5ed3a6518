#include "doslab/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace doslab {

void Tolerance::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1) {
    throw DomainError("Tolerance: abs_tol, rel_tol must be > 0 and max_iter >= 1");
  }
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxTerms = 1000;

// -gamma - ln x - sum_{k>=1} (-x)^k / (k k!), used for 0 < x <= 1.
double e1_series(double x) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k < kMaxTerms; ++k) {
    term *= -x / k;
    const double contrib = term / k;
    sum += contrib;
    if (std::abs(contrib) < kEps * std::abs(sum)) break;
  }
  return -std::numbers::egamma - std::log(x) - sum;
}

// Modified Lentz evaluation of e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))),
// valid for x > 1.
double scaled_e1_fraction(double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) <= kEps) break;
  }
  return h;
}

void require_positive(double x, const char* who) {
  if (!(x > 0.0)) {
    throw DomainError(std::string(who) + ": argument must be > 0");
  }
}

}  // namespace

double exp_integral_e1(double x) {
  require_positive(x, "exp_integral_e1");
  if (x <= 1.0) return e1_series(x);
  if (std::isinf(x)) return 0.0;
  return scaled_e1_fraction(x) * std::exp(-x);
}

double scaled_e1(double x) {
  require_positive(x, "scaled_e1");
  if (x <= 1.0) return std::exp(x) * e1_series(x);
  if (std::isinf(x)) return 0.0;
  return scaled_e1_fraction(x);
}

}  // namespace doslab
