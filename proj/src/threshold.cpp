#include "doslab/threshold.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doslab/errors.hpp"

namespace doslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp(-x) is zero in double precision beyond this.
constexpr double kUnderflowExponent = 745.2;
constexpr int kMaxDoublings = 60;

void require_noisy(const ChannelParams& ch, const char* who) {
  if (!(ch.alpha() > 0.0)) {
    throw DomainError(std::string(who) + ": requires alpha > 0 (use the perfect-CSI path)");
  }
}

void require_threshold(double x, const char* who) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(who) + ": threshold must be finite and >= 0");
  }
}

// Success factor of the linear policy, constant in lambda_hat:
// 1 - exp{-(1/sigma - 1) / (alpha rho_eff)}.
double linear_success_factor(double sigma, const ChannelParams& ch) {
  return -std::expm1(-(1.0 / sigma - 1.0) / (ch.alpha() * ch.rho_eff()));
}

// Root of g on [0, B]: g(0) > 0 is known, B starts at `start` and doubles
// until g(B) < 0.
template <class G>
double solve_decreasing_gap(G&& g, double start, const Tolerance& tol, const char* who) {
  double hi = start;
  for (int i = 0; g(hi) >= 0.0; ++i) {
    if (i == kMaxDoublings) {
      throw SolverError(std::string(who) + ": failed to bracket the fixed point");
    }
    hi *= 2.0;
  }
  return find_root(g, 0.0, hi, tol);
}

}  // namespace

void LinearBackoffPolicy::validate() const {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw DomainError("LinearBackoffPolicy: sigma must lie in [0, 1]");
  }
  require_threshold(threshold_x, "LinearBackoffPolicy");
}

void PerfectCsiPolicy::validate() const { require_threshold(threshold_x, "PerfectCsiPolicy"); }

GeneralBackoffPolicy::GeneralBackoffPolicy(BackoffFn lambda_c, double threshold_x,
                                           const ChannelParams& ch)
    : fn_(std::move(lambda_c)), threshold_x_(threshold_x) {
  if (!fn_) throw PolicyError("GeneralBackoffPolicy: empty backoff function");
  require_noisy(ch, "GeneralBackoffPolicy");
  require_threshold(threshold_x, "GeneralBackoffPolicy");
  constexpr int kChecks = 801;
  constexpr double kSpan = 40.0;
  double prev = 0.0;
  for (int i = 0; i < kChecks; ++i) {
    const double lh = kSpan * i / (kChecks - 1);
    const double lc = fn_(lh);
    if (!(lc >= 0.0) || !std::isfinite(lc)) {
      std::ostringstream msg;
      msg << "GeneralBackoffPolicy: lambda_c(" << lh << ") = " << lc << " is not >= 0";
      throw PolicyError(msg.str());
    }
    const double r = expected_rate_bar(lh, lc, ch);
    if (r < prev - 1e-12 * std::max(1.0, prev)) {
      std::ostringstream msg;
      msg << "GeneralBackoffPolicy: expected rate decreases near lambda_hat = " << lh;
      throw PolicyError(msg.str());
    }
    prev = std::max(prev, r);
  }
}

// --- perfect CSI -----------------------------------------------------------

double solve_perfect_csi(double rho, double delta, double p_s, const Tolerance& tol) {
  if (!(rho > 0.0) || !(delta > 0.0) || !(p_s > 0.0 && p_s <= 1.0)) {
    throw DomainError("solve_perfect_csi: need rho > 0, delta > 0, 0 < p_s <= 1");
  }
  // e^{1/rho} E1(e^x/rho) = exp(-expm1(x)/rho) * scaled_e1(e^x/rho)
  auto gap = [&](double x) {
    const double arg = std::exp(x) / rho;
    return p_s / delta * std::exp(-std::expm1(x) / rho) * scaled_e1(arg) - x;
  };
  return solve_decreasing_gap(gap, 1.0, tol, "solve_perfect_csi");
}

double phi_perfect(double x, double rho, const ContentionParams& cont) {
  require_threshold(x, "phi_perfect");
  if (!(rho > 0.0)) throw DomainError("phi_perfect: rho must be > 0");
  cont.require_solvable();
  const double lp = std::expm1(x) / rho;
  if (!(lp < kUnderflowExponent)) return 0.0;
  const double pass = std::exp(-lp);
  return pass * (x + scaled_e1(lp + 1.0 / rho)) / (cont.overhead() + pass);
}

// --- linear backoff --------------------------------------------------------

double lambda_hat_prime_linear(double x, double sigma, const ChannelParams& ch) {
  require_noisy(ch, "lambda_hat_prime_linear");
  require_threshold(x, "lambda_hat_prime_linear");
  if (!(sigma > 0.0 && sigma <= 1.0)) {
    throw DomainError("lambda_hat_prime_linear: sigma must lie in (0, 1]");
  }
  if (sigma == 1.0) return kInf;
  const double c = linear_success_factor(sigma, ch);
  if (!(c > 0.0)) return kInf;
  const double t = x / c;
  if (!(t < 709.0)) return kInf;
  const double lp = std::expm1(t) / (sigma * ch.rho_eff());
  return std::isfinite(lp) ? lp : kInf;
}

FractionalTerms linear_terms(double x, double sigma, const ChannelParams& ch,
                             const ContentionParams& cont) {
  require_noisy(ch, "linear_terms");
  require_threshold(x, "linear_terms");
  cont.require_solvable();
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw DomainError("linear_terms: sigma must lie in [0, 1]");
  }
  const double overhead = cont.overhead();
  if (sigma == 0.0 || sigma == 1.0) return {0.0, overhead};
  const double lp = lambda_hat_prime_linear(x, sigma, ch);
  if (!(lp < kUnderflowExponent)) return {0.0, overhead};
  const double c = linear_success_factor(sigma, ch);
  const double a = sigma * ch.rho_eff();
  const double pass = std::exp(-lp);
  // c [log(1 + a lp) e^{-lp} + e^{1/a} E1(lp + 1/a)], with the second term
  // rewritten as e^{-lp} scaled_e1(lp + 1/a).
  const double u = c * pass * (std::log1p(a * lp) + scaled_e1(lp + 1.0 / a));
  return {u, overhead + pass};
}

double phi_linear(double x, double sigma, const ChannelParams& ch,
                  const ContentionParams& cont) {
  const auto [u, v] = linear_terms(x, sigma, ch, cont);
  return u / v;
}

namespace {
void require_interior_sigma(double sigma, const char* who) {
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw DomainError(std::string(who) + ": sigma must lie in (0, 1)");
  }
}
}  // namespace

double dinkelbach_u(double sigma, double x, const ChannelParams& ch,
                    const ContentionParams& cont) {
  require_interior_sigma(sigma, "dinkelbach_u");
  return linear_terms(x, sigma, ch, cont).u;
}

double dinkelbach_v(double sigma, double x, const ChannelParams& ch,
                    const ContentionParams& cont) {
  require_interior_sigma(sigma, "dinkelbach_v");
  return linear_terms(x, sigma, ch, cont).v;
}

double solve_fixed_point_linear(double sigma, const ChannelParams& ch,
                                const ContentionParams& cont, const Tolerance& tol) {
  if (!(sigma > 0.0 && sigma < 1.0)) {
    // Both ends nominate nothing that can succeed; Phi is identically zero.
    if (sigma == 0.0 || sigma == 1.0) return 0.0;
    throw DomainError("solve_fixed_point_linear: sigma must lie in [0, 1]");
  }
  const double phi0 = phi_linear(0.0, sigma, ch, cont);
  if (phi0 == 0.0) return 0.0;
  auto gap = [&](double x) { return phi_linear(x, sigma, ch, cont) - x; };
  return solve_decreasing_gap(gap, phi0 + 1.0, tol, "solve_fixed_point_linear");
}

// --- general backoff -------------------------------------------------------

namespace {

double general_rate(double lambda_hat, const GeneralBackoffPolicy::BackoffFn& fn,
                    const ChannelParams& ch) {
  const double lc = fn(lambda_hat);
  if (!(lc >= 0.0) || !std::isfinite(lc)) {
    std::ostringstream msg;
    msg << "backoff function returned " << lc << " at lambda_hat = " << lambda_hat;
    throw PolicyError(msg.str());
  }
  return expected_rate_bar(lambda_hat, lc, ch);
}

}  // namespace

std::optional<double> lambda_hat_prime_general(double x,
                                               const GeneralBackoffPolicy::BackoffFn& lambda_c,
                                               const ChannelParams& ch, const Tolerance& tol) {
  require_noisy(ch, "lambda_hat_prime_general");
  require_threshold(x, "lambda_hat_prime_general");
  auto rate = [&](double lh) { return general_rate(lh, lambda_c, ch); };

  double prev = rate(0.0);
  if (prev >= x) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  for (;;) {
    const double r = rate(hi);
    if (r < prev - 1e-12 * std::max(1.0, prev)) {
      std::ostringstream msg;
      msg << "expected rate is not monotone: R(" << lo << ") = " << prev << " > R(" << hi
          << ") = " << r;
      throw PolicyError(msg.str());
    }
    if (r >= x) break;
    // Past this point the estimate never occurs in double precision.
    if (hi > kUnderflowExponent) return std::nullopt;
    prev = r;
    lo = hi;
    hi *= 2.0;
  }
  return find_root([&](double lh) { return rate(lh) - x; }, lo, hi, tol);
}

double phi_general(double x, const GeneralBackoffPolicy& policy, const ChannelParams& ch,
                   const ContentionParams& cont, const QuadratureOptions& quad) {
  cont.require_solvable();
  const auto lp = lambda_hat_prime_general(x, policy.function(), ch);
  if (!lp || *lp >= kUnderflowExponent) return 0.0;
  const double u_max = std::exp(-*lp);

  // Shifted to t = lambda_hat - lambda' so the weight e^{-t} starts at 1.
  // Geometric panels [0,1], [1,2], [2,4], ... up to t = 64 keep any kink in
  // the policy inside a finite interval; the remainder is below e^{-64}.
  auto integrand = [&](double t) {
    return std::exp(-t) * general_rate(*lp + t, policy.function(), ch);
  };
  double shifted = 0.0;
  double error = 0.0;
  double a = 0.0;
  for (double b = 1.0; b <= 64.0; b *= 2.0) {
    double panel_error = 0.0;
    shifted += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, a, b, quad.max_depth, 1e-9, &panel_error);
    error += panel_error;
    a = b;
  }
  double tail_error = 0.0;
  shifted += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, a, kInf, 5, 1e-9, &tail_error);
  error += tail_error;
  const double numerator = u_max * shifted;
  if (!(u_max * error <= quad.abs_tol) || !std::isfinite(numerator)) {
    std::ostringstream msg;
    msg << "phi_general: quadrature error estimate " << u_max * error << " exceeds "
        << quad.abs_tol;
    throw SolverError(msg.str());
  }
  return numerator / (cont.overhead() + u_max);
}

double solve_fixed_point_general(const GeneralBackoffPolicy& policy, const ChannelParams& ch,
                                 const ContentionParams& cont, const Tolerance& tol) {
  const double phi0 = phi_general(0.0, policy, ch, cont);
  if (phi0 == 0.0) return 0.0;
  auto gap = [&](double x) { return phi_general(x, policy, ch, cont) - x; };
  return solve_decreasing_gap(gap, phi0 + 1.0, tol, "solve_fixed_point_general");
}

// --- optimisation and studies ----------------------------------------------

namespace {

SolverTrace optimize_perfect(const ChannelParams& ch, const ContentionParams& cont,
                             const OptimizeOptions& opts) {
  SolverTrace trace;
  trace.iterates.push_back({0, opts.x0, std::nullopt});
  double x = opts.x0;
  for (int k = 1; k <= opts.max_iter; ++k) {
    const double next = phi_perfect(x, ch.rho(), cont);
    trace.iterates.push_back({k, next, 1.0});
    if (std::abs(next - x) <= opts.eps) {
      trace.converged = true;
      trace.sigma_star = 1.0;
      trace.x_star = solve_perfect_csi(ch.rho(), cont.delta(), cont.p_s(), opts.inner);
      return trace;
    }
    x = next;
  }
  trace.x_star = x;
  trace.sigma_star = 1.0;
  throw NonConvergenceError("optimize_backoff: iteration cap reached", std::move(trace));
}

}  // namespace

SolverTrace optimize_backoff(const ChannelParams& ch, const ContentionParams& cont,
                             const OptimizeOptions& opts) {
  if (!(opts.x0 > 0.0) || !std::isfinite(opts.x0)) {
    throw DomainError("optimize_backoff: x0 must be finite and > 0");
  }
  if (!(opts.eps > 0.0)) throw DomainError("optimize_backoff: eps must be > 0");
  if (opts.max_iter < 1) throw DomainError("optimize_backoff: max_iter must be >= 1");
  if (!(0.0 < opts.sigma_lo && opts.sigma_lo < opts.sigma_hi && opts.sigma_hi < 1.0)) {
    throw DomainError("optimize_backoff: need 0 < sigma_lo < sigma_hi < 1");
  }
  cont.require_solvable();
  if (ch.perfect_csi()) return optimize_perfect(ch, cont, opts);

  SolverTrace trace;
  trace.iterates.push_back({0, opts.x0, std::nullopt});
  double x = opts.x0;
  for (int k = 1; k <= opts.max_iter; ++k) {
    auto objective = [&](double sigma) {
      const auto [u, v] = linear_terms(x, sigma, ch, cont);
      return u - x * v;
    };
    const double sigma =
        maximize_1d(objective, opts.sigma_lo, opts.sigma_hi, opts.inner, opts.grid_points).argmax;
    const auto [u, v] = linear_terms(x, sigma, ch, cont);
    const double next = u / v;
    trace.iterates.push_back({k, next, sigma});
    trace.x_star = next;
    trace.sigma_star = sigma;
    if (std::abs(next - x) <= opts.eps) {
      trace.converged = true;
      return trace;
    }
    x = next;
  }
  throw NonConvergenceError("optimize_backoff: iteration cap reached", std::move(trace));
}

GainResult throughput_gain(const ChannelParams& ch, const ContentionParams& cont,
                           const OptimizeOptions& opts) {
  const SolverTrace trace = optimize_backoff(ch, cont, opts);
  const double x_l = ch.perfect_csi() ? phi_perfect(0.0, ch.rho(), cont)
                                      : phi_linear(0.0, trace.sigma_star, ch, cont);
  return {trace.x_star, trace.sigma_star, x_l, (trace.x_star - x_l) / x_l};
}

TrainingSweep sweep_training_time(double rho, double T, const std::vector<double>& tau_grid,
                                  double p_s, SnrConvention convention,
                                  const OptimizeOptions& opts, Execution exec) {
  if (!(rho > 0.0) || !(T > 0.0)) throw DomainError("sweep_training_time: need rho, T > 0");
  if (tau_grid.empty()) throw DomainError("sweep_training_time: empty tau grid");
  for (double tau : tau_grid) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      throw DomainError("sweep_training_time: training times must be finite and > 0");
    }
  }

  TrainingSweep sweep;
  sweep.points.resize(tau_grid.size());
  std::vector<std::exception_ptr> failures(tau_grid.size());
  auto evaluate = [&](std::size_t i) {
    try {
      const double tau = tau_grid[i];
      const double beta = beta_from_training(rho, tau);
      const ChannelParams ch = convention == SnrConvention::kPhysical
                                   ? ChannelParams::from_beta(rho, beta)
                                   : ChannelParams::from_alpha(rho, beta / (1.0 - beta), convention);
      const auto cont = ContentionParams::from_success_prob(p_s, tau / T);
      const SolverTrace trace = optimize_backoff(ch, cont, opts);
      sweep.points[i] = {tau, beta, trace.x_star, trace.sigma_star};
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const auto n = static_cast<std::ptrdiff_t>(tau_grid.size());
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) evaluate(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) evaluate(static_cast<std::size_t>(i));
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  const TrainingPoint* best = &sweep.points.front();
  for (const auto& p : sweep.points) {
    if (p.x_star > best->x_star) best = &p;
  }
  sweep.tau_best = best->tau;
  return sweep;
}

}  // namespace doslab
