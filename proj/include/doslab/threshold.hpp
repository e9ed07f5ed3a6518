#pragma once

// Analytic throughput solvers for distributed opportunistic scheduling.
//
// For a backoff function lambda_c(.) and threshold x, a link transmits on the
// first probe whose conditional expected rate R-bar(lambda_hat) reaches x. The
// resulting throughput is
//
//   Phi(x) = \int_{lambda'}^\infty e^{-l} R-bar(l) dl / (delta/p_s + e^{-lambda'}),
//
// where lambda' is the smallest estimate with R-bar >= x. The optimal
// threshold is the fixed point x* = Phi(x*).

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "doslab/channel.hpp"
#include "doslab/specfun.hpp"

namespace doslab {

/// lambda_c(lambda_hat) = sigma * rho_eff * lambda_hat.
struct LinearBackoffPolicy {
  double sigma;
  double threshold_x;

  void validate() const;
};

/// Stop when log(1 + rho lambda_hat) >= threshold_x; no outage.
struct PerfectCsiPolicy {
  double threshold_x;

  void validate() const;
};

/// Caller-supplied nominated-SNR function. Construction checks that
/// lambda_c >= 0 and that the induced R-bar is nondecreasing on a grid.
class GeneralBackoffPolicy {
 public:
  using BackoffFn = std::function<double(double)>;

  GeneralBackoffPolicy(BackoffFn lambda_c, double threshold_x, const ChannelParams& ch);

  double lambda_c(double lambda_hat) const { return fn_(lambda_hat); }
  const BackoffFn& function() const noexcept { return fn_; }
  double threshold_x() const noexcept { return threshold_x_; }

 private:
  BackoffFn fn_;
  double threshold_x_;
};

/// The two pieces of Phi = U / V for the linear policy.
struct FractionalTerms {
  double u;
  double v;
};

struct SolverTrace {
  struct Iterate {
    int k;
    double x;
    /// Backoff ratio that produced x; empty for the seed row k = 0.
    std::optional<double> sigma;
  };

  std::vector<Iterate> iterates;
  bool converged = false;
  double sigma_star = 0.0;
  double x_star = 0.0;
};

/// Raised when the backoff optimizer hits its iteration cap.
class NonConvergenceError : public ConvergenceError {
 public:
  NonConvergenceError(const std::string& what, SolverTrace trace)
      : ConvergenceError(what, trace.x_star), trace_(std::move(trace)) {}
  const SolverTrace& trace() const noexcept { return trace_; }

 private:
  SolverTrace trace_;
};

struct OptimizeOptions {
  double x0 = 0.5;
  double eps = 1e-6;
  int max_iter = 100;
  double sigma_lo = 1e-4;
  double sigma_hi = 1.0 - 1e-4;
  std::size_t grid_points = kDefaultMaximizeGrid;
  Tolerance inner{};
};

// --- perfect CSI -----------------------------------------------------------

/// Unique root of x = e^{1/rho} E1(e^x / rho) p_s / delta.
double solve_perfect_csi(double rho, double delta, double p_s, const Tolerance& tol = {});

/// Throughput of the perfect-CSI threshold policy at threshold x.
double phi_perfect(double x, double rho, const ContentionParams& cont);

// --- linear backoff --------------------------------------------------------

/// Estimate-domain threshold for the linear policy; +infinity when no
/// estimate can reach x (sigma = 1, or overflow).
double lambda_hat_prime_linear(double x, double sigma, const ChannelParams& ch);

/// U and V evaluated together. sigma in [0, 1]; both ends give U = 0.
FractionalTerms linear_terms(double x, double sigma, const ChannelParams& ch,
                             const ContentionParams& cont);

double phi_linear(double x, double sigma, const ChannelParams& ch,
                  const ContentionParams& cont);

double dinkelbach_u(double sigma, double x, const ChannelParams& ch,
                    const ContentionParams& cont);
double dinkelbach_v(double sigma, double x, const ChannelParams& ch,
                    const ContentionParams& cont);

/// x*(sigma): root of Phi(x, sigma) - x on [0, B].
double solve_fixed_point_linear(double sigma, const ChannelParams& ch,
                                const ContentionParams& cont, const Tolerance& tol = {});

// --- general backoff -------------------------------------------------------

struct QuadratureOptions {
  double abs_tol = 1e-10;
  unsigned max_depth = 30;
};

/// Estimate-domain threshold for an arbitrary backoff function, found by
/// bisection on R-bar(lambda_hat) = x. Empty when R-bar never reaches x.
std::optional<double> lambda_hat_prime_general(double x, const GeneralBackoffPolicy::BackoffFn& lambda_c,
                                               const ChannelParams& ch,
                                               const Tolerance& tol = {});

/// Phi(x, lambda_c) by adaptive Gauss-Kronrod quadrature over the half-line.
double phi_general(double x, const GeneralBackoffPolicy& policy, const ChannelParams& ch,
                   const ContentionParams& cont, const QuadratureOptions& quad = {});

/// x*(lambda_c) for an arbitrary backoff function.
double solve_fixed_point_general(const GeneralBackoffPolicy& policy, const ChannelParams& ch,
                                 const ContentionParams& cont, const Tolerance& tol = {});

// --- optimisation and studies ----------------------------------------------

/// Joint optimisation of backoff ratio and threshold by the fractional
/// programming iteration:
///   sigma_{k-1} = argmax_sigma U(sigma, x_{k-1}) - x_{k-1} V(sigma, x_{k-1})
///   x_k         = U(sigma_{k-1}, x_{k-1}) / V(sigma_{k-1}, x_{k-1})
/// until |x_k - x_{k-1}| <= eps. With alpha = 0 the backoff ratio is pinned to
/// 1 and the perfect-CSI fixed point is returned.
SolverTrace optimize_backoff(const ChannelParams& ch, const ContentionParams& cont,
                             const OptimizeOptions& opts = {});

struct GainResult {
  double x_star;
  double sigma_star;
  /// Throughput without opportunistic scheduling: Phi(0, sigma*).
  double x_l;
  /// (x* - x_l) / x_l.
  double gain;
};

GainResult throughput_gain(const ChannelParams& ch, const ContentionParams& cont,
                           const OptimizeOptions& opts = {});

struct TrainingPoint {
  double tau;
  double beta;
  double x_star;
  double sigma_star;
};

struct TrainingSweep {
  std::vector<TrainingPoint> points;
  /// tau with the largest x_star.
  double tau_best = 0.0;
};

enum class Execution { kSerial, kParallel };

/// Throughput as a function of training time: beta = 1/(rho tau + 1) and
/// delta = tau / T at every grid point. Serial and parallel runs return
/// identical results.
TrainingSweep sweep_training_time(double rho, double T, const std::vector<double>& tau_grid,
                                  double p_s, SnrConvention convention = SnrConvention::kTabulated,
                                  const OptimizeOptions& opts = {},
                                  Execution exec = Execution::kParallel);

}  // namespace doslab
