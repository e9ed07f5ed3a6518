#pragma once

// Noisy-estimation channel and random-access contention model.
//
// Per probe the estimated SNR is rho_eff * lambda_hat and the actual SNR is
//   lambda = rho_eff * lambda_hat / (1 + alpha * rho_eff * z),
// with lambda_hat, z ~ Exp(1) independent.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace doslab {

/// How a quoted (rho, alpha) pair maps onto the channel algebra.
///
/// kPhysical: rho is the receiver SNR and rho_eff = (1 - beta) rho.
/// kTabulated: the quoted rho satisfies rho_eff = rho (1 + alpha), i.e.
///   rho_eff = rho / (1 - beta). This is the scaling under which the
///   published throughput tables are computed. Both agree at alpha = 0.
enum class SnrConvention { kPhysical, kTabulated };

SnrConvention parse_snr_convention(std::string_view name);
std::string_view to_string(SnrConvention convention);

class ChannelParams {
 public:
  /// rho > 0, 0 <= beta < 1.
  static ChannelParams from_beta(double rho, double beta);
  /// alpha >= 0; beta = alpha / (1 + alpha).
  static ChannelParams from_alpha(double rho, double alpha,
                                  SnrConvention convention = SnrConvention::kPhysical);

  double rho() const noexcept { return rho_; }
  double beta() const noexcept { return beta_; }
  double alpha() const noexcept { return alpha_; }
  double rho_eff() const noexcept { return rho_eff_; }
  bool perfect_csi() const noexcept { return beta_ == 0.0; }

 private:
  ChannelParams(double rho, double beta);

  double rho_;
  double beta_;
  double alpha_;
  double rho_eff_;
};

/// Sum_m p_m Prod_{i != m} (1 - p_i): probability that exactly one link
/// transmits in a contention mini-slot.
double contention_success_prob(std::span<const double> access_probs);

class ContentionParams {
 public:
  static ContentionParams from_access_probs(std::vector<double> access_probs,
                                            double tau, double T);
  static ContentionParams homogeneous(int links, double p, double tau, double T);
  /// Direct (p_s, delta) form; uses T = 1 and tau = delta. access_probs empty.
  static ContentionParams from_success_prob(double p_s, double delta);

  std::span<const double> access_probs() const noexcept { return access_probs_; }
  double tau() const noexcept { return tau_; }
  double T() const noexcept { return T_; }
  double p_s() const noexcept { return p_s_; }
  double delta() const noexcept { return tau_ / T_; }
  /// delta / p_s, the expected contention overhead per probe in units of T.
  double overhead() const noexcept { return delta() / p_s_; }

  /// Throws DomainError unless 0 < p_s <= 1.
  void require_solvable() const;

 private:
  ContentionParams(std::vector<double> probs, double p_s, double tau, double T);

  std::vector<double> access_probs_;
  double p_s_;
  double tau_;
  double T_;
};

/// Training-time to error-variance relation: beta = 1 / (rho tau + 1).
double beta_from_training(double rho, double tau_train);

/// P(lambda >= lambda_c | lambda_hat) for alpha > 0.
double success_prob_given_estimate(double lambda_c, double lambda_hat,
                                   const ChannelParams& ch);

/// Conditional density f(lambda | lambda_hat), supported on (0, rho_eff lambda_hat].
double conditional_snr_density(double lambda, double lambda_hat,
                               const ChannelParams& ch);

/// R-bar: E[log(1 + lambda_c) 1{lambda_c <= lambda} | lambda_hat].
double expected_rate_bar(double lambda_hat, double lambda_c, const ChannelParams& ch);

/// Reproducible random stream: xoshiro256** seeded from `seed` through
/// splitmix64, advanced by `stream_id` jumps of 2^128 so streams never overlap.
/// Single owner; do not share one stream between threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;

 private:
  void jump() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
};

/// Normalized estimated-channel gain, Exp(1).
double sample_estimate(RngStream& rng);
/// Normalized estimation-error gain, Exp(1).
double sample_error(RngStream& rng);
/// Contention mini-slots until success, Geometric(p_s) on {1, 2, ...}.
std::uint64_t sample_contention(double p_s, RngStream& rng);

}  // namespace doslab
