#include "doslab/channel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "doslab/errors.hpp"

namespace doslab {

SnrConvention parse_snr_convention(std::string_view name) {
  if (name == "physical") return SnrConvention::kPhysical;
  if (name == "tabulated") return SnrConvention::kTabulated;
  throw DomainError("unknown SNR convention '" + std::string(name) +
                    "' (expected physical or tabulated)");
}

std::string_view to_string(SnrConvention convention) {
  return convention == SnrConvention::kPhysical ? "physical" : "tabulated";
}

ChannelParams::ChannelParams(double rho, double beta)
    : rho_(rho), beta_(beta), alpha_(beta / (1.0 - beta)), rho_eff_((1.0 - beta) * rho) {}

ChannelParams ChannelParams::from_beta(double rho, double beta) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw DomainError("ChannelParams: rho must be finite and > 0");
  }
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw DomainError("ChannelParams: beta must lie in [0, 1)");
  }
  return ChannelParams(rho, beta);
}

ChannelParams ChannelParams::from_alpha(double rho, double alpha,
                                        SnrConvention convention) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DomainError("ChannelParams: alpha must be finite and >= 0");
  }
  const double beta = alpha / (1.0 + alpha);
  if (convention == SnrConvention::kTabulated) {
    const double scale = 1.0 + alpha;
    return from_beta(rho * scale * scale, beta);
  }
  return from_beta(rho, beta);
}

double contention_success_prob(std::span<const double> access_probs) {
  if (access_probs.empty()) {
    throw DomainError("contention_success_prob: need at least one link");
  }
  for (double p : access_probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError("contention_success_prob: access probability outside [0, 1]");
    }
  }
  // prefix[m] = Prod_{i<m}(1-p_i); suffix accumulated on the way back.
  const std::size_t n = access_probs.size();
  std::vector<double> prefix(n + 1, 1.0);
  for (std::size_t m = 0; m < n; ++m) prefix[m + 1] = prefix[m] * (1.0 - access_probs[m]);
  double suffix = 1.0;
  double total = 0.0;
  for (std::size_t m = n; m-- > 0;) {
    total += access_probs[m] * prefix[m] * suffix;
    suffix *= 1.0 - access_probs[m];
  }
  return total;
}

ContentionParams::ContentionParams(std::vector<double> probs, double p_s, double tau,
                                   double T)
    : access_probs_(std::move(probs)), p_s_(p_s), tau_(tau), T_(T) {}

namespace {
void check_durations(double tau, double T) {
  if (!(tau > 0.0) || !std::isfinite(tau) || !(T > 0.0) || !std::isfinite(T)) {
    throw DomainError("ContentionParams: tau and T must be finite and > 0");
  }
}
}  // namespace

ContentionParams ContentionParams::from_access_probs(std::vector<double> access_probs,
                                                     double tau, double T) {
  check_durations(tau, T);
  const double p_s = contention_success_prob(access_probs);
  return ContentionParams(std::move(access_probs), p_s, tau, T);
}

ContentionParams ContentionParams::homogeneous(int links, double p, double tau, double T) {
  if (links < 1) throw DomainError("ContentionParams: need at least one link");
  return from_access_probs(std::vector<double>(static_cast<std::size_t>(links), p), tau, T);
}

ContentionParams ContentionParams::from_success_prob(double p_s, double delta) {
  if (!(p_s > 0.0 && p_s <= 1.0)) {
    throw DomainError("ContentionParams: p_s must lie in (0, 1]");
  }
  check_durations(delta, 1.0);
  return ContentionParams({}, p_s, delta, 1.0);
}

void ContentionParams::require_solvable() const {
  if (!(p_s_ > 0.0 && p_s_ <= 1.0)) {
    throw DomainError("contention success probability must lie in (0, 1]");
  }
}

double beta_from_training(double rho, double tau_train) {
  if (!(rho > 0.0)) throw DomainError("beta_from_training: rho must be > 0");
  if (!(tau_train > 0.0)) throw DomainError("beta_from_training: training time must be > 0");
  return 1.0 / (rho * tau_train + 1.0);
}

namespace {
void require_noisy(const ChannelParams& ch, const char* who) {
  if (!(ch.alpha() > 0.0)) {
    throw DomainError(std::string(who) + ": requires alpha > 0 (use the perfect-CSI path)");
  }
}
}  // namespace

double success_prob_given_estimate(double lambda_c, double lambda_hat,
                                   const ChannelParams& ch) {
  require_noisy(ch, "success_prob_given_estimate");
  if (!(lambda_c > 0.0)) throw DomainError("success_prob_given_estimate: lambda_c must be > 0");
  if (!(lambda_hat >= 0.0)) {
    throw DomainError("success_prob_given_estimate: lambda_hat must be >= 0");
  }
  const double exponent = (lambda_hat / lambda_c - 1.0 / ch.rho_eff()) / ch.alpha();
  if (!(exponent > 0.0)) return 0.0;
  return -std::expm1(-exponent);
}

double conditional_snr_density(double lambda, double lambda_hat, const ChannelParams& ch) {
  require_noisy(ch, "conditional_snr_density");
  if (!(lambda > 0.0) || !(lambda_hat > 0.0)) {
    throw DomainError("conditional_snr_density: lambda and lambda_hat must be > 0");
  }
  const double gap = lambda_hat / lambda - 1.0 / ch.rho_eff();
  if (gap < 0.0) return 0.0;
  // Log form keeps the lambda -> 0 tail at 0 instead of inf * 0.
  return std::exp(std::log(lambda_hat / ch.alpha()) - 2.0 * std::log(lambda) - gap / ch.alpha());
}

double expected_rate_bar(double lambda_hat, double lambda_c, const ChannelParams& ch) {
  require_noisy(ch, "expected_rate_bar");
  if (!(lambda_c >= 0.0)) throw DomainError("expected_rate_bar: lambda_c must be >= 0");
  if (lambda_c == 0.0) return 0.0;
  return std::log1p(lambda_c) * success_prob_given_estimate(lambda_c, lambda_hat, ch);
}

namespace {
std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
  for (std::uint64_t i = 0; i < stream_id; ++i) jump();
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

void RngStream::jump() noexcept {
  static constexpr std::array<std::uint64_t, 4> kJump = {
      0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL, 0xa9582618e03fc9aaULL,
      0x39abdc4529b1661cULL};
  std::array<std::uint64_t, 4> acc{};
  for (std::uint64_t word : kJump) {
    for (int b = 0; b < 64; ++b) {
      if (word & (std::uint64_t{1} << b)) {
        for (int i = 0; i < 4; ++i) acc[i] ^= s_[i];
      }
      next_u64();
    }
  }
  s_ = acc;
}

double sample_estimate(RngStream& rng) { return -std::log(rng.uniform()); }

double sample_error(RngStream& rng) { return -std::log(rng.uniform()); }

std::uint64_t sample_contention(double p_s, RngStream& rng) {
  if (!(p_s > 0.0 && p_s <= 1.0)) {
    throw DomainError("sample_contention: p_s must lie in (0, 1]");
  }
  if (p_s == 1.0) return 1;
  const double k = std::ceil(std::log(rng.uniform()) / std::log1p(-p_s));
  return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
}

}  // namespace doslab
