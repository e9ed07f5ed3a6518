#include "doslab/sim.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <vector>

#include "doslab/errors.hpp"

namespace doslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZ95 = 1.959963984540054;

// Estimated SNR and nominated SNR for an accepted probe, plus R-bar.
struct ProbeDecision {
  double rate_bar;
  double nominated;
};

struct Decider {
  const SimConfig& cfg;

  ProbeDecision operator()(double lambda_hat) const {
    const ChannelParams& ch = cfg.channel;
    return std::visit(
        [&](const auto& policy) -> ProbeDecision {
          using P = std::decay_t<decltype(policy)>;
          if constexpr (std::is_same_v<P, PerfectCsiPolicy>) {
            const double snr = ch.rho() * lambda_hat;
            return {std::log1p(snr), snr};
          } else if constexpr (std::is_same_v<P, LinearBackoffPolicy>) {
            const double lc = policy.sigma * ch.rho_eff() * lambda_hat;
            return {expected_rate_bar(lambda_hat, lc, ch), lc};
          } else {
            const double lc = policy.lambda_c(lambda_hat);
            return {expected_rate_bar(lambda_hat, lc, ch), lc};
          }
        },
        cfg.policy);
  }
};

double threshold_of(const SchedulingPolicy& policy) {
  return std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GeneralBackoffPolicy>) {
          return p.threshold_x();
        } else {
          return p.threshold_x;
        }
      },
      policy);
}

}  // namespace

void SimConfig::validate() const {
  if (num_transmissions < 1) throw DomainError("SimConfig: num_transmissions must be >= 1");
  if (num_replications < 1) throw DomainError("SimConfig: num_replications must be >= 1");
  if (!(max_expected_probes >= 1.0)) throw DomainError("SimConfig: probe cap must be >= 1");
  contention.require_solvable();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PerfectCsiPolicy>) {
          p.validate();
          if (!channel.perfect_csi()) {
            throw DomainError("SimConfig: perfect-CSI policy needs alpha = 0");
          }
        } else {
          if constexpr (std::is_same_v<P, LinearBackoffPolicy>) p.validate();
          if (channel.perfect_csi()) {
            throw DomainError("SimConfig: backoff policies need alpha > 0");
          }
        }
      },
      policy);
}

double expected_probes(const SimConfig& cfg) {
  const ChannelParams& ch = cfg.channel;
  const double x = threshold_of(cfg.policy);
  if (x <= 0.0) return 1.0;
  const double lp = std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, PerfectCsiPolicy>) {
          return std::expm1(x) / ch.rho();
        } else if constexpr (std::is_same_v<P, LinearBackoffPolicy>) {
          if (p.sigma == 0.0) return x > 0.0 ? kInf : 0.0;
          return lambda_hat_prime_linear(x, p.sigma, ch);
        } else {
          const auto found = lambda_hat_prime_general(x, p.function(), ch);
          return found ? *found : kInf;
        }
      },
      cfg.policy);
  return std::exp(lp);
}

SimReport run_simulation(const SimConfig& cfg, std::uint64_t stream_id,
                         const EpisodeObserver& observer) {
  cfg.validate();
  const double probes_needed = expected_probes(cfg);
  if (!(probes_needed <= cfg.max_expected_probes)) {
    std::ostringstream msg;
    msg << "threshold " << threshold_of(cfg.policy) << " needs " << probes_needed
        << " expected probes per transmission (cap " << cfg.max_expected_probes << ")";
    throw StarvationError(msg.str());
  }

  const ChannelParams& ch = cfg.channel;
  const double tau = cfg.contention.tau();
  const double T = cfg.contention.T();
  const double p_s = cfg.contention.p_s();
  const double x = threshold_of(cfg.policy);
  const bool perfect = std::holds_alternative<PerfectCsiPolicy>(cfg.policy);
  const Decider decide{cfg};

  RngStream rng(cfg.seed, stream_id);
  double total_reward = 0.0;
  double total_time = 0.0;
  std::uint64_t total_probes = 0;
  std::uint64_t total_rounds = 0;
  std::uint64_t outages = 0;

  for (std::uint64_t n = 0; n < cfg.num_transmissions; ++n) {
    std::uint64_t probes = 0;
    std::uint64_t rounds = 0;
    double lambda_hat = 0.0;
    ProbeDecision decision{};
    do {
      rounds += sample_contention(p_s, rng);
      lambda_hat = sample_estimate(rng);
      decision = decide(lambda_hat);
      ++probes;
    } while (decision.rate_bar < x);

    Episode ep{};
    ep.probes = probes;
    ep.rounds = rounds;
    ep.lambda_hat = lambda_hat;
    ep.nominated_snr = decision.nominated;
    if (perfect) {
      ep.estimated_snr = decision.nominated;
      ep.actual_snr = decision.nominated;
      ep.outage = false;
    } else {
      const double z = sample_error(rng);
      ep.estimated_snr = ch.rho_eff() * lambda_hat;
      ep.actual_snr = ep.estimated_snr / (1.0 + ch.alpha() * ch.rho_eff() * z);
      ep.outage = decision.nominated > ep.actual_snr;
    }
    ep.reward = ep.outage ? 0.0 : T * std::log1p(decision.nominated);
    ep.time = static_cast<double>(rounds) * tau + T;

    total_reward += ep.reward;
    total_time += ep.time;
    total_probes += probes;
    total_rounds += rounds;
    outages += ep.outage ? 1 : 0;
    if (observer) observer(ep);
  }

  const auto count = static_cast<double>(cfg.num_transmissions);
  SimReport report;
  report.empirical_throughput = total_reward / total_time;
  report.ci_halfwidth_95 = 0.0;
  report.outage_fraction = static_cast<double>(outages) / count;
  report.mean_probes_per_transmission = static_cast<double>(total_probes) / count;
  report.total_rounds = total_rounds;
  report.transmissions = cfg.num_transmissions;
  report.replications = 1;
  return report;
}

SimReport run_replications(const SimConfig& cfg, Execution exec) {
  cfg.validate();
  const int n = cfg.num_replications;
  std::vector<SimReport> runs(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));

  auto replicate = [&](int i) {
    try {
      runs[static_cast<std::size_t>(i)] = run_simulation(cfg, static_cast<std::uint64_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) replicate(i);
  } else {
    for (int i = 0; i < n; ++i) replicate(i);
  }
  for (int i = 0; i < n; ++i) {
    if (const auto& failure = failures[static_cast<std::size_t>(i)]) {
      try {
        std::rethrow_exception(failure);
      } catch (const StarvationError& e) {
        throw StarvationError("replication " + std::to_string(i) + ": " + e.what());
      }
    }
  }

  // Ordered reduction by replication index.
  SimReport out;
  double sum = 0.0;
  double probes = 0.0;
  double outages = 0.0;
  for (const auto& r : runs) {
    sum += r.empirical_throughput;
    const auto count = static_cast<double>(r.transmissions);
    probes += r.mean_probes_per_transmission * count;
    outages += r.outage_fraction * count;
    out.total_rounds += r.total_rounds;
    out.transmissions += r.transmissions;
  }
  const double mean = sum / n;
  double ci = 0.0;
  if (n > 1) {
    double ss = 0.0;
    for (const auto& r : runs) {
      const double d = r.empirical_throughput - mean;
      ss += d * d;
    }
    ci = kZ95 * std::sqrt(ss / (n - 1) / n);
  }
  const auto total = static_cast<double>(out.transmissions);
  out.empirical_throughput = mean;
  out.ci_halfwidth_95 = ci;
  out.outage_fraction = outages / total;
  out.mean_probes_per_transmission = probes / total;
  out.replications = n;
  return out;
}

}  // namespace doslab
