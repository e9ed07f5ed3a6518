#pragma once

// Monte Carlo renewal-reward simulator for the threshold protocol.
//
// One episode: contend (K ~ Geometric(p_s) mini-slots), probe the estimate,
// repeat until the policy accepts, then transmit for T. Throughput is
// total reward over total time across episodes.

#include <cstdint>
#include <functional>
#include <variant>

#include "doslab/channel.hpp"
#include "doslab/threshold.hpp"

namespace doslab {

using SchedulingPolicy = std::variant<LinearBackoffPolicy, GeneralBackoffPolicy, PerfectCsiPolicy>;

struct SimConfig {
  ChannelParams channel;
  ContentionParams contention;
  SchedulingPolicy policy;
  std::uint64_t num_transmissions = 100000;
  std::uint64_t seed = 0;
  int num_replications = 1;
  /// Expected probes per episode above which the run is refused.
  double max_expected_probes = 1e7;

  void validate() const;
};

struct SimReport {
  double empirical_throughput = 0.0;
  /// 95% normal-approximation half-width across replications; 0 for one run.
  double ci_halfwidth_95 = 0.0;
  double outage_fraction = 0.0;
  double mean_probes_per_transmission = 0.0;
  std::uint64_t total_rounds = 0;
  std::uint64_t transmissions = 0;
  int replications = 0;

  bool operator==(const SimReport&) const = default;
};

/// Per-episode record, for observers in tests and diagnostics.
struct Episode {
  std::uint64_t probes;
  std::uint64_t rounds;
  double lambda_hat;        // accepted estimate (normalized)
  double estimated_snr;     // rho_eff * lambda_hat (rho * lambda_hat for perfect CSI)
  double actual_snr;
  double nominated_snr;
  double reward;            // T * rate, or 0 on outage
  double time;              // sum K_j tau + T
  bool outage;
};

using EpisodeObserver = std::function<void(const Episode&)>;

/// Expected probes per transmission implied by the policy (e^{lambda'}).
/// +infinity when no estimate passes.
double expected_probes(const SimConfig& cfg);

/// One replication on RngStream(cfg.seed, stream_id).
SimReport run_simulation(const SimConfig& cfg, std::uint64_t stream_id = 0,
                         const EpisodeObserver& observer = {});

/// cfg.num_replications independent runs on streams 0..n-1, reduced in
/// index order. Serial and parallel execution give identical bits.
SimReport run_replications(const SimConfig& cfg, Execution exec = Execution::kParallel);

}  // namespace doslab
