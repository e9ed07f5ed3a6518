#include "doslab/cli.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "doslab/channel.hpp"
#include "doslab/errors.hpp"
#include "doslab/report.hpp"
#include "doslab/sim.hpp"
#include "doslab/threshold.hpp"

namespace doslab::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a run can be configured with. Config files use the long flag
// names without dashes, e.g. `rho = 1`.
struct RunConfig {
  std::optional<double> rho;
  std::optional<double> alpha;
  std::optional<double> beta;
  double delta = 0.1;
  double ps = std::exp(-1.0);
  std::vector<double> access_probs;
  std::optional<int> links;
  std::optional<double> p;
  std::optional<double> tau;
  std::optional<double> T;
  std::string snr_convention = "tabulated";

  double x0 = 0.5;
  double eps = 1e-6;
  int max_iter = 100;
  std::size_t grid = kDefaultMaximizeGrid;

  std::optional<double> sigma;
  std::optional<double> threshold;
  bool auto_policy = false;
  std::uint64_t episodes = 100000;
  int replications = 1;
  std::uint64_t seed = 0;
  bool serial = false;
  double max_probes = 1e7;

  std::string format = "csv";
  std::string out_path;
  std::string config_path;

  // figure-only
  std::vector<double> rhos;
  std::vector<double> alphas;
  double x = 0.1;
  double x_max = 1.0;
  int points = 101;
  double tau_min = 0.02;
  double tau_max = 10.0;
};

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--config", c.config_path,
                  "key = value file; command-line flags take precedence");
  sub->add_option("--delta", c.delta, "tau / T")->check(CLI::PositiveNumber);
  sub->add_option("--ps", c.ps, "contention success probability")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--snr-convention", c.snr_convention, "tabulated | physical")
      ->check(CLI::IsMember({"tabulated", "physical"}));
  sub->add_option("--format", c.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", c.out_path, "write results to this file instead of stdout");
}

// --rho is checked after config files are merged, not by the parser.
void add_channel(CLI::App* sub, RunConfig& c) {
  sub->add_option("--rho", c.rho, "SNR");
  auto* alpha = sub->add_option("--alpha", c.alpha, "normalized error variance");
  auto* beta = sub->add_option("--beta", c.beta, "estimation error variance");
  alpha->excludes(beta);
}

void add_contention(CLI::App* sub, RunConfig& c) {
  sub->add_option("--access-probs", c.access_probs, "per-link access probabilities")
      ->delimiter(',');
  sub->add_option("--links", c.links, "number of links (homogeneous)");
  sub->add_option("--p", c.p, "access probability per link (homogeneous)");
  sub->add_option("--tau", c.tau, "mini-slot duration");
  sub->add_option("--T", c.T, "data transmission duration");
}

void add_solver(CLI::App* sub, RunConfig& c) {
  sub->add_option("--x0", c.x0, "initial throughput guess");
  sub->add_option("--eps", c.eps, "stop when |x_k - x_{k-1}| <= eps");
  sub->add_option("--max-iter", c.max_iter, "iteration cap");
  sub->add_option("--grid", c.grid, "sigma grid points for the inner argmax");
}

SnrConvention convention_of(const RunConfig& c) { return parse_snr_convention(c.snr_convention); }

ChannelParams channel_of(const RunConfig& c) {
  if (!c.rho) throw UsageError("--rho is required");
  double alpha = c.alpha.value_or(0.0);
  if (c.beta) {
    if (!(*c.beta >= 0.0 && *c.beta < 1.0)) throw DomainError("beta must lie in [0, 1)");
    alpha = *c.beta / (1.0 - *c.beta);
  }
  return ChannelParams::from_alpha(*c.rho, alpha, convention_of(c));
}

ContentionParams contention_of(const RunConfig& c) {
  const bool per_link = !c.access_probs.empty() || c.links || c.p;
  if (!per_link) {
    if (c.tau || c.T) {
      if (!(c.tau && c.T)) throw UsageError("--tau and --T must be given together");
      return ContentionParams::from_success_prob(c.ps, *c.tau / *c.T);
    }
    return ContentionParams::from_success_prob(c.ps, c.delta);
  }
  if (!(c.tau && c.T)) throw UsageError("per-link contention needs --tau and --T");
  if (!c.access_probs.empty()) {
    if (c.links || c.p) throw UsageError("use either --access-probs or --links/--p");
    return ContentionParams::from_access_probs(c.access_probs, *c.tau, *c.T);
  }
  if (!(c.links && c.p)) throw UsageError("--links and --p must be given together");
  return ContentionParams::homogeneous(*c.links, *c.p, *c.tau, *c.T);
}

OptimizeOptions optimize_of(const RunConfig& c) {
  OptimizeOptions o;
  o.x0 = c.x0;
  o.eps = c.eps;
  o.max_iter = c.max_iter;
  o.grid_points = c.grid;
  return o;
}

StudySettings study_of(const RunConfig& c) {
  StudySettings s;
  s.delta = c.delta;
  s.p_s = c.ps;
  s.convention = convention_of(c);
  s.optimize = optimize_of(c);
  return s;
}

void emit(const RunConfig& c, const DataTable& table, std::ostream& out, bool single = false) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (!c.out_path.empty()) {
    file.open(c.out_path);
    if (!file) throw std::ios_base::failure("cannot open " + c.out_path);
    sink = &file;
  }
  sink->imbue(std::locale::classic());
  if (c.format == "json") {
    write_json(table, *sink, single);
  } else {
    write_csv(table, *sink);
  }
  sink->flush();
  if (!*sink) throw std::ios_base::failure("write failed");
}

void cmd_solve_perfect(const RunConfig& c, std::ostream& out) {
  if (!c.rho) throw UsageError("--rho is required");
  const auto cont = contention_of(c);
  const double x = solve_perfect_csi(*c.rho, cont.delta(), cont.p_s());
  emit(c, DataTable{{"x_star"}, {{x}}, 6}, out, true);
}

void cmd_optimize(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto ch = channel_of(c);
  const auto cont = contention_of(c);
  const SolverTrace trace = optimize_backoff(ch, cont, optimize_of(c));
  emit(c, trace_table(trace), out);
  err << "x_star=" << format_fixed(trace.x_star, 6)
      << " sigma_star=" << format_fixed(trace.sigma_star, 6)
      << " iterations=" << trace.iterates.size() - 1
      << (ch.perfect_csi() ? " (perfect CSI)" : "") << '\n';
}

void cmd_table(const RunConfig& c, const std::string& id, std::ostream& out) {
  const StudySettings s = study_of(c);
  if (id == "I" || id == "1") return emit(c, table_one(s), out);
  if (id == "II" || id == "2") return emit(c, table_two(s), out);
  if (id == "III" || id == "3") return emit(c, table_three(s), out);
  if (id == "IV" || id == "4") return emit(c, table_four(s), out);
  throw UsageError("unknown table '" + id + "' (expected I-IV or 1-4)");
}

void cmd_figure(const RunConfig& c, int id, std::ostream& out, std::ostream& err) {
  const StudySettings s = study_of(c);
  const auto& rhos = c.rhos;
  const auto& alphas = c.alphas;
  switch (id) {
    case 1:
      return emit(c,
                  figure_one(s, c.x, rhos.empty() ? 1.0 : rhos.front(),
                             alphas.empty() ? 1.0 : alphas.front(), c.points),
                  out);
    case 2:
      return emit(c,
                  figure_two(s, rhos.empty() ? std::vector<double>{0.5, 1, 2, 5, 10} : rhos,
                             alphas.empty() ? std::vector<double>{1.0} : alphas, c.x_max,
                             c.points),
                  out);
    case 3: {
      const auto grid = alphas.empty() ? log_grid(0.01, 5.0, c.points) : alphas;
      return emit(c, figure_three(s, rhos.empty() ? std::vector<double>{1.0} : rhos, grid), out);
    }
    case 4: {
      if (rhos.empty() || !c.T) {
        throw UsageError("figure 4 needs explicit --rho (repeatable) and --T");
      }
      std::vector<double> best;
      const auto taus = log_grid(c.tau_min, c.tau_max, c.points);
      const auto table = figure_four(s, rhos, *c.T, taus, &best);
      emit(c, table, out);
      for (std::size_t i = 0; i < rhos.size(); ++i) {
        err << "tau_best(rho=" << rhos[i] << ")=" << format_fixed(best[i], 6) << '\n';
      }
      return;
    }
    default:
      throw UsageError("unknown figure " + std::to_string(id) + " (expected 1-4)");
  }
}

void cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto ch = channel_of(c);
  const auto cont = contention_of(c);
  if (c.auto_policy && (c.sigma || c.threshold)) {
    throw UsageError("--auto-policy cannot be combined with --sigma/--threshold");
  }

  std::optional<SolverTrace> optimum;
  auto solved = [&]() -> const SolverTrace& {
    if (!optimum) optimum = optimize_backoff(ch, cont, optimize_of(c));
    return *optimum;
  };

  SchedulingPolicy policy = PerfectCsiPolicy{0.0};
  double analytic = 0.0;
  if (ch.perfect_csi()) {
    if (c.sigma) throw UsageError("--sigma does not apply when alpha = 0");
    const double x = c.threshold ? *c.threshold : solved().x_star;
    policy = PerfectCsiPolicy{x};
    analytic = phi_perfect(x, ch.rho(), cont);
  } else {
    const double sigma = c.sigma ? *c.sigma : solved().sigma_star;
    const double x = c.threshold ? *c.threshold : solved().x_star;
    policy = LinearBackoffPolicy{sigma, x};
    analytic = phi_linear(x, sigma, ch, cont);
    err << "policy sigma=" << format_fixed(sigma, 6) << " threshold=" << format_fixed(x, 6)
        << '\n';
  }

  SimConfig cfg{ch, cont, policy};
  cfg.num_transmissions = c.episodes;
  cfg.seed = c.seed;
  cfg.num_replications = c.replications;
  cfg.max_expected_probes = c.max_probes;
  const SimReport report =
      run_replications(cfg, c.serial ? Execution::kSerial : Execution::kParallel);
  emit(c, sim_report_table(report), out, true);
  err << "analytic_throughput=" << format_fixed(analytic, 6) << '\n';
}

// Fills options the command line left unset from a key = value file.
// Unknown keys are rejected so typos do not pass silently.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::FileError& e) {
    throw UsageError(e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && item.parents.front() != "default" &&
        item.parents.front() != sub->get_name()) {
      throw UsageError("config section '" + item.parents.front() + "' does not match '" +
                       sub->get_name() + "'");
    }
    if (item.name == "config") throw UsageError("config files cannot include other files");
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw UsageError("unknown config key '" + item.name + "'");
    if (opt->count() > 0) continue;
    for (const auto& value : item.inputs) opt->add_result(value);
    opt->run_callback();
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed opportunistic scheduling under noisy channel estimation", "dos_lab"};
  app.require_subcommand(1);

  RunConfig c;
  std::string table_id;
  int figure_id = 0;

  auto* solve = app.add_subcommand("solve-perfect", "perfect-CSI optimal threshold");
  add_common(solve, c);
  solve->add_option("--rho", c.rho, "SNR");
  add_contention(solve, c);

  auto* optimize = app.add_subcommand("optimize", "optimal backoff ratio and threshold");
  add_common(optimize, c);
  add_channel(optimize, c);
  add_contention(optimize, c);
  add_solver(optimize, c);

  auto* table = app.add_subcommand("table", "reproduce a throughput table (I-IV)");
  add_common(table, c);
  add_solver(table, c);
  table->add_option("id", table_id, "I | II | III | IV")->required();

  auto* figure = app.add_subcommand("figure", "dataset for a figure (1-4)");
  add_common(figure, c);
  add_solver(figure, c);
  figure->add_option("id", figure_id, "1 | 2 | 3 | 4")->required();
  figure->add_option("--rho", c.rhos, "SNR values (repeatable)");
  figure->add_option("--alpha", c.alphas, "error variances (repeatable)");
  figure->add_option("--x", c.x, "threshold for figure 1");
  figure->add_option("--x-max", c.x_max, "upper end of the x axis for figure 2");
  figure->add_option("--points", c.points, "grid points")->check(CLI::Range(2, 1000000));
  figure->add_option("--T", c.T, "transmission duration for figure 4");
  figure->add_option("--tau-min", c.tau_min, "smallest training time (figure 4)");
  figure->add_option("--tau-max", c.tau_max, "largest training time (figure 4)");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo throughput of a policy");
  add_common(simulate, c);
  add_channel(simulate, c);
  add_contention(simulate, c);
  add_solver(simulate, c);
  simulate->add_option("--sigma", c.sigma, "backoff ratio (default: optimised)");
  simulate->add_option("--threshold", c.threshold, "stopping threshold (default: optimised)");
  simulate->add_flag("--auto-policy", c.auto_policy, "use the optimised ratio and threshold");
  simulate->add_option("--episodes", c.episodes, "transmissions per replication")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--replications", c.replications, "independent replications")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", c.seed, "64-bit seed")->envname("DOS_LAB_SEED");
  simulate->add_flag("--serial", c.serial, "run replications serially");
  simulate->add_option("--max-probes", c.max_probes,
                       "refuse thresholds needing more expected probes per transmission");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (!c.config_path.empty()) apply_config_file(chosen, c.config_path);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*solve) {
      cmd_solve_perfect(c, out);
    } else if (*optimize) {
      cmd_optimize(c, out, err);
    } else if (*table) {
      cmd_table(c, table_id, out);
    } else if (*figure) {
      cmd_figure(c, figure_id, out, err);
    } else if (*simulate) {
      cmd_simulate(c, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kDomain;
  } catch (const StarvationError& e) {
    err << "starvation: " << e.what() << '\n';
    return kStarvation;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::ios_base::failure& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}

}  // namespace doslab::cli
