#include "doslab/report.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "doslab/errors.hpp"

namespace doslab {

std::string format_fixed(double value, int precision) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

namespace {

std::string render(const Cell& cell, int precision) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<V, double>) {
          return format_fixed(v, precision);
        } else if constexpr (std::is_same_v<V, std::int64_t>) {
          return std::to_string(v);
        } else {
          return v;
        }
      },
      cell);
}

std::string label(double v) {
  // Compact column labels: 0.5 -> "0.5", 10 -> "10".
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Cell iterate_cell(const SolverTrace& trace, std::size_t k) {
  if (k < trace.iterates.size()) return trace.iterates[k].x;
  return std::monostate{};
}

}  // namespace

void write_csv(const DataTable& table, std::ostream& out) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << render(row[i], table.precision);
    }
    out << '\n';
  }
}

void write_json(const DataTable& table, std::ostream& out, bool single_record) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& key = table.columns[i];
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) {
              obj[key] = nullptr;
            } else if constexpr (std::is_same_v<V, double>) {
              // Round through the fixed rendering so JSON and CSV agree.
              obj[key] = std::isfinite(v) ? nlohmann::ordered_json(std::stod(
                                                format_fixed(v, table.precision)))
                                          : nlohmann::ordered_json(nullptr);
            } else {
              obj[key] = v;
            }
          },
          row[i]);
    }
    rows.push_back(std::move(obj));
  }
  out << (single_record && !rows.empty() ? rows.front().dump(2) : rows.dump(2)) << '\n';
}

ContentionParams StudySettings::contention() const {
  return ContentionParams::from_success_prob(p_s, delta);
}

ChannelParams StudySettings::channel(double rho, double alpha) const {
  return ChannelParams::from_alpha(rho, alpha, convention);
}

DataTable table_one(const StudySettings& s) {
  DataTable t{{"rho", "x0", "x1", "x2", "x3", "x_star", "sigma_star", "iterations"}, {}, 3};
  const auto cont = s.contention();
  for (double rho : kTableOneRho) {
    const auto trace = optimize_backoff(s.channel(rho, 1.0), cont, s.optimize);
    t.rows.push_back({rho, iterate_cell(trace, 0), iterate_cell(trace, 1), iterate_cell(trace, 2),
                      iterate_cell(trace, 3), trace.x_star, trace.sigma_star,
                      static_cast<std::int64_t>(trace.iterates.size() - 1)});
  }
  return t;
}

DataTable table_two(const StudySettings& s) {
  DataTable t{{"alpha", "x0", "x1", "x2", "x3", "x4", "x5", "x_star", "sigma_star", "iterations"},
              {},
              3};
  const auto cont = s.contention();
  for (double alpha : kTableTwoAlpha) {
    const auto trace = optimize_backoff(s.channel(1.0, alpha), cont, s.optimize);
    std::vector<Cell> row{alpha};
    for (std::size_t k = 0; k <= 5; ++k) row.push_back(iterate_cell(trace, k));
    row.push_back(trace.x_star);
    row.push_back(trace.sigma_star);
    row.push_back(static_cast<std::int64_t>(trace.iterates.size() - 1));
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {
DataTable gain_table(const StudySettings& s, const char* key, const std::vector<double>& values,
                     bool vary_rho) {
  DataTable t{{key, "x_star", "x_L", "gain_pct", "sigma_star"}, {}, 3};
  const auto cont = s.contention();
  for (double v : values) {
    const auto ch = vary_rho ? s.channel(v, 1.0) : s.channel(0.5, v);
    const GainResult g = throughput_gain(ch, cont, s.optimize);
    t.rows.push_back({v, g.x_star, g.x_l, 100.0 * g.gain, g.sigma_star});
  }
  return t;
}
}  // namespace

DataTable table_three(const StudySettings& s) { return gain_table(s, "rho", kTableThreeRho, true); }

DataTable table_four(const StudySettings& s) {
  return gain_table(s, "alpha", kTableFourAlpha, false);
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 2 || !(lo < hi)) throw DomainError("grid needs lo < hi and at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0)) throw DomainError("log grid needs lo > 0");
  auto g = linear_grid(std::log(lo), std::log(hi), points);
  for (auto& v : g) v = std::exp(v);
  g.front() = lo;
  g.back() = hi;
  return g;
}

DataTable figure_one(const StudySettings& s, double x, double rho, double alpha, int points) {
  const auto ch = s.channel(rho, alpha);
  const auto cont = s.contention();
  DataTable t{{"sigma", "phi"}, {}, 6};
  for (double sigma : linear_grid(0.0, 1.0, points)) {
    t.rows.push_back({sigma, phi_linear(x, sigma, ch, cont)});
  }
  return t;
}

DataTable figure_two(const StudySettings& s, const std::vector<double>& rhos,
                     const std::vector<double>& alphas, double x_max, int points) {
  const auto cont = s.contention();
  DataTable t{{"x"}, {}, 6};
  struct Series {
    ChannelParams ch;
    double sigma;
  };
  std::vector<Series> series;
  for (double rho : rhos) {
    for (double alpha : alphas) {
      const auto ch = s.channel(rho, alpha);
      if (ch.perfect_csi()) throw DomainError("figure 2 needs alpha > 0");
      series.push_back({ch, optimize_backoff(ch, cont, s.optimize).sigma_star});
      t.columns.push_back("phi_rho" + label(rho) + "_alpha" + label(alpha));
    }
  }
  for (double x : linear_grid(0.0, x_max, points)) {
    std::vector<Cell> row{x};
    for (const auto& sr : series) row.push_back(phi_linear(x, sr.sigma, sr.ch, cont));
    t.rows.push_back(std::move(row));
  }
  return t;
}

DataTable figure_three(const StudySettings& s, const std::vector<double>& rhos,
                       const std::vector<double>& alphas) {
  const auto cont = s.contention();
  DataTable t{{"alpha"}, {}, 6};
  for (double rho : rhos) {
    t.columns.push_back("sigma_star_rho" + label(rho));
    t.columns.push_back("x_star_rho" + label(rho));
  }
  for (double alpha : alphas) {
    std::vector<Cell> row{alpha};
    for (double rho : rhos) {
      const auto trace = optimize_backoff(s.channel(rho, alpha), cont, s.optimize);
      row.push_back(trace.sigma_star);
      row.push_back(trace.x_star);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

DataTable figure_four(const StudySettings& s, const std::vector<double>& rhos, double T,
                      const std::vector<double>& taus, std::vector<double>* tau_best) {
  DataTable t{{"tau"}, {}, 6};
  std::vector<TrainingSweep> sweeps;
  for (double rho : rhos) {
    t.columns.push_back("x_star_rho" + label(rho));
    t.columns.push_back("sigma_star_rho" + label(rho));
    sweeps.push_back(sweep_training_time(rho, T, taus, s.p_s, s.convention, s.optimize));
    if (tau_best) tau_best->push_back(sweeps.back().tau_best);
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    std::vector<Cell> row{taus[i]};
    for (const auto& sw : sweeps) {
      row.push_back(sw.points[i].x_star);
      row.push_back(sw.points[i].sigma_star);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

DataTable trace_table(const SolverTrace& trace) {
  DataTable t{{"k", "x_k", "sigma_k"}, {}, 6};
  for (const auto& it : trace.iterates) {
    t.rows.push_back({static_cast<std::int64_t>(it.k), it.x,
                      it.sigma ? Cell{*it.sigma} : Cell{std::monostate{}}});
  }
  return t;
}

DataTable sim_report_table(const SimReport& r) {
  return {{"empirical_throughput", "ci_halfwidth_95", "outage_fraction",
           "mean_probes_per_transmission", "total_rounds", "transmissions", "replications"},
          {{r.empirical_throughput, r.ci_halfwidth_95, r.outage_fraction,
            r.mean_probes_per_transmission, static_cast<std::int64_t>(r.total_rounds),
            static_cast<std::int64_t>(r.transmissions), static_cast<std::int64_t>(r.replications)}},
          6};
}

}  // namespace doslab
