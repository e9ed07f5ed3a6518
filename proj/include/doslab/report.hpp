#pragma once

// Tabular datasets behind the `table` and `figure` commands, and their
// CSV / JSON writers. Numbers are written fixed-point, independent of locale.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "doslab/channel.hpp"
#include "doslab/sim.hpp"
#include "doslab/threshold.hpp"

namespace doslab {

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  int precision = 6;
};

std::string format_fixed(double value, int precision);

void write_csv(const DataTable& table, std::ostream& out);
/// Array of row objects, or the first row alone when `single_record`.
/// Empty cells become null.
void write_json(const DataTable& table, std::ostream& out, bool single_record = false);

/// Shared inputs of the numeric studies.
struct StudySettings {
  double delta = 0.1;
  double p_s = 0.36787944117144233;  // e^{-1}
  SnrConvention convention = SnrConvention::kTabulated;
  OptimizeOptions optimize{};

  ContentionParams contention() const;
  ChannelParams channel(double rho, double alpha) const;
};

inline const std::vector<double> kTableOneRho = {0.5, 1, 2, 5, 10};
inline const std::vector<double> kTableTwoAlpha = {0, 0.1, 1, 2, 5};
inline const std::vector<double> kTableThreeRho = {0.5, 1, 2, 5, 10, 100};
inline const std::vector<double> kTableFourAlpha = {0, 0.01, 0.1, 1, 2, 5};

/// Iterates x_0..x_3 with x*, sigma* per rho at alpha = 1.
DataTable table_one(const StudySettings& s);
/// Iterates x_0..x_5 with x*, sigma* per alpha at rho = 1.
DataTable table_two(const StudySettings& s);
/// x*, x_L and gain per rho at alpha = 1.
DataTable table_three(const StudySettings& s);
/// x*, x_L and gain per alpha at rho = 0.5.
DataTable table_four(const StudySettings& s);

/// Phi(x, sigma) over an even sigma grid on [0, 1].
DataTable figure_one(const StudySettings& s, double x, double rho, double alpha, int points);
/// Phi(x, sigma*) over x in [0, x_max] for every (rho, alpha) pair; sigma*
/// is the optimised ratio of that pair.
DataTable figure_two(const StudySettings& s, const std::vector<double>& rhos,
                     const std::vector<double>& alphas, double x_max, int points);
/// sigma* and x* against alpha, one column pair per rho.
DataTable figure_three(const StudySettings& s, const std::vector<double>& rhos,
                       const std::vector<double>& alphas);
/// x* against training time tau (log grid), one column pair per rho.
DataTable figure_four(const StudySettings& s, const std::vector<double>& rhos, double T,
                      const std::vector<double>& taus, std::vector<double>* tau_best = nullptr);

std::vector<double> linear_grid(double lo, double hi, int points);
std::vector<double> log_grid(double lo, double hi, int points);

DataTable trace_table(const SolverTrace& trace);
DataTable sim_report_table(const SimReport& report);

}  // namespace doslab
