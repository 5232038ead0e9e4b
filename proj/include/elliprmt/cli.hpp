#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "elliprmt/lsd_solver.hpp"
#include "elliprmt/spiked_theory.hpp"

namespace elliprmt {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNumerical = 2,
  kExitSubcritical = 3,
};

/// Runs the tool on argv[1..]; never throws, returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "delta:x" for a point mass, "file:path" (or a bare path) for an `atom,weight` CSV.
DiscreteMeasure parse_measure_arg(const std::string& text);
/// "re,im" or "re".
cplx parse_complex_arg(const std::string& text);

struct GridArg {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 0;
  /// steps + 1 equally spaced points from lo to hi.
  std::vector<double> points() const;
};
/// "lo:hi:steps", steps >= 1.
GridArg parse_grid_arg(const std::string& text);

nlohmann::json solution_json(const LsdSolution& sol);
nlohmann::json prediction_json(const SpikePrediction& pred);

/// Sets a dotted key ("population.toeplitz_rho=0.5") in a config document; the value
/// is parsed as JSON when possible, as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Parsed numeric CSV with a header row.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  int column(const std::string& name) const;  // -1 when absent
};
CsvTable read_csv_table(std::istream& in);

struct GaussOverlay {
  bool enabled = false;
  double mean = 0.0;
  double sd = 1.0;
};

/// Histogram bars scaled to a density, with the Gaussian overlay either from
/// `overlay` or from the gauss_density column.
std::string histogram_svg(const CsvTable& hist, const GaussOverlay& overlay, const std::string& title);
/// Scatter of y against x, one series per value of `group` (if present), with an
/// optional line column drawn per series.
std::string xy_svg(const CsvTable& table, const std::string& x, const std::string& y, const std::string& group,
                   const std::string& line, const std::string& title);

}  // namespace elliprmt
