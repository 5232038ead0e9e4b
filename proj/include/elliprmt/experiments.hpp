#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "elliprmt/lsd_solver.hpp"
#include "elliprmt/sampler.hpp"

namespace elliprmt {

enum class ExperimentKind {
  spike_dist,
  eigvec_overlap,
  bilinear_as,
  bilinear_clt,
  vesd,
  quadform_oracle,
  goe_entries,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// nu_p as a function of p: "0", "sqrt(p)", "p", "p^2", "2p", or a fixed number.
struct NuRule {
  enum class Kind { zero, sqrt_p, p, p_squared, two_p, fixed };
  Kind kind = Kind::zero;
  double value = 0.0;  // fixed only

  double evaluate(int p) const;
  std::string name() const;
  static NuRule parse(const std::string& text);
};

struct RadiusSpec {
  RadiusKind kind = RadiusKind::two_point;
  NuRule nu;

  RadiusLaw law(int p) const;
  std::string label() const;
};

/// Population description that can be instantiated at any p of a sweep.
struct PopulationConfig {
  std::vector<double> spikes;
  BulkRule::Kind bulk = BulkRule::Kind::uniform;
  std::vector<double> bulk_values;  // explicit bulk only
  double bulk_constant = 1.0;
  bool has_bulk_seed = false;
  std::uint64_t bulk_seed = 0;  // defaults to a substream of the master seed
  double toeplitz_rho = 0.9;
  double separation = 0.1;

  PopulationSpec spec(int p, std::uint64_t master_seed) const;
};

/// A pass/fail rule evaluated on the summary. `upper` only: value <= upper;
/// both bounds: lower <= value <= upper.
struct Threshold {
  bool has_lower = false;
  double lower = 0.0;
  double upper = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::spike_dist;
  int p = 100;
  int n = 200;
  long reps = 2000;
  std::uint64_t seed = 1;
  std::vector<RadiusSpec> radius{RadiusSpec{}};  // one case per law
  PopulationConfig population;
  std::vector<cplx> z_points;
  std::vector<int> grid;  // eigvec-overlap: p values, n = round(p / c)
  double c = 0.5;
  int spike_index = 0;  // which spike (by rank) spike-dist and eigvec-overlap follow
  std::vector<std::pair<std::string, std::string>> forms{{"e1", "e1"}};  // bilinear vector pairs
  std::string pi = "e1";                                                  // vesd direction
  std::vector<std::string> zeta{"x", "x^2"};                              // vesd test functions
  double zone_delta = 0.05;
  int quad_n = 32;
  int hist_bins = 40;
  long batch = 1000;  // quadform-oracle: sphere draws per replicate
  int pairs = 5;      // quadform-oracle: random matrix pairs
  int quad_p = 10;    // quadform-oracle: matrix dimension
  std::map<std::string, Threshold> thresholds;

  /// Throws ConfigError naming the offending key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  long count = 0;
  double gauss_density = 0.0;
};

struct Histogram {
  std::string label;
  std::vector<HistogramBin> bins;
};

/// Records are one row per replicate and case; `failed` rows hold NaN values.
struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::spike_dist;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> records;
  nlohmann::json summary;
  nlohmann::json theory;
  std::vector<Histogram> histograms;
  std::vector<std::string> table_columns;  // eigvec-overlap: overlap-vs-p table
  std::vector<std::vector<double>> table;
  long failures = 0;
  std::vector<std::string> warnings;

  /// True when every configured threshold holds.
  bool checks_pass() const;
};

struct RunOptions {
  int jobs = 1;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

ExperimentResult run_spike_dist(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_eigvec_overlap(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_bilinear_as(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_bilinear_clt(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_goe_entries(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_vesd(const ExperimentConfig& cfg, const RunOptions& opts = {});
ExperimentResult run_quadform_oracle(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Unit vector from a spec: "e<k>" (1-based), "uniform", "spike<k>" (population
/// eigenvector of the k-th spike), "random<k>" (k-th of an orthonormal random family).
Eigen::VectorXd direction_from_spec(const std::string& spec, const Population& pop,
                                    std::uint64_t master_seed);

/// records.csv text; its FNV-1a hash is the summary checksum.
std::string records_csv(const ExperimentResult& result);
std::string fnv1a_hex(const std::string& text);

/// records.csv, summary.json, theory.json, hist.csv (hist_<label>.csv with several
/// cases) and table.csv when the result has a table.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

/// Kolmogorov-Smirnov distance of a sample against N(0, 1).
double ks_standard_normal(std::vector<double> sample);

}  // namespace elliprmt
