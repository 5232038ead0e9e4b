#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elliprmt/spectral_measures.hpp"

namespace elliprmt {

/// How the p - K non-spiked population eigenvalues are chosen.
struct BulkRule {
  enum class Kind { uniform, explicit_values, constant };
  Kind kind = Kind::uniform;
  std::vector<double> values;  // explicit_values only
  double constant = 1.0;       // constant only
  std::uint64_t seed = 0;      // uniform only: iid U(0,1) draws
};

struct PopulationSpec {
  int p = 1;
  std::vector<double> spikes;  // strictly descending
  BulkRule bulk;
  double toeplitz_rho = 0.9;   // basis = eigenvectors of (rho^|i-j|)
  double separation = 0.1;     // declared d in the separation condition
};

/// Sigma = U0 diag(D0) U0^T together with the pieces the spiked model needs.
struct Population {
  PopulationSpec spec;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd basis;          // U0, orthogonal; first K columns carry the spikes
  Eigen::VectorXd eigenvalues;    // D0: spikes followed by bulk
  Eigen::MatrixXd gamma;          // symmetric square root of sigma
  Eigen::MatrixXd sigma_bulk;     // Sigma_1p: spikes zeroed, same basis
  Eigen::MatrixXd sigma_bulk_sqrt;
  std::vector<std::string> warnings;

  int dimension() const { return spec.p; }
  int spike_count() const { return static_cast<int>(spec.spikes.size()); }
  /// U1: the first K columns of the basis.
  Eigen::MatrixXd spike_vectors() const { return basis.leftCols(spike_count()); }
  /// ESD of Sigma.
  DiscreteMeasure h1() const;
  /// ESD of Sigma_1p (spikes replaced by zero, all p eigenvalues kept).
  DiscreteMeasure h1_nonspiked() const;
  double bulk_max() const;
};

Population build_population(const PopulationSpec& spec);

/// Seed of the index-th independent substream of a master seed.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

using Rng = std::mt19937_64;

/// One p x n elliptical data set x_j = rho_j * y_j / |y_j|, before applying Gamma.
struct EllipticalSample {
  Eigen::MatrixXd data;       // X
  Eigen::MatrixXd gaussians;  // the standard normal y_j behind each direction
  Eigen::VectorXd radii;      // rho_j
  std::uint64_t seed = 0;
  RadiusLaw law;
  std::shared_ptr<const Population> population;

  int dimension() const { return static_cast<int>(data.rows()); }
  int size() const { return static_cast<int>(data.cols()); }
};

/// Uniform point on the unit sphere S^{p-1}; `gaussian` receives the normal draw.
Eigen::VectorXd draw_direction(int p, Rng& rng, Eigen::VectorXd* gaussian = nullptr);

/// Draws rho^2 from the law.
double draw_radius_squared(const RadiusLaw& law, Rng& rng);

/// Directions by Gaussian normalization, radii iid from the law; reproducible from seed.
EllipticalSample draw_sample(std::shared_ptr<const Population> population, const RadiusLaw& law,
                             int n, std::uint64_t seed);

/// Exact E(u^T A u - tr A / p)(u^T B u - tr B / p) for u uniform on the unit sphere.
double quadform_moment_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int p);

}  // namespace elliprmt
