#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "elliprmt/spectral_measures.hpp"

namespace elliprmt {

/// The triple (c, H1, H2) that determines the limiting spectral distribution.
struct LsdModel {
  double c = 1.0;
  DiscreteMeasure h1 = DiscreteMeasure::point_mass(1.0);
  DiscreteMeasure h2 = DiscreteMeasure::point_mass(1.0);

  /// H1 = delta_0 or H2 = delta_0: the LSD collapses to delta_0.
  bool trivial() const;
  /// H2 = delta_1, where the companion transform coincides with g2.
  bool light_tail() const { return h2.is_point_mass(1.0); }
  /// Outer bracket of the support, [a lmin (1 - sqrt c)^2 1{c<1}, b lmax (1 + sqrt c)^2].
  std::pair<double, double> outer_bracket() const;
  /// Mass of the LSD at zero, from the rank deficiency of S and its companion.
  double zero_mass() const;
};

struct SolverOptions {
  double tol = 1e-12;
  long max_iter = 10000;
  double damping = 0.5;
  long newton_after = 200;
};

/// One point of the solution (m, g1, g2) of the LSD system plus the companion transform.
struct LsdSolution {
  cplx z;
  cplx g1;
  cplx g2;
  cplx m;
  cplx m_under;
  long iterations = 0;
  double residual = 0.0;
  bool trivial = false;

  /// Im m > 0, Im(z g1) > 0, Im g2 > 0.
  bool in_uniqueness_set() const;
};

/// Max of the absolute residuals of z g1 = -c int x/(1+g2 x) dH1 and z g2 = -int y/(1+g1 y) dH2.
double lsd_residual(const LsdModel& model, cplx z, cplx g1, cplx g2);

/// Solves at Im z > 0 by damped alternation with a Newton fallback.
LsdSolution solve_lsd(const LsdModel& model, cplx z, const SolverOptions& opts = {},
                      std::optional<std::pair<cplx, cplx>> guess = std::nullopt);

/// Real-axis solution at x outside the bulk: limit along x + i eps, eps = 1e-3 .. 1e-8,
/// Richardson extrapolated and polished by Newton at the real point.
LsdSolution solve_lsd_real(const LsdModel& model, double x, const SolverOptions& opts = {});

/// Solution anywhere off the support: conjugate symmetry below the axis, the
/// real-axis path on it.
LsdSolution evaluate_lsd(const LsdModel& model, cplx z, const SolverOptions& opts = {},
                         std::optional<std::pair<cplx, cplx>> guess = std::nullopt);

struct LsdDerivatives {
  cplx g1p;
  cplx g2p;
  cplx m_under_p;
  cplx mp;
  cplx z_g2_p;        // (z g2)'
  cplx z_m_under_p;   // (z m_)'
  cplx ratio_p;       // (m_ / g2)'
};

/// Exact first derivatives by implicit differentiation of the g1/g2 system.
LsdDerivatives derivatives(const LsdModel& model, const LsdSolution& sol);

/// Optional anisotropic variant: s(z) = -z^{-1} pi^T (I + g2(z) Sigma)^{-1} pi.
struct Anisotropy {
  Eigen::VectorXd sigma_eigenvalues;
  Eigen::VectorXd pi_weights;  // squared coordinates of pi in the eigenbasis of Sigma
};

struct StieltjesInversion {
  std::vector<double> x;
  std::vector<double> density;
  std::vector<double> cdf;
  double zero_mass = 0.0;   // point mass at 0, excluded from `density`
  double total_mass = 0.0;  // cdf at the last grid point
};

/// density(x) = Im m(x + i eps) / pi (or Im s for the anisotropic law), CDF by the
/// trapezoid rule plus the point mass at zero.
StieltjesInversion stieltjes_invert(const LsdModel& model, const std::vector<double>& grid,
                                    double eps,
                                    const std::optional<Anisotropy>& aniso = std::nullopt,
                                    const SolverOptions& opts = {});

void write_density_csv(std::ostream& out, const StieltjesInversion& inv);

/// Whether a real solution exists at x (x outside the support).
bool outside_support(const LsdModel& model, double x, const SolverOptions& opts = {});

/// Right end of the top bulk interval.
double upper_bulk_edge(const LsdModel& model, const SolverOptions& opts = {});

/// The edge together with the real solution there. The bisection estimate is
/// polished by Newton on the fold condition x^2 = c I1 I2 (singular derivative system).
struct BulkEdge {
  double x = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  bool polished = false;
};
BulkEdge upper_bulk_edge_point(const LsdModel& model, const SolverOptions& opts = {});

/// Support intervals detected on a density grid, endpoints refined by bisection.
std::vector<std::pair<double, double>> detect_support(const LsdModel& model, double lo, double hi,
                                                      int steps, double eps,
                                                      const SolverOptions& opts = {});

/// Stieltjes transform of the anisotropic law, -z^{-1} pi^T (I + g2 Sigma)^{-1} pi.
cplx anisotropic_stieltjes(const Anisotropy& aniso, cplx z, cplx g2);

}  // namespace elliprmt
