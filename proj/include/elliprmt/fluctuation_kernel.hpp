#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "elliprmt/lsd_solver.hpp"

namespace elliprmt {

/// Solver values and derivatives at one point, reused across kernel pairs.
struct KernelPoint {
  LsdSolution sol;
  LsdDerivatives der;
  /// 1 / (z^2 (1 - J2 K)), J2 = int y^2/(1+g1 y)^2 dH2, K = c z^-2 int t^2/(1+g2 t)^2 dH1.
  /// A perturbation of H2 moves g2 by -z s int y/(1+g1 y) d(delta H2).
  cplx radius_scale;
};

KernelPoint kernel_point(const LsdModel& model, cplx z, const SolverOptions& opts = {});

struct KernelValues {
  cplx z1;
  cplx z2;
  cplx h1;
  cplx h2;
  /// Coefficient of r12(z1) r34(z2) in cov_M: c Cov(f_z1(y), f_z2(y)) s(z1) s(z2) with
  /// f_z(y) = y/(1+g1(z) y), y ~ H2, s = radius_scale. Equals h2 when s = -g2'/(z g2).
  cplx h2_radius;
  cplx d;
  cplx w;  // z1 z2 (g2(z1) - g2(z2))
};

/// h1, h2 and d at two distinct points. Throws DegenerateError when
/// |g1(z1) - g1(z2)| < 1e-12; use kernels_diagonal there.
KernelValues kernels(const LsdModel& model, const KernelPoint& a, const KernelPoint& b);
KernelValues kernels(const LsdModel& model, cplx z1, cplx z2, const SolverOptions& opts = {});

struct DiagonalKernels {
  cplx sigma11_sq;
  cplx sigma12_sq;
};

/// Closed-form limits
///   sigma12^2 = c z^2 (z g2)' g2' / (z m_)',
///   sigma11^2 = 2 sigma12^2 + c z^6 g2^2 s^2 (m_/g2)' / g1',  s = radius_scale.
DiagonalKernels kernels_diagonal(const LsdModel& model, cplx z, const SolverOptions& opts = {});

/// The same limits from z^4 h1(z, z + i delta) and z^4 (2 h1 + h2_radius)(z, z + i delta),
/// delta = 1e-3, 1e-4, 1e-5, Richardson extrapolated to delta = 0.
DiagonalKernels kernels_diagonal_numeric(const LsdModel& model, cplx z, const SolverOptions& opts = {});

/// Eigendecomposition of the finite-n population covariance.
struct SigmaSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  static SigmaSpectrum from_matrix(const Eigen::MatrixXd& sigma);
  int dimension() const { return static_cast<int>(eigenvalues.size()); }
};

struct RFunctionals {
  cplx r_two_point;  // pi_j^T (I + g2(z1) S)^{-1} S (I + g2(z2) S)^{-1} pi_k
  cplx r_one_point;  // pi_j^T (I + g2(z1) S)^{-2} S pi_k
};

RFunctionals r_functionals(const SigmaSpectrum& sigma, cplx g2_z1, cplx g2_z2,
                           const Eigen::VectorXd& pi_j, const Eigen::VectorXd& pi_k);
cplx r_two_point(const SigmaSpectrum& sigma, cplx g2_z1, cplx g2_z2, const Eigen::VectorXd& pi_j,
                 const Eigen::VectorXd& pi_k);
cplx r_one_point(const SigmaSpectrum& sigma, cplx g2, const Eigen::VectorXd& pi_j,
                 const Eigen::VectorXd& pi_k);

/// Deterministic equivalent of pi_1^T (S_n - z)^{-1} pi_2: -z^{-1} pi_1^T (I + g2(z) Sigma)^{-1} pi_2.
cplx deterministic_equivalent(const SigmaSpectrum& sigma, cplx z, cplx g2, const Eigen::VectorXd& pi1,
                              const Eigen::VectorXd& pi2);

using Quadruple = std::array<Eigen::VectorXd, 4>;

/// Cov(M1(z1), M2(z2)) = h1 r14 r23 + h1 r13 r24 + h2_radius r12(z1) r34(z2).
cplx cov_M(const LsdModel& model, const SigmaSpectrum& sigma, const Quadruple& pi, cplx z1, cplx z2,
           const SolverOptions& opts = {});
cplx cov_M(const LsdModel& model, const SigmaSpectrum& sigma, const Quadruple& pi, const KernelPoint& a,
           const KernelPoint& b);

/// Limit of cov_M(z, z + i delta) as delta -> 0 (Richardson, as in kernels_diagonal_numeric).
cplx cov_M_diagonal(const LsdModel& model, const SigmaSpectrum& sigma, const Quadruple& pi, cplx z,
                    const SolverOptions& opts = {});

/// Rectangle with corners x_left +- i v0 and x_right +- i v0. The second contour
/// is the same rectangle grown by `separation` on every side.
struct ContourSpec {
  double x_left = 0.0;
  double x_right = 0.0;
  double v0 = 0.5;
  double separation = 0.05;
};

/// x_right at 1.2 times the outer bracket, x_left at -0.1 times it. The kernel is
/// analytic at zero, and a left side far from the lower edge keeps the per-side
/// Gauss-Legendre rule converging fast.
ContourSpec default_contour(const LsdModel& model);

using Zeta = std::function<cplx(cplx)>;

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// -1/(4 pi^2) oint oint zeta_t(z1) zeta_s(z2) varpi(z1, z2) dz1 dz2 with
/// varpi = 2 h1 r11(z1,z2)^2 + h2_radius r11(z1) r11(z2), quad_n Gauss-Legendre nodes per side.
double eigvec_stat_cov(const LsdModel& model, const SigmaSpectrum& sigma, const Eigen::VectorXd& pi,
                       const Zeta& zeta_t, const Zeta& zeta_s, const ContourSpec& contour, int quad_n,
                       const SolverOptions& opts = {});

/// Kernel grid CSV: re_z1,im_z1,re_z2,im_z2,re_h1,im_h1,re_h2,im_h2,re_h2_radius,im_h2_radius,re_d,im_d.
void write_kernel_csv(std::ostream& out, const std::vector<KernelValues>& values);

}  // namespace elliprmt
