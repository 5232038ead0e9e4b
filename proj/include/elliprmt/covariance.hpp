#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "elliprmt/sampler.hpp"
#include "elliprmt/spectral_measures.hpp"

namespace elliprmt {

/// Normalized sample covariance matrix S = sqrt(p^2/m_p)/n * Gamma X X^T Gamma^T
/// and its eigendecomposition (eigenvalues ascending).
struct ScmBundle {
  Eigen::MatrixXd s;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // empty when built without vectors
  double normalization = 1.0;
  int n = 0;

  int dimension() const { return static_cast<int>(eigenvalues.size()); }
  bool has_vectors() const { return eigenvectors.size() > 0; }
  /// k-th largest eigenvalue, k = 0 for the top one.
  double top_eigenvalue(int k = 0) const { return eigenvalues(dimension() - 1 - k); }
  Eigen::VectorXd top_eigenvector(int k = 0) const { return eigenvectors.col(dimension() - 1 - k); }
};

ScmBundle build_scm(const EllipticalSample& sample, bool with_vectors = true);

/// Nonzero spectrum of the n x n companion sqrt(p^2/m_p)/n X^T Gamma^T Gamma X, ascending.
Eigen::VectorXd companion_eigenvalues(const EllipticalSample& sample);

/// pi1^T (S - z)^{-1} pi2 through the eigendecomposition.
cplx bilinear_resolvent(const ScmBundle& bundle, const Eigen::VectorXd& pi1,
                        const Eigen::VectorXd& pi2, cplx z);

/// Stieltjes transform of the ESD of S.
cplx esd_stieltjes(const ScmBundle& bundle, cplx z);

struct Vesd {
  std::vector<double> grid;
  std::vector<double> esd;
  std::vector<double> vesd;
  Eigen::VectorXd pi;
};

/// ESD and the vector ESD sum_j |v_j^T pi|^2 I(lambda_j <= x) on an ascending grid.
Vesd vesd(const ScmBundle& bundle, const Eigen::VectorXd& pi, const std::vector<double>& grid);

/// Projection weights |v_j^T pi|^2 in eigenvalue order.
Eigen::VectorXd vesd_weights(const ScmBundle& bundle, const Eigen::VectorXd& pi);

void write_vesd_csv(std::ostream& out, const Vesd& v);

/// Y_n = (p^2/m_p)^{1/4} X / sqrt(n).
Eigen::MatrixXd scaled_data(const EllipticalSample& sample);

/// U1^T Y (z I - Y^T Sigma_1p Y)^{-1} Y^T U1 for real z outside the non-spiked spectrum.
Eigen::MatrixXd spike_resolvent_block(const EllipticalSample& sample, double z);

/// |det(Lambda_S^{-1} - U1^T Y (lambda I - Y^T Sigma_1p Y)^{-1} Y^T U1)|.
double spike_determinant_residual(const EllipticalSample& sample, double lambda);

/// Writes X as CSV (p rows, n columns), for debugging.
void write_sample_csv(std::ostream& out, const EllipticalSample& sample);

}  // namespace elliprmt
