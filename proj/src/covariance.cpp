#include "elliprmt/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "elliprmt/error.hpp"

namespace elliprmt {

namespace {

const Population& population_of(const EllipticalSample& sample) {
  if (!sample.population) throw DomainError("sample carries no population");
  return *sample.population;
}

void require_unit(const Eigen::VectorXd& v, int p, const char* name) {
  if (v.size() != p) throw DomainError(std::string(name) + " has the wrong dimension");
  if (std::abs(v.norm() - 1.0) > 1e-10) throw DomainError(std::string(name) + " is not a unit vector");
}

}  // namespace

ScmBundle build_scm(const EllipticalSample& sample, bool with_vectors) {
  const Population& pop = population_of(sample);
  const int p = sample.dimension();
  const int n = sample.size();
  ScmBundle b;
  b.n = n;
  b.normalization = sample.law.normalization();

  const Eigen::MatrixXd z = pop.gamma * sample.data;
  b.s = Eigen::MatrixXd::Zero(p, p);
  b.s.selfadjointView<Eigen::Lower>().rankUpdate(z, b.normalization / n);
  b.s.triangularView<Eigen::StrictlyUpper>() = b.s.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      b.s, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("eigensolver did not converge on the sample covariance", 0.0,
                           es.info());
  }
  b.eigenvalues = es.eigenvalues();
  if (with_vectors) b.eigenvectors = es.eigenvectors();
  return b;
}

Eigen::VectorXd companion_eigenvalues(const EllipticalSample& sample) {
  const Population& pop = population_of(sample);
  const int n = sample.size();
  const Eigen::MatrixXd z = pop.gamma * sample.data;
  Eigen::MatrixXd c = (sample.law.normalization() / n) * (z.transpose() * z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("eigensolver did not converge on the companion matrix", 0.0, es.info());
  }
  return es.eigenvalues();
}

cplx bilinear_resolvent(const ScmBundle& bundle, const Eigen::VectorXd& pi1,
                        const Eigen::VectorXd& pi2, cplx z) {
  if (!bundle.has_vectors()) throw DomainError("bilinear_resolvent needs eigenvectors");
  const int p = bundle.dimension();
  require_unit(pi1, p, "pi1");
  require_unit(pi2, p, "pi2");
  const auto& lam = bundle.eigenvalues;
  if (z.imag() == 0.0) {
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    if (z.real() >= lam(0) - 1e-14 * scale && z.real() <= lam(p - 1) + 1e-14 * scale) {
      std::ostringstream msg;
      msg << "resolvent pole: real z = " << z.real() << " lies within the spectrum";
      throw PoleError(msg.str());
    }
  }
  const Eigen::VectorXd a = bundle.eigenvectors.transpose() * pi1;
  const Eigen::VectorXd b = bundle.eigenvectors.transpose() * pi2;
  cplx s = 0.0;
  for (int j = 0; j < p; ++j) s += a(j) * b(j) / (lam(j) - z);
  return s;
}

cplx esd_stieltjes(const ScmBundle& bundle, cplx z) {
  cplx s = 0.0;
  for (int j = 0; j < bundle.dimension(); ++j) s += 1.0 / (bundle.eigenvalues(j) - z);
  return s / static_cast<double>(bundle.dimension());
}

Eigen::VectorXd vesd_weights(const ScmBundle& bundle, const Eigen::VectorXd& pi) {
  if (!bundle.has_vectors()) throw DomainError("vesd needs eigenvectors");
  require_unit(pi, bundle.dimension(), "pi");
  return (bundle.eigenvectors.transpose() * pi).array().square().matrix();
}

Vesd vesd(const ScmBundle& bundle, const Eigen::VectorXd& pi, const std::vector<double>& grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw DomainError("vesd grid must be ascending");
  const Eigen::VectorXd w = vesd_weights(bundle, pi);
  const int p = bundle.dimension();
  Vesd out;
  out.grid = grid;
  out.pi = pi;
  out.esd.reserve(grid.size());
  out.vesd.reserve(grid.size());
  // Eigenvalues ascending: sweep once.
  int j = 0;
  double mass_e = 0.0, mass_v = 0.0;
  for (double x : grid) {
    while (j < p && bundle.eigenvalues(j) <= x) {
      mass_e += 1.0 / p;
      mass_v += w(j);
      ++j;
    }
    const bool done = (j == p);
    out.esd.push_back(done ? 1.0 : mass_e);
    out.vesd.push_back(done ? 1.0 : std::min(1.0, mass_v));
  }
  return out;
}

void write_vesd_csv(std::ostream& out, const Vesd& v) {
  out << "x,esd,vesd\n";
  out.precision(17);
  for (std::size_t i = 0; i < v.grid.size(); ++i) {
    out << v.grid[i] << ',' << v.esd[i] << ',' << v.vesd[i] << '\n';
  }
}

Eigen::MatrixXd scaled_data(const EllipticalSample& sample) {
  const double scale = std::sqrt(sample.law.normalization()) / std::sqrt(sample.size());
  return scale * sample.data;
}

namespace {

// LU of (z I - Y^T Sigma_1p Y) plus the n x K right-hand side Y^T U1.
struct SpikeSystem {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::MatrixXd rhs;
};

SpikeSystem spike_system(const EllipticalSample& sample, double z) {
  const Population& pop = population_of(sample);
  if (pop.spike_count() == 0) throw DomainError("spiked determinant needs at least one spike");
  const Eigen::MatrixXd y = scaled_data(sample);
  const Eigen::MatrixXd w = pop.sigma_bulk_sqrt * y;
  const int n = sample.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) * z;
  m.noalias() -= w.transpose() * w;
  SpikeSystem sys{Eigen::PartialPivLU<Eigen::MatrixXd>(m), y.transpose() * pop.spike_vectors()};
  if (!(sys.lu.rcond() > 1e-13)) {
    std::ostringstream msg;
    msg << "pole: lambda I - Y^T Sigma_1p Y is singular at lambda = " << z;
    throw PoleError(msg.str());
  }
  return sys;
}

}  // namespace

Eigen::MatrixXd spike_resolvent_block(const EllipticalSample& sample, double z) {
  const SpikeSystem sys = spike_system(sample, z);
  return sys.rhs.transpose() * sys.lu.solve(sys.rhs);
}

double spike_determinant_residual(const EllipticalSample& sample, double lambda) {
  const Population& pop = population_of(sample);
  const SpikeSystem sys = spike_system(sample, lambda);
  const int k = pop.spike_count();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) d(i, i) = 1.0 / pop.spec.spikes[static_cast<std::size_t>(i)];
  d -= sys.rhs.transpose() * sys.lu.solve(sys.rhs);
  return std::abs(d.determinant());
}

void write_sample_csv(std::ostream& out, const EllipticalSample& sample) {
  out.precision(17);
  for (int i = 0; i < sample.dimension(); ++i) {
    for (int j = 0; j < sample.size(); ++j) {
      if (j > 0) out << ',';
      out << sample.data(i, j);
    }
    out << '\n';
  }
}

}  // namespace elliprmt
