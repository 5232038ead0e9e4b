#include "elliprmt/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "elliprmt/error.hpp"

namespace elliprmt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void validate_spec(const PopulationSpec& spec) {
  if (spec.p < 1) throw DomainError("population dimension must be >= 1");
  const int k = static_cast<int>(spec.spikes.size());
  if (k > spec.p) throw DomainError("more spikes than dimensions");
  if (!(std::abs(spec.toeplitz_rho) < 1.0)) throw DomainError("toeplitz_rho must lie in (-1, 1)");
  if (!(spec.separation > 0.0)) throw DomainError("separation d must be > 0");
  for (int i = 0; i < k; ++i) {
    if (!(spec.spikes[i] > 0.0) || !std::isfinite(spec.spikes[i])) {
      throw DomainError("spikes must be positive and finite");
    }
    if (i > 0 && !(spec.spikes[i] < spec.spikes[i - 1])) {
      throw DomainError("spikes must be strictly descending");
    }
  }
  if (spec.bulk.kind == BulkRule::Kind::explicit_values &&
      static_cast<int>(spec.bulk.values.size()) != spec.p - k) {
    throw DomainError("explicit bulk needs exactly p - K values");
  }
}

std::vector<double> bulk_values(const PopulationSpec& spec) {
  const int m = spec.p - static_cast<int>(spec.spikes.size());
  std::vector<double> out;
  switch (spec.bulk.kind) {
    case BulkRule::Kind::uniform: {
      Rng rng(spec.bulk.seed);
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      for (int i = 0; i < m; ++i) out.push_back(unif(rng));
      break;
    }
    case BulkRule::Kind::explicit_values:
      out = spec.bulk.values;
      break;
    case BulkRule::Kind::constant:
      out.assign(static_cast<std::size_t>(m), spec.bulk.constant);
      break;
  }
  for (double v : out) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("bulk eigenvalues must be finite and >= 0");
  }
  return out;
}

Eigen::MatrixXd toeplitz_basis(int p, double rho) {
  if (rho == 0.0) return Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) a(i, j) = std::pow(rho, std::abs(i - j));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw Error("eigensolver failed on the Toeplitz basis");
  // Descending eigenvalue order; sign fixed so the largest-magnitude entry is positive.
  Eigen::MatrixXd u = es.eigenvectors().rowwise().reverse();
  for (int j = 0; j < p; ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) u.col(j) *= -1.0;
  }
  const double resid = (u.transpose() * u - Eigen::MatrixXd::Identity(p, p)).norm();
  if (resid > 1e-10) {
    std::ostringstream msg;
    msg << "Toeplitz eigenbasis is not orthogonal (residual " << resid << ")";
    throw Error(msg.str());
  }
  return u;
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& u, const Eigen::VectorXd& d) {
  Eigen::MatrixXd m = u * d.asDiagonal() * u.transpose();
  return 0.5 * (m + m.transpose());
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index));
}

DiscreteMeasure Population::h1() const {
  std::vector<double> v(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  return DiscreteMeasure::empirical(v);
}

DiscreteMeasure Population::h1_nonspiked() const {
  std::vector<double> v(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  for (int k = 0; k < spike_count(); ++k) v[static_cast<std::size_t>(k)] = 0.0;
  return DiscreteMeasure::empirical(v);
}

double Population::bulk_max() const {
  const int k = spike_count();
  if (k == spec.p) return 0.0;
  return eigenvalues.tail(spec.p - k).maxCoeff();
}

Population build_population(const PopulationSpec& spec) {
  validate_spec(spec);
  Population pop;
  pop.spec = spec;
  const int p = spec.p;
  const int k = static_cast<int>(spec.spikes.size());
  const std::vector<double> bulk = bulk_values(spec);

  pop.eigenvalues.resize(p);
  for (int i = 0; i < k; ++i) pop.eigenvalues(i) = spec.spikes[static_cast<std::size_t>(i)];
  for (int i = k; i < p; ++i) pop.eigenvalues(i) = bulk[static_cast<std::size_t>(i - k)];

  if (k > 0) {
    const double edge = pop.bulk_max();
    if (!(spec.spikes.back() > edge)) {
      throw DomainError("smallest spike does not exceed the bulk eigenvalues");
    }
    if (spec.spikes.back() <= edge * (1.0 + spec.separation)) {
      pop.warnings.push_back("smallest spike is within the declared separation of the bulk edge");
    }
    for (int i = 1; i < k; ++i) {
      if (std::abs(spec.spikes[i - 1] / spec.spikes[i] - 1.0) <= spec.separation) {
        pop.warnings.push_back("spikes violate the separation condition");
      }
    }
  }

  pop.basis = toeplitz_basis(p, spec.toeplitz_rho);
  pop.sigma = reconstruct(pop.basis, pop.eigenvalues);
  pop.gamma = reconstruct(pop.basis, pop.eigenvalues.cwiseSqrt());
  Eigen::VectorXd bulk_only = pop.eigenvalues;
  bulk_only.head(k).setZero();
  pop.sigma_bulk = reconstruct(pop.basis, bulk_only);
  pop.sigma_bulk_sqrt = reconstruct(pop.basis, bulk_only.cwiseSqrt());

  const double lo = pop.eigenvalues.minCoeff();
  const double hi = pop.eigenvalues.maxCoeff();
  if (lo <= 0.0 || hi / lo > 1e8) {
    pop.warnings.push_back("population covariance is near singular (cond > 1e8)");
  }
  return pop;
}

Eigen::VectorXd draw_direction(int p, Rng& rng, Eigen::VectorXd* gaussian) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd y(p);
  double nrm = 0.0;
  do {
    for (int i = 0; i < p; ++i) y(i) = normal(rng);
    nrm = y.norm();
  } while (nrm == 0.0);
  if (gaussian != nullptr) *gaussian = y;
  return y / nrm;
}

double draw_radius_squared(const RadiusLaw& law, Rng& rng) {
  const double p = law.p;
  switch (law.kind) {
    case RadiusKind::deterministic:
      return p;
    case RadiusKind::two_point: {
      std::bernoulli_distribution coin(0.5);
      const double s = std::sqrt(law.nu_p);
      return coin(rng) ? p + s : p - s;
    }
    case RadiusKind::chi_square: {
      std::chi_squared_distribution<double> chi(p);
      return chi(rng);
    }
    case RadiusKind::gamma: {
      std::gamma_distribution<double> gam(p * p / law.nu_p, law.nu_p / p);
      return gam(rng);
    }
  }
  return p;
}

EllipticalSample draw_sample(std::shared_ptr<const Population> population, const RadiusLaw& law,
                             int n, std::uint64_t seed) {
  if (!population) throw DomainError("draw_sample needs a population");
  if (n < 1) throw DomainError("sample size n must be >= 1");
  const int p = population->dimension();
  if (law.p != p) throw DomainError("radius law dimension differs from the population");
  law.validate();

  EllipticalSample s;
  s.seed = seed;
  s.law = law;
  s.population = std::move(population);
  s.data.resize(p, n);
  s.gaussians.resize(p, n);
  s.radii.resize(n);

  Rng rng(seed);
  Eigen::VectorXd y;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd u = draw_direction(p, rng, &y);
    const double rho = std::sqrt(draw_radius_squared(law, rng));
    s.gaussians.col(j) = y;
    s.radii(j) = rho;
    s.data.col(j) = rho * u;
  }
  return s;
}

double quadform_moment_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int p) {
  if (a.rows() != p || a.cols() != p || b.rows() != p || b.cols() != p) {
    throw DomainError("quadform oracle: matrices must be p x p");
  }
  const double pp = p;
  const double tr_abt = (a.array() * b.array()).sum();
  const double tr_ab = (a * b).trace();
  return (tr_abt + tr_ab) / (pp * (pp + 2.0)) - 2.0 * a.trace() * b.trace() / (pp * pp * (pp + 2.0));
}

}  // namespace elliprmt
