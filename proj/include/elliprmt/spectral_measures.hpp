#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace elliprmt {

using cplx = std::complex<double>;

/// Finite discrete probability measure: sorted atoms with merged duplicates.
///
/// Used for both the population spectrum H1 and the law H2 of the normalized
/// squared radius. Construction validates and normalizes the weights, so a
/// DiscreteMeasure that exists is always a probability measure.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteMeasure point_mass(double atom);
  /// Uniform weights 1/k on the given values (an ESD).
  static DiscreteMeasure empirical(std::span<const double> values);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  double min_atom() const { return atoms_.front(); }
  double max_atom() const { return atoms_.back(); }
  bool is_point_mass(double at, double tol = 1e-12) const;
  bool all_nonnegative() const { return atoms_.front() >= 0.0; }

  double mean() const;
  double second_moment() const;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// Sum_j w_j f(a_j). Throws DomainError naming the atom if f is not finite there.
cplx measure_integral(const DiscreteMeasure& mu, const std::function<cplx(double)>& f);
double measure_integral_real(const DiscreteMeasure& mu, const std::function<double(double)>& f);

enum class RadiusKind { deterministic, two_point, chi_square, gamma };

std::string to_string(RadiusKind kind);
RadiusKind radius_kind_from_string(const std::string& name);

/// Law of the squared radius rho^2 with E rho^2 = p and Var rho^2 = nu_p.
struct RadiusLaw {
  RadiusKind kind = RadiusKind::two_point;
  int p = 1;
  double nu_p = 0.0;

  /// m_p = E rho^4 = nu_p + p^2.
  double fourth_moment() const { return nu_p + static_cast<double>(p) * p; }
  /// Scale sqrt(p^2 / m_p) applied to the sample covariance matrix.
  double normalization() const;
  /// Bounded support (required of H2); the gamma kind is non-conforming.
  bool conforming() const { return kind != RadiusKind::gamma; }

  /// Throws DomainError if the parameters are inconsistent with the kind.
  void validate() const;
};

/// Build a radius law; chi-square forces nu_p = 2p and deterministic forces nu_p = 0.
RadiusLaw make_radius_law(RadiusKind kind, int p, double nu_p);

/// Law of rho^2 / sqrt(m_p): exact for deterministic/two-point, a moment-matched
/// discretization on equal-probability quantile midpoints otherwise.
DiscreteMeasure radius_law_to_h2(const RadiusLaw& law, int quantile_atoms = 512);

/// `atom,weight` CSV with a header row. Line numbers in errors are 1-based.
DiscreteMeasure read_measure_csv(std::istream& in);
DiscreteMeasure read_measure_csv_file(const std::string& path);
void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu);

}  // namespace elliprmt
