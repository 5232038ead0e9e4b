#include "elliprmt/spectral_measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "elliprmt/error.hpp"

namespace elliprmt {

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty()) throw DomainError("measure must have at least one atom");
  if (atoms.size() != weights.size()) {
    throw DomainError("measure atoms and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i])) {
      throw DomainError("measure atom " + std::to_string(i) + " is not finite");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw DomainError("measure weight " + std::to_string(i) + " is negative or not finite");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "measure weights sum to " << total << ", expected 1";
    throw DomainError(msg.str());
  }

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  for (std::size_t idx : order) {
    if (!atoms_.empty() && atoms_.back() == atoms[idx]) {
      weights_.back() += weights[idx];
    } else {
      atoms_.push_back(atoms[idx]);
      weights_.push_back(weights[idx]);
    }
  }
  // Zero-weight atoms carry no information; keep at least one.
  std::vector<double> a, w;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (weights_[i] > 0.0) {
      a.push_back(atoms_[i]);
      w.push_back(weights_[i]);
    }
  }
  if (a.empty()) throw DomainError("measure has no positive weight");
  atoms_ = std::move(a);
  weights_ = std::move(w);
  const double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  for (double& x : weights_) x /= sum;
}

DiscreteMeasure DiscreteMeasure::point_mass(double atom) { return DiscreteMeasure({atom}, {1.0}); }

DiscreteMeasure DiscreteMeasure::empirical(std::span<const double> values) {
  std::vector<double> atoms(values.begin(), values.end());
  std::vector<double> weights(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

bool DiscreteMeasure::is_point_mass(double at, double tol) const {
  return atoms_.size() == 1 && std::abs(atoms_.front() - at) <= tol;
}

double DiscreteMeasure::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) s += weights_[i] * atoms_[i];
  return s;
}

double DiscreteMeasure::second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) s += weights_[i] * atoms_[i] * atoms_[i];
  return s;
}

cplx measure_integral(const DiscreteMeasure& mu, const std::function<cplx(double)>& f) {
  cplx s = 0.0;
  const auto& a = mu.atoms();
  const auto& w = mu.weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const cplx v = f(a[i]);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      std::ostringstream msg;
      msg << "integrand is not finite at atom " << a[i];
      throw DomainError(msg.str());
    }
    s += w[i] * v;
  }
  return s;
}

double measure_integral_real(const DiscreteMeasure& mu, const std::function<double(double)>& f) {
  return measure_integral(mu, [&](double x) { return cplx(f(x), 0.0); }).real();
}

std::string to_string(RadiusKind kind) {
  switch (kind) {
    case RadiusKind::deterministic: return "deterministic";
    case RadiusKind::two_point: return "two-point";
    case RadiusKind::chi_square: return "chi-square";
    case RadiusKind::gamma: return "gamma";
  }
  return "unknown";
}

RadiusKind radius_kind_from_string(const std::string& name) {
  if (name == "deterministic") return RadiusKind::deterministic;
  if (name == "two-point") return RadiusKind::two_point;
  if (name == "chi-square") return RadiusKind::chi_square;
  if (name == "gamma") return RadiusKind::gamma;
  throw ConfigError("unknown radius kind '" + name + "'");
}

double RadiusLaw::normalization() const {
  return static_cast<double>(p) / std::sqrt(fourth_moment());
}

void RadiusLaw::validate() const {
  if (p < 1) throw DomainError("radius law needs p >= 1");
  if (!(nu_p >= 0.0) || !std::isfinite(nu_p)) throw DomainError("radius law needs nu_p >= 0");
  switch (kind) {
    case RadiusKind::deterministic:
      if (nu_p != 0.0) throw DomainError("deterministic radius requires nu_p = 0");
      break;
    case RadiusKind::two_point:
      if (std::sqrt(nu_p) > static_cast<double>(p)) {
        throw DomainError("two-point radius requires sqrt(nu_p) <= p (atoms p +- sqrt(nu_p) must be >= 0)");
      }
      break;
    case RadiusKind::chi_square:
      if (std::abs(nu_p - 2.0 * p) > 1e-9 * p) throw DomainError("chi-square radius requires nu_p = 2p");
      break;
    case RadiusKind::gamma:
      if (nu_p <= 0.0) throw DomainError("gamma radius requires nu_p > 0");
      break;
  }
}

RadiusLaw make_radius_law(RadiusKind kind, int p, double nu_p) {
  RadiusLaw law{kind, p, nu_p};
  if (kind == RadiusKind::chi_square) law.nu_p = 2.0 * p;
  if (kind == RadiusKind::deterministic) law.nu_p = 0.0;
  // nu_p = 0 is deterministic whatever the requested kind.
  if (kind == RadiusKind::two_point && nu_p == 0.0) law.kind = RadiusKind::deterministic;
  law.validate();
  return law;
}

DiscreteMeasure radius_law_to_h2(const RadiusLaw& law, int quantile_atoms) {
  law.validate();
  const double p = law.p;
  const double root_m = std::sqrt(law.fourth_moment());
  switch (law.kind) {
    case RadiusKind::deterministic:
      return DiscreteMeasure::point_mass(p / root_m);
    case RadiusKind::two_point: {
      const double s = std::sqrt(law.nu_p);
      if (s == 0.0) return DiscreteMeasure::point_mass(p / root_m);
      return DiscreteMeasure({(p - s) / root_m, (p + s) / root_m}, {0.5, 0.5});
    }
    case RadiusKind::chi_square:
    case RadiusKind::gamma: {
      if (quantile_atoms < 2) throw DomainError("need at least two quantile atoms");
      const double shape = p * p / law.nu_p;
      const double scale = law.nu_p / p;
      boost::math::gamma_distribution<double> dist(shape, scale);
      const double k = quantile_atoms;
      // Conditional mean of each equal-probability bin: E[X; X <= q] = shape*scale*P(shape+1, q/scale).
      std::vector<double> atoms(static_cast<std::size_t>(quantile_atoms));
      double lower = 0.0;
      for (int i = 0; i < quantile_atoms; ++i) {
        const double upper = i + 1 == quantile_atoms
                                 ? 1.0
                                 : boost::math::gamma_p(shape + 1.0, boost::math::quantile(dist, (i + 1) / k) / scale);
        atoms[static_cast<std::size_t>(i)] = shape * scale * (upper - lower) * k / root_m;
        lower = upper;
      }
      // Bin means keep the mean exact but lose the within-bin variance. Restore it by
      // pushing the top atom up and the atom nearest the mean down by the same amount.
      double mean = 0.0;
      for (double a : atoms) mean += a / k;
      double var = 0.0;
      for (double a : atoms) var += (a - mean) * (a - mean) / k;
      const double shortfall = law.nu_p / (root_m * root_m) - var;
      if (shortfall > 0.0) {
        auto mid = std::min_element(atoms.begin(), atoms.end(),
                                    [&](double a, double b) { return std::abs(a - mean) < std::abs(b - mean); });
        const double gap = atoms.back() - *mid;
        const double u = 0.5 * (-gap + std::sqrt(gap * gap + 2.0 * k * shortfall));
        atoms.back() += u;
        *mid -= u;
        if (*mid < 0.0) throw DomainError("moment-matched radius discretization produced a negative atom");
      }
      std::vector<double> weights(atoms.size(), 1.0 / k);
      return DiscreteMeasure(std::move(atoms), std::move(weights));
    }
  }
  throw DomainError("unreachable radius kind");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_field(const std::string& text, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("line " + std::to_string(line) + ": cannot parse number '" + text + "'");
}

}  // namespace

DiscreteMeasure read_measure_csv(std::istream& in) {
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::vector<double> atoms, weights;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header_seen) {
      if (t != "atom,weight") {
        throw ConfigError("line " + std::to_string(lineno) + ": expected header 'atom,weight'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected two columns");
    }
    atoms.push_back(parse_field(trim(t.substr(0, comma)), lineno));
    weights.push_back(parse_field(trim(t.substr(comma + 1)), lineno));
  }
  if (!header_seen) throw ConfigError("line 1: missing header 'atom,weight'");
  if (atoms.empty()) throw ConfigError("line " + std::to_string(lineno) + ": measure has no rows");
  try {
    return DiscreteMeasure(std::move(atoms), std::move(weights));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid measure: ") + e.what());
  }
}

DiscreteMeasure read_measure_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measure file '" + path + "'");
  return read_measure_csv(in);
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu) {
  out << "atom,weight\n";
  out.precision(17);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    out << mu.atoms()[i] << ',' << mu.weights()[i] << '\n';
  }
}

}  // namespace elliprmt
