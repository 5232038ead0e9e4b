#include "elliprmt/spiked_theory.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "elliprmt/error.hpp"
#include "elliprmt/fluctuation_kernel.hpp"

namespace elliprmt {

namespace {

// First point above the edge where the real-axis continuation succeeds.
double first_outside(const LsdModel& model, double edge, const SolverOptions& opts) {
  double gap = 1e-6;
  for (int k = 0; k < 8; ++k, gap *= 10.0) {
    const double x = edge * (1.0 + gap);
    if (outside_support(model, x, opts)) return x;
  }
  throw Error("no real solution found above the bulk edge");
}

double g2_real(const LsdModel& model, double x, const SolverOptions& opts) {
  return solve_lsd_real(model, x, opts).g2.real();
}

void require_nontrivial(const LsdModel& model) {
  if (model.trivial()) throw DomainError("spike predictions need a nontrivial model");
}

}  // namespace

double detectability_threshold(const LsdModel& model, const SolverOptions& opts) {
  require_nontrivial(model);
  const BulkEdge edge = upper_bulk_edge_point(model, opts);
  if (edge.polished) return -1.0 / edge.g2;
  return -1.0 / g2_real(model, first_outside(model, edge.x, opts), opts);
}

Transition transition(const LsdModel& model, double alpha, const SolverOptions& opts) {
  require_nontrivial(model);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("spike alpha must be positive");
  Transition t;
  const BulkEdge edge = upper_bulk_edge_point(model, opts);
  t.edge = edge.x;
  const double lo = first_outside(model, t.edge, opts);
  const double target = -1.0 / alpha;
  auto f = [&](double x) { return g2_real(model, x, opts) - target; };
  const double f_lo = f(lo);
  if (f_lo >= 0.0) {
    const double threshold = edge.polished ? -1.0 / edge.g2 : -1.0 / (f_lo + target);
    std::ostringstream msg;
    msg << "spike " << alpha << " is below the detectability threshold " << threshold;
    throw SubcriticalSpikeError(msg.str(), threshold);
  }
  const double hi = t.edge * 10.0 + alpha * 10.0;
  const double f_hi = f(hi);
  if (f_hi <= 0.0) throw Error("transition bracket does not contain a root");

  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  t.theta = 0.5 * (a + b);
  const LsdSolution sol = solve_lsd_real(model, t.theta, opts);
  t.residual = std::abs(sol.g2.real() - target);
  if (t.residual > 1e-10) {
    throw ConvergenceError("transition root did not reach the residual tolerance", t.residual,
                           static_cast<long>(max_iter));
  }
  const LsdDerivatives d = derivatives(model, sol);
  t.g_prime = 1.0 / (alpha * alpha * d.g2p.real());
  return t;
}

SpikePrediction predict_spike(const LsdModel& model, double alpha, const SolverOptions& opts) {
  const Transition t = transition(model, alpha, opts);
  const LsdSolution sol = solve_lsd_real(model, t.theta, opts);
  const LsdDerivatives d = derivatives(model, sol);
  const double th = t.theta;
  SpikePrediction p;
  p.alpha = alpha;
  p.theta = th;
  p.g_prime = t.g_prime;
  p.edge = t.edge;
  p.light_tail = model.light_tail();
  const double theta_g2_p = (sol.g2 + th * d.g2p).real();
  const double theta_mu_p = (sol.m_under + th * d.m_under_p).real();
  // Radius term: (m_/g2)'/g1' rescaled by (theta g2 s / g2')^2, s the radius response.
  const cplx s = kernel_point(model, cplx(th, 0.0), opts).radius_scale;
  const cplx lam = th * sol.g2 * s / d.g2p;
  p.sigma_delta_sq = 2.0 * theta_g2_p / (theta_mu_p * d.g2p.real() * th * th) +
                     (lam * lam * d.ratio_p / d.g1p).real();
  p.overlap_sq = t.g_prime / (th / alpha);
  return p;
}

double sigma_delta_sq(const LsdModel& model, double alpha, const SolverOptions& opts) {
  return predict_spike(model, alpha, opts).sigma_delta_sq;
}

double overlap_sq(const LsdModel& model, double alpha, const SolverOptions& opts) {
  return predict_spike(model, alpha, opts).overlap_sq;
}

double psi_light_tail(const LsdModel& model, double alpha) {
  const double s = measure_integral_real(model.h1, [&](double t) { return t / (alpha - t); });
  return alpha + model.c * alpha * s;
}

double overlap_light_tail(const LsdModel& model, double alpha) {
  const double s1 = measure_integral_real(model.h1, [&](double t) { return t / (alpha - t); });
  const double s2 = measure_integral_real(model.h1, [&](double t) { return t * t / ((alpha - t) * (alpha - t)); });
  return (1.0 - model.c * s2) / (1.0 + model.c * s1);
}

double sigma_delta_sq_light_tail(const LsdModel& model, double theta, const SolverOptions& opts) {
  const LsdSolution sol = solve_lsd_real(model, theta, opts);
  const LsdDerivatives d = derivatives(model, sol);
  return 2.0 / (d.m_under_p.real() * theta * theta);
}

GoeProfile::GoeProfile(int k, double sigma11_sq, double sigma12_sq) : k_(k), s11_(sigma11_sq), s12_(sigma12_sq) {
  if (k < 1) throw DomainError("GOE profile needs K >= 1");
}

double GoeProfile::cov(int i, int j, int k, int l) const {
  for (int idx : {i, j, k, l}) {
    if (idx < 0 || idx >= k_) throw DomainError("GOE profile index out of range");
  }
  if (i == j && j == k && k == l) return s11_;
  if (i != j && ((i == k && j == l) || (i == l && j == k))) return s12_;
  return 0.0;
}

GoeProfile goe_covariance_profile(const LsdModel& model, double z, int k, const SolverOptions& opts) {
  require_nontrivial(model);
  if (!outside_support(model, z, opts) || z <= upper_bulk_edge(model, opts)) {
    throw DomainError("GOE profile needs real z above the bulk edge");
  }
  const DiagonalKernels dk = kernels_diagonal(model, cplx(z, 0.0), opts);
  return GoeProfile(k, dk.sigma11_sq.real(), dk.sigma12_sq.real());
}

}  // namespace elliprmt
