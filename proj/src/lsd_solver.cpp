#include "elliprmt/lsd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "elliprmt/error.hpp"

namespace elliprmt {

namespace {

double mass_at_zero(const DiscreteMeasure& mu) {
  return mu.atoms().front() == 0.0 ? mu.weights().front() : 0.0;
}

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// The four integrals entering the system and its Jacobian.
struct Moments {
  cplx a;   // int x/(1+g2 x) dH1
  cplx i1;  // int x^2/(1+g2 x)^2 dH1
  cplx b;   // int y/(1+g1 y) dH2
  cplx i2;  // int y^2/(1+g1 y)^2 dH2
};

cplx first_integral(const DiscreteMeasure& mu, cplx g) {
  cplx s = 0.0;
  const auto& at = mu.atoms();
  const auto& w = mu.weights();
  for (std::size_t i = 0; i < at.size(); ++i) s += w[i] * at[i] / (1.0 + g * at[i]);
  return s;
}

cplx second_integral(const DiscreteMeasure& mu, cplx g) {
  cplx s = 0.0;
  const auto& at = mu.atoms();
  const auto& w = mu.weights();
  for (std::size_t i = 0; i < at.size(); ++i) {
    const cplx q = at[i] / (1.0 + g * at[i]);
    s += w[i] * q * q;
  }
  return s;
}

Moments moments(const LsdModel& model, cplx g1, cplx g2) {
  return {first_integral(model.h1, g2), second_integral(model.h1, g2),
          first_integral(model.h2, g1), second_integral(model.h2, g1)};
}

LsdSolution finish(const LsdModel& model, cplx z, cplx g1, cplx g2, long iterations,
                   double residual) {
  LsdSolution s;
  s.z = z;
  s.g1 = g1;
  s.g2 = g2;
  cplx inner = 0.0;
  const auto& at = model.h1.atoms();
  const auto& w = model.h1.weights();
  for (std::size_t i = 0; i < at.size(); ++i) inner += w[i] / (1.0 + g2 * at[i]);
  s.m = -inner / z;
  s.m_under = -1.0 / z - g1 * g2;
  s.iterations = iterations;
  s.residual = residual;
  return s;
}

LsdSolution trivial_solution(const LsdModel& model, cplx z) {
  cplx g1 = 0.0, g2 = 0.0;
  if (model.h1.is_point_mass(0.0, 0.0)) {
    g2 = -model.h2.mean() / z;
  } else {
    g1 = -model.c * model.h1.mean() / z;
  }
  LsdSolution s;
  s.z = z;
  s.g1 = g1;
  s.g2 = g2;
  s.m = -1.0 / z;
  s.m_under = -1.0 / z;
  s.residual = lsd_residual(model, z, g1, g2);
  s.trivial = true;
  return s;
}

// Newton on F(g1, g2) = (z g1 + c A(g2), z g2 + B(g1)). Returns false on breakdown.
bool newton(const LsdModel& model, cplx z, cplx& g1, cplx& g2, double tol, int max_steps,
            long& iterations, double& residual) {
  for (int k = 0; k < max_steps; ++k) {
    const Moments mo = moments(model, g1, g2);
    const cplx f1 = z * g1 + model.c * mo.a;
    const cplx f2 = z * g2 + mo.b;
    residual = std::max(std::abs(f1), std::abs(f2));
    ++iterations;
    if (!finite(f1) || !finite(f2)) return false;
    if (residual < tol) return true;
    const cplx j11 = z, j12 = -model.c * mo.i1, j21 = -mo.i2, j22 = z;
    const cplx det = j11 * j22 - j12 * j21;
    if (std::abs(det) == 0.0 || !finite(det)) return false;
    const cplx d1 = (-f1 * j22 + j12 * f2) / det;
    const cplx d2 = (-j11 * f2 + j21 * f1) / det;
    g1 += d1;
    g2 += d2;
    if (!finite(g1) || !finite(g2)) return false;
  }
  const Moments mo = moments(model, g1, g2);
  residual = std::max(std::abs(z * g1 + model.c * mo.a), std::abs(z * g2 + mo.b));
  return residual < tol;
}

bool plausible(const LsdSolution& s) {
  if (!finite(s.g1) || !finite(s.g2) || !finite(s.m) || !finite(s.m_under)) return false;
  return s.z.imag() <= 0.0 || s.in_uniqueness_set();
}

}  // namespace

bool LsdModel::trivial() const { return h1.is_point_mass(0.0, 0.0) || h2.is_point_mass(0.0, 0.0); }

std::pair<double, double> LsdModel::outer_bracket() const {
  const double sc = std::sqrt(c);
  const double left = c < 1.0 ? h2.min_atom() * h1.min_atom() * (1.0 - sc) * (1.0 - sc) : 0.0;
  const double right = h2.max_atom() * h1.max_atom() * (1.0 + sc) * (1.0 + sc);
  return {left, right};
}

double LsdModel::zero_mass() const {
  const double rank_s = 1.0 - mass_at_zero(h1);
  const double rank_companion = (1.0 - mass_at_zero(h2)) / c;
  return std::max(0.0, 1.0 - std::min(rank_s, rank_companion));
}

bool LsdSolution::in_uniqueness_set() const {
  const double slack = -1e-12;
  return m.imag() > slack && (z * g1).imag() > slack && g2.imag() > slack;
}

double lsd_residual(const LsdModel& model, cplx z, cplx g1, cplx g2) {
  const cplx r1 = z * g1 + model.c * first_integral(model.h1, g2);
  const cplx r2 = z * g2 + first_integral(model.h2, g1);
  return std::max(std::abs(r1), std::abs(r2));
}

LsdSolution solve_lsd(const LsdModel& model, cplx z, const SolverOptions& opts,
                      std::optional<std::pair<cplx, cplx>> guess) {
  if (!(z.imag() > 0.0)) throw DomainError("solve_lsd needs Im z > 0");
  if (!(opts.tol > 0.0 && opts.tol <= 1e-6)) throw DomainError("solver tolerance must lie in (0, 1e-6]");
  if (model.trivial()) return trivial_solution(model, z);

  const cplx start = -1.0 / z;
  cplx g1 = guess ? guess->first : start;
  cplx g2 = guess ? guess->second : start;
  const double w = opts.damping;
  long it = 0;
  double res = lsd_residual(model, z, g1, g2);

  auto damped = [&](long budget) {
    for (long k = 0; k < budget && res >= opts.tol; ++k, ++it) {
      const cplx g1n = -model.c * first_integral(model.h1, g2) / z;
      g1 = (1.0 - w) * g1 + w * g1n;
      const cplx g2n = -first_integral(model.h2, g1) / z;
      g2 = (1.0 - w) * g2 + w * g2n;
      res = lsd_residual(model, z, g1, g2);
      if (!std::isfinite(res)) {
        g1 = start;
        g2 = start;
        res = lsd_residual(model, z, g1, g2);
      }
    }
  };

  auto accept = [&](cplx a, cplx b, long iters, double r) -> std::optional<LsdSolution> {
    LsdSolution s = finish(model, z, a, b, iters, r);
    if (plausible(s)) return s;
    return std::nullopt;
  };

  damped(std::min(opts.newton_after, opts.max_iter));
  {
    // Newton: either polishes a converged iterate or rescues a slow one.
    cplx a = g1, b = g2;
    long iters = it;
    double r = res;
    if (newton(model, z, a, b, std::min(opts.tol, 1e-13), 60, iters, r) || r < opts.tol) {
      if (auto s = accept(a, b, iters, r)) return *s;
    }
    if (res < opts.tol) {
      if (auto s = accept(g1, g2, it, res)) return *s;
    }
  }
  if (guess) {
    // A poor seed can sit in the basin of a spurious root; restart cleanly.
    g1 = start;
    g2 = start;
    res = lsd_residual(model, z, g1, g2);
  }
  damped(opts.max_iter - it);
  if (res < opts.tol) {
    cplx a = g1, b = g2;
    long iters = it;
    double r = res;
    newton(model, z, a, b, std::min(opts.tol, 1e-13), 8, iters, r);
    if (r < res) {
      if (auto s = accept(a, b, iters, r)) return *s;
    }
    if (auto s = accept(g1, g2, it, res)) return *s;
  }
  std::ostringstream msg;
  msg << "LSD solver did not converge at z = " << z.real() << (z.imag() < 0 ? "" : "+") << z.imag()
      << "i after " << it << " iterations (residual " << res << ")";
  throw ConvergenceError(msg.str(), res, it);
}

LsdSolution solve_lsd_real(const LsdModel& model, double x, const SolverOptions& opts) {
  if (x == 0.0 || !std::isfinite(x)) throw DomainError("solve_lsd_real needs a finite nonzero x");
  if (model.trivial()) return trivial_solution(model, cplx(x, 0.0));

  static constexpr double ladder[] = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  std::optional<std::pair<cplx, cplx>> seed;
  cplx prev1, prev2, last1, last2;
  for (double eps : ladder) {
    const LsdSolution s = solve_lsd(model, cplx(x, eps), opts, seed);
    seed = std::make_pair(s.g1, s.g2);
    prev1 = last1;
    prev2 = last2;
    last1 = s.g1;
    last2 = s.g2;
  }
  // Richardson in eps (ratio 10) removes the linear term.
  const cplx ex1 = (10.0 * last1 - prev1) / 9.0;
  const cplx ex2 = (10.0 * last2 - prev2) / 9.0;
  if (std::abs(ex1.imag()) > 1e-7 || std::abs(ex2.imag()) > 1e-7) {
    std::ostringstream msg;
    msg << "x = " << x << " lies inside the bulk (Im g1 = " << ex1.imag() << ", Im g2 = " << ex2.imag()
        << ")";
    throw DomainError(msg.str());
  }
  cplx g1 = ex1.real(), g2 = ex2.real();
  long iters = 0;
  double res = 0.0;
  const cplx z(x, 0.0);
  if (!newton(model, z, g1, g2, 1e-14 * std::max(1.0, std::abs(x)), 50, iters, res) &&
      !(res < 1e-10)) {
    std::ostringstream msg;
    msg << "real-axis Newton failed at x = " << x << " (residual " << res << ")";
    throw DomainError(msg.str());
  }
  if (std::abs(g1 - ex1.real()) > 1e-5 * (1.0 + std::abs(g1)) ||
      std::abs(g2 - ex2.real()) > 1e-5 * (1.0 + std::abs(g2))) {
    std::ostringstream msg;
    msg << "real-axis polish left the extrapolated branch at x = " << x;
    throw DomainError(msg.str());
  }
  return finish(model, z, cplx(g1.real(), 0.0), cplx(g2.real(), 0.0), iters, res);
}

LsdSolution evaluate_lsd(const LsdModel& model, cplx z, const SolverOptions& opts,
                         std::optional<std::pair<cplx, cplx>> guess) {
  if (z.imag() > 0.0) return solve_lsd(model, z, opts, guess);
  if (z.imag() < 0.0) {
    if (guess) guess = std::make_pair(std::conj(guess->first), std::conj(guess->second));
    LsdSolution s = solve_lsd(model, std::conj(z), opts, guess);
    s.z = z;
    s.g1 = std::conj(s.g1);
    s.g2 = std::conj(s.g2);
    s.m = std::conj(s.m);
    s.m_under = std::conj(s.m_under);
    return s;
  }
  return solve_lsd_real(model, z.real(), opts);
}

LsdDerivatives derivatives(const LsdModel& model, const LsdSolution& sol) {
  const cplx z = sol.z;
  const Moments mo = moments(model, sol.g1, sol.g2);
  const cplx det = z * z - model.c * mo.i1 * mo.i2;
  const double scale = std::max(std::abs(z * z), std::abs(model.c * mo.i1 * mo.i2));
  if (!(std::abs(det) > 1e-13 * scale)) {
    throw DegenerateError("derivative system is singular (bulk edge or degenerate point)");
  }
  LsdDerivatives d;
  d.g1p = (-sol.g1 * z - model.c * mo.i1 * sol.g2) / det;
  d.g2p = (-z * sol.g2 - mo.i2 * sol.g1) / det;
  d.m_under_p = 1.0 / (z * z) - d.g1p * sol.g2 - sol.g1 * d.g2p;
  d.mp = (d.m_under_p - (1.0 - model.c) / (z * z)) / model.c;
  d.z_g2_p = sol.g2 + z * d.g2p;
  d.z_m_under_p = sol.m_under + z * d.m_under_p;
  d.ratio_p = (d.m_under_p * sol.g2 - sol.m_under * d.g2p) / (sol.g2 * sol.g2);
  return d;
}

cplx anisotropic_stieltjes(const Anisotropy& aniso, cplx z, cplx g2) {
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < aniso.sigma_eigenvalues.size(); ++i) {
    const cplx den = 1.0 + g2 * aniso.sigma_eigenvalues(i);
    if (std::abs(den) < 1e-300) throw PoleError("I + g2 Sigma is singular");
    s += aniso.pi_weights(i) / den;
  }
  return -s / z;
}

StieltjesInversion stieltjes_invert(const LsdModel& model, const std::vector<double>& grid,
                                    double eps, const std::optional<Anisotropy>& aniso,
                                    const SolverOptions& opts) {
  if (grid.empty()) throw DomainError("stieltjes_invert needs a nonempty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) throw DomainError("grid must be ascending");
  if (!(eps >= 1e-5 && eps <= 1e-2)) throw DomainError("eps must lie in [1e-5, 1e-2]");

  StieltjesInversion out;
  out.x = grid;
  out.zero_mass = model.zero_mass();
  if (aniso && out.zero_mass > 0.0 && !model.trivial()) {
    // -z s(z) at z -> 0 along the imaginary axis.
    const cplx z0(0.0, 1e-7);
    const LsdSolution s0 = solve_lsd(model, z0, opts);
    out.zero_mass = std::clamp((-z0 * anisotropic_stieltjes(*aniso, z0, s0.g2)).real(), 0.0, 1.0);
  }

  std::optional<std::pair<cplx, cplx>> seed;
  out.density.reserve(grid.size());
  for (double x : grid) {
    const cplx z(x, eps);
    LsdSolution s;
    try {
      s = solve_lsd(model, z, opts, seed);
    } catch (const ConvergenceError& e) {
      std::ostringstream msg;
      msg << "stieltjes_invert failed at x = " << x << ": " << e.what();
      throw ConvergenceError(msg.str(), e.last_residual(), e.iterations());
    }
    seed = std::make_pair(s.g1, s.g2);
    cplx value = aniso ? anisotropic_stieltjes(*aniso, z, s.g2) : s.m;
    value += out.zero_mass / z;  // remove the atom at zero
    out.density.push_back(std::max(0.0, value.imag()) / std::numbers::pi);
  }

  out.cdf.resize(grid.size());
  double acc = grid.front() >= 0.0 ? out.zero_mass : 0.0;
  out.cdf[0] = acc;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    acc += 0.5 * (out.density[i] + out.density[i - 1]) * (grid[i] - grid[i - 1]);
    if (grid[i - 1] < 0.0 && grid[i] >= 0.0) acc += out.zero_mass;
    out.cdf[i] = acc;
  }
  out.total_mass = acc;
  return out;
}

void write_density_csv(std::ostream& out, const StieltjesInversion& inv) {
  out << "x,density,cdf\n";
  out.precision(17);
  for (std::size_t i = 0; i < inv.x.size(); ++i) {
    out << inv.x[i] << ',' << inv.density[i] << ',' << inv.cdf[i] << '\n';
  }
}

bool outside_support(const LsdModel& model, double x, const SolverOptions& opts) {
  if (x == 0.0) return false;
  try {
    solve_lsd_real(model, x, opts);
    return true;
  } catch (const DomainError&) {
    return false;
  } catch (const ConvergenceError&) {
    return false;
  }
}

namespace {

double bisect_upper_edge(const LsdModel& model, const SolverOptions& opts) {
  const double bracket = model.outer_bracket().second;
  double outside = 1.2 * bracket;
  for (int k = 0; k < 10 && !outside_support(model, outside, opts); ++k) outside *= 2.0;
  if (!outside_support(model, outside, opts)) throw Error("could not bracket the upper bulk edge");

  const double step = 0.02 * bracket;
  double inside = outside - step;
  while (inside > 0.0 && outside_support(model, inside, opts)) {
    outside = inside;
    inside -= step;
  }
  if (inside <= 0.0) inside = 0.0;
  for (int k = 0; k < 60 && outside - inside > 1e-12 * bracket; ++k) {
    const double mid = 0.5 * (inside + outside);
    if (mid > 0.0 && outside_support(model, mid, opts)) {
      outside = mid;
    } else {
      inside = mid;
    }
  }
  return outside;
}

double third_integral(const DiscreteMeasure& mu, double g) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double q = mu.atoms()[i] / (1.0 + g * mu.atoms()[i]);
    s += mu.weights()[i] * q * q * q;
  }
  return s;
}

// Newton on (g1, g2, x) for the two equations plus x^2 - c I1 I2 = 0.
bool polish_fold(const LsdModel& model, BulkEdge& e) {
  double x = e.x, g1 = e.g1, g2 = e.g2;
  const double c = model.c;
  for (int k = 0; k < 50; ++k) {
    const double a = first_integral(model.h1, g2).real();
    const double i1 = second_integral(model.h1, g2).real();
    const double b = first_integral(model.h2, g1).real();
    const double i2 = second_integral(model.h2, g1).real();
    Eigen::Vector3d f(x * g1 + c * a, x * g2 + b, x * x - c * i1 * i2);
    if (!f.allFinite()) return false;
    if (f.cwiseAbs().maxCoeff() < 1e-14 * std::max(1.0, x * x)) {
      e = {x, g1, g2, true};
      return true;
    }
    Eigen::Matrix3d j;
    j << x, -c * i1, g1,
        -i2, x, g2,
        2.0 * c * i1 * third_integral(model.h2, g1), 2.0 * c * i2 * third_integral(model.h1, g2), 2.0 * x;
    const Eigen::Vector3d step = j.fullPivLu().solve(-f);
    if (!step.allFinite()) return false;
    g1 += step(0);
    g2 += step(1);
    x += step(2);
  }
  return false;
}

}  // namespace

BulkEdge upper_bulk_edge_point(const LsdModel& model, const SolverOptions& opts) {
  if (model.trivial()) return {};
  const double rough = bisect_upper_edge(model, opts);
  const LsdSolution s = solve_lsd_real(model, rough, opts);
  BulkEdge e{rough, s.g1.real(), s.g2.real(), false};
  BulkEdge polished = e;
  if (polish_fold(model, polished) && std::abs(polished.x - rough) < 1e-4 * rough && polished.x <= rough) {
    return polished;
  }
  return e;
}

double upper_bulk_edge(const LsdModel& model, const SolverOptions& opts) {
  return upper_bulk_edge_point(model, opts).x;
}

std::vector<std::pair<double, double>> detect_support(const LsdModel& model, double lo, double hi,
                                                      int steps, double eps,
                                                      const SolverOptions& opts) {
  if (steps < 1 || !(hi > lo)) throw DomainError("detect_support needs lo < hi and steps >= 1");
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / steps;
  const StieltjesInversion inv = stieltjes_invert(model, grid, eps, std::nullopt, opts);
  const double peak = *std::max_element(inv.density.begin(), inv.density.end());
  const double tau = std::max(1e-3 * peak, 1e-9);

  auto bisect = [&](double out_x, double in_x) {
    for (int k = 0; k < 50 && std::abs(out_x - in_x) > 1e-12 * (1.0 + std::abs(in_x)); ++k) {
      const double mid = 0.5 * (out_x + in_x);
      if (outside_support(model, mid, opts)) {
        out_x = mid;
      } else {
        in_x = mid;
      }
    }
    return 0.5 * (out_x + in_x);
  };

  // Smoothing at eps spreads density slightly past the edges, so the thresholded
  // run may start on points that still carry a real solution. Walk inward first.
  std::vector<std::pair<double, double>> intervals;
  std::size_t i = 0;
  while (i < grid.size()) {
    if (inv.density[i] <= tau) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size() && inv.density[j + 1] > tau) ++j;
    std::size_t a = i, b = j;
    while (a <= b && outside_support(model, grid[a], opts)) ++a;
    while (b > a && outside_support(model, grid[b], opts)) --b;
    if (a <= b) {
      double left = grid[a], right = grid[b];
      if (a > 0 && outside_support(model, grid[a - 1], opts)) left = bisect(grid[a - 1], grid[a]);
      if (b + 1 < grid.size() && outside_support(model, grid[b + 1], opts)) {
        right = bisect(grid[b + 1], grid[b]);
      }
      intervals.emplace_back(left, right);
    }
    i = j + 1;
  }
  return intervals;
}

}  // namespace elliprmt
