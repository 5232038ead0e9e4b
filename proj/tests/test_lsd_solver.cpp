#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "elliprmt/covariance.hpp"
#include "elliprmt/error.hpp"
#include "elliprmt/lsd_solver.hpp"

using namespace elliprmt;

namespace {

cplx mp_stieltjes(double c, cplx z) {
  const cplx b = z - 1.0 + c;
  const cplx disc = std::sqrt(b * b - 4.0 * c * z);
  const cplx r1 = (-b + disc) / (2.0 * c * z);
  const cplx r2 = (-b - disc) / (2.0 * c * z);
  return r1.imag() > 0.0 ? r1 : r2;
}

LsdModel mp(double c) { return {c, DiscreteMeasure::point_mass(1.0), DiscreteMeasure::point_mass(1.0)}; }

LsdModel heavy(double c) {
  return {c, DiscreteMeasure::point_mass(1.0), DiscreteMeasure({0.0, std::sqrt(2.0)}, {0.5, 0.5})};
}

LsdModel mixed() {
  return {0.3, DiscreteMeasure({0.5, 1.0, 3.0}, {0.3, 0.5, 0.2}),
          DiscreteMeasure({0.4, 1.1, 1.6}, {0.25, 0.5, 0.25})};
}

void check_identities(const LsdModel& model, const LsdSolution& s, double tol) {
  CHECK(std::abs(s.m_under - (-1.0 / s.z - s.g1 * s.g2)) < tol);
  CHECK(std::abs(s.m_under - (-(1.0 - model.c) / s.z + model.c * s.m)) < tol);
  CHECK(s.residual < 1e-12);
}

}  // namespace

TEST_CASE("MP closed form") {
  for (double c : {0.1, 0.5, 1.0, 2.0}) {
    for (cplx z : {cplx(1, 1), cplx(0.2, 0.1), cplx(3.5, 2), cplx(-1, 0.5)}) {
      const LsdSolution s = solve_lsd(mp(c), z);
      CHECK(std::abs(s.m - mp_stieltjes(c, z)) < 1e-10);
      CHECK(s.in_uniqueness_set());
      check_identities(mp(c), s, 1e-11);
      CHECK(std::abs(s.m_under - s.g2) < 1e-11);
    }
  }
}

TEST_CASE("trivial scenarios") {
  LsdModel zero_pop{0.7, DiscreteMeasure::point_mass(0.0), DiscreteMeasure({0.5, 1.5}, {0.5, 0.5})};
  const LsdSolution s = solve_lsd(zero_pop, cplx(0, 2));
  CHECK(s.trivial);
  CHECK(std::abs(s.m - cplx(0, 0.5)) < 1e-15);
  LsdModel zero_radius{0.7, DiscreteMeasure::point_mass(2.0), DiscreteMeasure::point_mass(0.0)};
  CHECK(solve_lsd(zero_radius, cplx(1, 1)).trivial);
  CHECK(zero_pop.zero_mass() == 1.0);
}

TEST_CASE("general measures satisfy the system and the identities") {
  for (const LsdModel& model : {heavy(0.5), heavy(2.0), mixed()}) {
    for (cplx z : {cplx(1, 1), cplx(0.5, 0.05), cplx(2.5, 0.01), cplx(-0.5, 0.2)}) {
      const LsdSolution s = solve_lsd(model, z);
      CHECK(s.in_uniqueness_set());
      CHECK(lsd_residual(model, z, s.g1, s.g2) < 1e-12);
      check_identities(model, s, 1e-10);
    }
  }
}

TEST_CASE("preconditions") {
  CHECK_THROWS_AS(solve_lsd(mp(0.5), cplx(1, 0)), DomainError);
  CHECK_THROWS_AS(solve_lsd(mp(0.5), cplx(1, 1), SolverOptions{1e-3}), DomainError);
  SolverOptions tiny;
  tiny.max_iter = 3;
  tiny.newton_after = 3;
  tiny.tol = 1e-15;
  try {
    solve_lsd(heavy(0.5), cplx(1.0, 1e-4), tiny);
  } catch (const ConvergenceError& e) {
    CHECK(e.last_residual() > 0.0);
  }
}

TEST_CASE("real axis: light tail at x = 60/7") {
  const LsdModel model = mp(0.5);
  const double x = 60.0 / 7.0;
  const LsdSolution s = solve_lsd_real(model, x);
  CHECK(s.g2.imag() == 0.0);
  CHECK(std::abs(s.m_under - s.g2) < 1e-8);
  // g2(psi(alpha)) = -1/alpha with alpha = 8.
  CHECK(s.g2.real() == doctest::Approx(-1.0 / 8.0).epsilon(1e-10));
  // MP closed form on the real axis.
  const cplx m_mp = mp_stieltjes(0.5, cplx(x, 1e-14));
  CHECK(std::abs(s.m - cplx(m_mp.real(), 0.0)) < 1e-9);
}

TEST_CASE("real axis: large x and inside the bulk") {
  const LsdModel model = heavy(0.5);
  const double x = 1e4;
  const LsdSolution s = solve_lsd_real(model, x);
  CHECK(std::abs(s.m_under.real() * x + 1.0) < 1e-3);
  CHECK(std::abs(s.g1) < 1e-3);
  CHECK(std::abs(s.g2) < 1e-3);
  const LsdDerivatives d = derivatives(model, s);
  CHECK(d.g2p.real() > 0.0);
  CHECK(d.g2p.real() * x * x == doctest::Approx(model.h2.mean()).epsilon(1e-3));
  CHECK_THROWS_AS(solve_lsd_real(model, 1.0), DomainError);
  CHECK_THROWS_AS(solve_lsd_real(model, 0.0), DomainError);
  CHECK_FALSE(outside_support(model, 1.0));
}

TEST_CASE("derivatives against central differences") {
  const double h = 1e-5;
  for (const LsdModel& model : {mp(0.5), heavy(0.5), mixed()}) {
    for (cplx z : {cplx(1, 1), cplx(2, 0.5), cplx(0.3, 0.8), cplx(6, 0.2)}) {
      const LsdSolution s = solve_lsd(model, z);
      const LsdDerivatives d = derivatives(model, s);
      const LsdSolution sp = solve_lsd(model, z + h);
      const LsdSolution sm = solve_lsd(model, z - h);
      auto rel = [](cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-4); };
      CHECK(rel(d.g1p, (sp.g1 - sm.g1) / (2 * h)) < 1e-6);
      CHECK(rel(d.g2p, (sp.g2 - sm.g2) / (2 * h)) < 1e-6);
      CHECK(rel(d.m_under_p, (sp.m_under - sm.m_under) / (2 * h)) < 1e-6);
      CHECK(rel(d.mp, (sp.m - sm.m) / (2 * h)) < 1e-6);
      CHECK(rel(d.ratio_p, (sp.m_under / sp.g2 - sm.m_under / sm.g2) / (2 * h)) < 1e-6);
      if (model.light_tail()) CHECK(std::abs(d.m_under_p - d.g2p) < 1e-8);
    }
  }
}

TEST_CASE("zero mass") {
  CHECK(mp(2.0).zero_mass() == doctest::Approx(0.5));
  CHECK(mp(0.5).zero_mass() == 0.0);
  LsdModel z{0.5, DiscreteMeasure::point_mass(1.0), DiscreteMeasure({0.0, 2.0}, {0.75, 0.25})};
  CHECK(z.zero_mass() == doctest::Approx(0.5));
}

TEST_CASE("MP density support") {
  const double c = 0.5;
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(4.0 * i / 400.0 + 1e-9);
  const StieltjesInversion inv = stieltjes_invert(mp(c), grid, 1e-4);
  const double lo = std::pow(1 - std::sqrt(c), 2), hi = std::pow(1 + std::sqrt(c), 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    const double exact = x > lo && x < hi ? std::sqrt((hi - x) * (x - lo)) / (2.0 * std::numbers::pi * c * x) : 0.0;
    if (std::min(std::abs(x - lo), std::abs(x - hi)) > 0.02) CHECK(std::abs(inv.density[i] - exact) < 2e-3);
    if (x > lo && x < hi) CHECK(inv.density[i] > 0.0);
  }
  CHECK(inv.total_mass == doctest::Approx(1.0).epsilon(2e-3));

  const auto support = detect_support(mp(c), 0.01, 4.0, 400, 1e-4);
  REQUIRE(support.size() == 1);
  CHECK(support[0].first == doctest::Approx(lo).epsilon(1e-4));
  CHECK(support[0].second == doctest::Approx(hi).epsilon(1e-4));
  CHECK(upper_bulk_edge(mp(c)) == doctest::Approx(hi).epsilon(1e-12));
  CHECK(upper_bulk_edge_point(mp(c)).polished);

  std::ostringstream out;
  write_density_csv(out, inv);
  CHECK(out.str().rfind("x,density,cdf\n", 0) == 0);
}

TEST_CASE("MP with c = 2 puts mass 1/2 at zero") {
  std::vector<double> grid;
  for (int i = 0; i <= 600; ++i) grid.push_back(-0.5 + 7.0 * i / 600.0);
  const StieltjesInversion inv = stieltjes_invert(mp(2.0), grid, 1e-4);
  CHECK(inv.zero_mass == doctest::Approx(0.5));
  CHECK(inv.total_mass == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("trivial density vanishes") {
  LsdModel zero_pop{0.7, DiscreteMeasure::point_mass(0.0), DiscreteMeasure::point_mass(1.0)};
  const StieltjesInversion inv = stieltjes_invert(zero_pop, {0.5, 1.0, 2.0}, 1e-3);
  for (double d : inv.density) CHECK(d < 1e-12);
  CHECK_THROWS_AS(stieltjes_invert(mp(0.5), {1.0}, 0.5), DomainError);
  CHECK_THROWS_AS(stieltjes_invert(mp(0.5), {2.0, 1.0}, 1e-3), DomainError);
}

TEST_CASE("edge continuation just above the bulk") {
  for (const LsdModel& model : {heavy(0.5), mixed()}) {
    const double edge = upper_bulk_edge(model);
    const LsdSolution s = solve_lsd_real(model, edge * (1.0 + 1e-3));
    CHECK(s.residual < 1e-8);
    CHECK_FALSE(outside_support(model, edge * (1.0 - 1e-3)));
  }
}

TEST_CASE("anisotropic law reduces to MP for Sigma = I") {
  Anisotropy a{Eigen::VectorXd::Ones(4), Eigen::VectorXd::Constant(4, 0.25)};
  const cplx z(1.3, 0.4);
  const LsdSolution s = solve_lsd(mp(0.5), z);
  CHECK(std::abs(anisotropic_stieltjes(a, z, s.g2) - s.m) < 1e-12);
}

TEST_CASE("Monte Carlo ESD oracle for the two-point radius") {
  PopulationSpec spec;
  spec.p = 800;
  spec.bulk.kind = BulkRule::Kind::constant;
  auto pop = std::make_shared<const Population>(build_population(spec));
  // The count of zero-radius columns is Binomial(n, 1/2), which moves a single
  // replicate by about 0.01; three replicates are averaged.
  const cplx z(1.0, 0.5);
  cplx avg = 0.0;
  for (std::uint64_t seed : {21, 22, 23}) {
    const auto sample = draw_sample(pop, make_radius_law(RadiusKind::two_point, 800, 640000.0), 1600, seed);
    avg += esd_stieltjes(build_scm(sample, false), z) / 3.0;
  }
  CHECK(std::abs(avg - solve_lsd(heavy(0.5), z).m) < 0.02);
}
