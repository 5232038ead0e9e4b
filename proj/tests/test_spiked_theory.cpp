#include <doctest.h>

#include <cmath>

#include "elliprmt/error.hpp"
#include "elliprmt/spiked_theory.hpp"

using namespace elliprmt;

namespace {

LsdModel mp(double c) { return {c, DiscreteMeasure::point_mass(1.0), DiscreteMeasure::point_mass(1.0)}; }

LsdModel heavy(double c) {
  return {c, DiscreteMeasure::point_mass(1.0), DiscreteMeasure({0.0, std::sqrt(2.0)}, {0.5, 0.5})};
}

// Non-spiked ESD of a p = 20 population: one zeroed spike plus a spread bulk.
LsdModel bulk20(const DiscreteMeasure& h2) {
  std::vector<double> v{0.0};
  for (int i = 1; i < 20; ++i) v.push_back(0.2 + 0.04 * i);
  return {0.5, DiscreteMeasure::empirical(v), h2};
}

// Closed-form companion transform of MP on the real axis, the root of
// c z m^2 + (z - 1 + c) m + 1 = 0 that vanishes at infinity, mapped to m_.
double mp_m_under(double c, double x) {
  const double b = x - 1.0 + c;
  const double m = (-b + std::sqrt(b * b - 4.0 * c * x)) / (2.0 * c * x);
  return -(1.0 - c) / x + c * m;
}

}  // namespace

TEST_CASE("light tail: theta = psi(8) = 60/7") {
  const Transition t = transition(mp(0.5), 8.0);
  CHECK(t.theta == doctest::Approx(60.0 / 7.0).epsilon(1e-12));
  CHECK(std::abs(t.theta - psi_light_tail(mp(0.5), 8.0)) < 1e-8);
  CHECK(t.residual < 1e-10);
  CHECK(t.g_prime > 0.0);
  // psi'(alpha) = 1 - c int t^2/(alpha - t)^2 dH1 for H1 = delta_1.
  CHECK(t.g_prime == doctest::Approx(1.0 - 0.5 / 49.0).epsilon(1e-8));
}

TEST_CASE("light tail: overlap and sigma_delta closed forms") {
  const SpikePrediction p = predict_spike(mp(0.5), 8.0);
  CHECK(p.light_tail);
  CHECK(std::abs(p.overlap_sq - (1.0 - 0.5 / 49.0) / (1.0 + 0.5 / 7.0)) < 1e-8);
  CHECK(p.overlap_sq == doctest::Approx(0.9238095).epsilon(1e-7));
  CHECK(std::abs(p.overlap_sq - overlap_light_tail(mp(0.5), 8.0)) < 1e-8);
  CHECK(std::abs(p.sigma_delta_sq - sigma_delta_sq_light_tail(mp(0.5), p.theta)) < 1e-8);

  // 2 / (m_'(theta) theta^2) from the closed-form MP transform.
  const double th = 60.0 / 7.0, h = 1e-5;
  const double mup = (mp_m_under(0.5, th + h) - mp_m_under(0.5, th - h)) / (2 * h);
  CHECK(p.sigma_delta_sq == doctest::Approx(2.0 / (mup * th * th)).epsilon(1e-7));
}

TEST_CASE("light-tail trio on a spread bulk") {
  const LsdModel model = bulk20(DiscreteMeasure::point_mass(1.0));
  for (double alpha : {4.0, 8.0, 20.0}) {
    const SpikePrediction p = predict_spike(model, alpha);
    CHECK(std::abs(p.theta - psi_light_tail(model, alpha)) < 1e-8);
    CHECK(std::abs(p.overlap_sq - overlap_light_tail(model, alpha)) < 1e-8);
    CHECK(std::abs(p.sigma_delta_sq - sigma_delta_sq_light_tail(model, p.theta)) < 1e-8);
    CHECK(p.theta > p.edge);
    CHECK(p.overlap_sq >= 0.0);
    CHECK(p.overlap_sq <= 1.0);
  }
}

TEST_CASE("transition for a general radius law") {
  const LsdModel model = heavy(0.5);
  const Transition t = transition(model, 8.0);
  CHECK(std::abs(solve_lsd_real(model, t.theta).g2.real() + 1.0 / 8.0) < 1e-10);
  const SpikePrediction p = predict_spike(model, 8.0);
  const SpikePrediction light = predict_spike(mp(0.5), 8.0);
  CHECK(std::abs(p.sigma_delta_sq - light.sigma_delta_sq) > 0.05 * light.sigma_delta_sq);
  CHECK(std::abs(p.overlap_sq - light.overlap_sq) > 1e-3);
  CHECK_FALSE(p.light_tail);
}

TEST_CASE("transition is increasing and tends to the identity") {
  const LsdModel model = heavy(0.5);
  double prev = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double alpha = 4.0 + 2.0 * i;
    const Transition t = transition(model, alpha);
    CHECK(t.theta > prev);
    CHECK(t.g_prime > 0.0);
    prev = t.theta;
  }
  const Transition far = transition(mp(0.5), 1e5);
  CHECK(far.theta / 1e5 == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(overlap_sq(mp(0.5), 1e5) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("subcritical spikes") {
  const double threshold = 1.0 + std::sqrt(0.5);
  CHECK(detectability_threshold(mp(0.5)) == doctest::Approx(threshold).epsilon(1e-10));
  try {
    transition(mp(0.5), 1.01);
    FAIL("expected SubcriticalSpikeError");
  } catch (const SubcriticalSpikeError& e) {
    CHECK(e.threshold() == doctest::Approx(threshold).epsilon(1e-3));
  }
  // The overlap numerator closes at the threshold.
  CHECK(overlap_light_tail(mp(0.5), threshold) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(overlap_sq(mp(0.5), threshold * 1.01) < 0.05);
  CHECK_THROWS_AS(transition(mp(0.5), -1.0), DomainError);
}

TEST_CASE("GOE profile") {
  const GoeProfile one = goe_covariance_profile(mp(0.5), 8.0, 1);
  CHECK(one.cov(0, 0, 0, 0) == one.sigma11_sq());
  CHECK(one.sigma11_sq() > 0.0);

  const GoeProfile two = goe_covariance_profile(heavy(0.5), 8.0, 2);
  CHECK(two.cov(0, 1, 1, 0) == two.sigma12_sq());
  CHECK(two.cov(0, 1, 0, 1) == two.sigma12_sq());
  CHECK(two.cov(0, 0, 0, 1) == 0.0);
  CHECK(two.cov(0, 0, 1, 1) == 0.0);
  CHECK_THROWS_AS(two.cov(0, 2, 0, 0), DomainError);
  CHECK_THROWS_AS(goe_covariance_profile(mp(0.5), 1.0, 2), DomainError);
}
