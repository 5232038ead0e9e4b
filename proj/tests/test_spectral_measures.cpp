#include <doctest.h>

#include <cmath>
#include <sstream>

#include "elliprmt/error.hpp"
#include "elliprmt/spectral_measures.hpp"

using namespace elliprmt;

TEST_CASE("discrete measure normalizes, sorts and merges") {
  DiscreteMeasure mu({3.0, 1.0, 3.0}, {0.25, 0.5, 0.25});
  REQUIRE(mu.size() == 2);
  CHECK(mu.atoms()[0] == 1.0);
  CHECK(mu.atoms()[1] == 3.0);
  CHECK(mu.weights()[0] == doctest::Approx(0.5));
  CHECK(mu.weights()[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(DiscreteMeasure({1.0}, {-1.0}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({1.0, 2.0}, {1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({1.0, 2.0}, {1.0}), DomainError);
  CHECK_THROWS_AS(DiscreteMeasure({NAN}, {1.0}), DomainError);
}

TEST_CASE("measure_integral") {
  CHECK(measure_integral_real(DiscreteMeasure::point_mass(1.0), [](double x) { return x; }) == 1.0);
  DiscreteMeasure two({0.0, std::sqrt(2.0)}, {0.5, 0.5});
  CHECK(measure_integral_real(two, [](double y) { return y; }) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));

  std::vector<double> v{0.2, 0.4, 0.6, 0.8, 1.0};
  double brute = 0.0;
  for (double x : v) brute += x * x / 5.0;
  CHECK(measure_integral_real(DiscreteMeasure::empirical(v), [](double x) { return x * x; }) ==
        doctest::Approx(brute).epsilon(1e-15));
  CHECK(brute == doctest::Approx(0.44));

  CHECK_THROWS_AS(measure_integral(two, [](double y) { return cplx(1.0 / y, 0.0); }), DomainError);
}

TEST_CASE("merging duplicates leaves integrals unchanged") {
  DiscreteMeasure split({1.0, 2.0, 2.0, 5.0}, {0.25, 0.25, 0.25, 0.25});
  DiscreteMeasure merged({1.0, 2.0, 5.0}, {0.25, 0.5, 0.25});
  auto f = [](double x) { return cplx(std::sin(x), 1.0 / (1.0 + x)); };
  CHECK(std::abs(measure_integral(split, f) - measure_integral(merged, f)) < 1e-15);
}

TEST_CASE("radius_law_to_h2 exact kinds") {
  auto det = radius_law_to_h2(make_radius_law(RadiusKind::deterministic, 50, 0.0));
  CHECK(det.is_point_mass(1.0));

  auto heavy = radius_law_to_h2(make_radius_law(RadiusKind::two_point, 50, 2500.0));
  REQUIRE(heavy.size() == 2);
  CHECK(heavy.atoms()[0] == doctest::Approx(0.0));
  CHECK(heavy.atoms()[1] == doctest::Approx(std::sqrt(2.0)));

  auto mid = radius_law_to_h2(make_radius_law(RadiusKind::two_point, 50, 50.0));
  CHECK(mid.atoms()[0] == doctest::Approx((50.0 - std::sqrt(50.0)) / std::sqrt(2550.0)));
  CHECK(mid.mean() == doctest::Approx(50.0 / std::sqrt(2550.0)).epsilon(1e-14));

  CHECK_THROWS_AS(make_radius_law(RadiusKind::two_point, 50, 2501.0), DomainError);
}

TEST_CASE("radius_law_to_h2 moments") {
  for (auto [kind, nu] : {std::pair{RadiusKind::two_point, 10.0}, std::pair{RadiusKind::chi_square, 0.0},
                          std::pair{RadiusKind::gamma, 400.0}, std::pair{RadiusKind::gamma, 40.0}}) {
    const int p = 20;
    const RadiusLaw law = make_radius_law(kind, p, nu);
    const DiscreteMeasure h2 = radius_law_to_h2(law);
    const double root_m = std::sqrt(law.fourth_moment());
    CHECK(h2.mean() == doctest::Approx(p / root_m).epsilon(1e-9));
    CHECK(h2.second_moment() == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_FALSE(make_radius_law(RadiusKind::gamma, 10, 5.0).conforming());
  CHECK(make_radius_law(RadiusKind::chi_square, 10, 0.0).nu_p == 20.0);
}

TEST_CASE("measure CSV round trip and errors") {
  DiscreteMeasure mu({0.5, 2.0}, {0.25, 0.75});
  std::stringstream ss;
  write_measure_csv(ss, mu);
  DiscreteMeasure back = read_measure_csv(ss);
  CHECK(back.atoms() == mu.atoms());
  CHECK(back.weights()[1] == doctest::Approx(0.75));

  std::istringstream bad("atom,weight\n1.0,0.5\nxyz,0.5\n");
  try {
    read_measure_csv(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream no_header("1.0,1.0\n");
  CHECK_THROWS_AS(read_measure_csv(no_header), ConfigError);
}

TEST_CASE("radius kind names") {
  for (auto k : {RadiusKind::deterministic, RadiusKind::two_point, RadiusKind::chi_square, RadiusKind::gamma}) {
    CHECK(radius_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(radius_kind_from_string("cauchy"), ConfigError);
}
