#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "locband/oracle.hpp"

using namespace locband;
using namespace locband::oracle;

namespace {

MaterialSpec bar_material() {
  MaterialSpec m;
  m.E = 2.0;
  m.nu = 0.0;
  m.sigma_p = 1.0;
  m.Hbar = -2.0 / 11.0;
  m.h = 1.0;
  m.N = 1;
  return m;
}

MaterialSpec shear_material() {
  MaterialSpec m;
  m.E = 5.6;
  m.nu = 0.4;
  m.sigma_p = 0.75;
  m.Hbar = -1.0;
  m.h = 0.1;
  m.N = 2;
  m.sigma_p_profile = SigmaPProfile::kParabolicY;
  return m;
}

}  // namespace

TEST_CASE("compliance integral") {
  CHECK(compliance_integral([](double) { return 1.0; }, 1.0, 10.0) ==
        doctest::Approx(10.0).epsilon(1e-12));
  auto paper_area = [](double x) {
    return 1.0 + (x - 5.0) * (x - 5.0) / 25.0;
  };
  CHECK(compliance_integral(paper_area, 1.0, 10.0) ==
        doctest::Approx(5.0 * M_PI / 2.0).epsilon(1e-10));
  CHECK(compliance_integral(paper_area, 2.0, 10.0) ==
        doctest::Approx(5.0 * M_PI / 4.0).epsilon(1e-10));
}

TEST_CASE("bar oracle: onset, softening, exhaustion") {
  const MaterialSpec m = bar_material();
  const BarGeometry geo;

  const auto onset = solve_bar(5.0 * M_PI / 4.0, m, geo);
  CHECK(onset.P == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(onset.j == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(onset.x_band == doctest::Approx(5.0).epsilon(1e-15));

  const auto soft = solve_bar(4.5, m, geo);
  CHECK(soft.P == doctest::Approx(1.0 / (5.5 - 5.0 * M_PI / 4.0)).epsilon(1e-6));
  CHECK(soft.j == doctest::Approx(5.5 * (1.0 - soft.P)).epsilon(1e-9));
  CHECK(soft.j == doctest::Approx(2.00352).epsilon(1e-4));

  const auto done = solve_bar(5.5, m, geo);
  CHECK(done.P == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(done.j == doctest::Approx(5.5).epsilon(1e-9));

  CHECK_THROWS_AS((void)solve_bar(-1.0, m, geo), ConfigError);
}

TEST_CASE("bar oracle satisfies its defining equations to 1e-12") {
  const MaterialSpec m = bar_material();
  const BarGeometry geo;
  for (double delta : {4.0, 4.5, 5.0, 5.5}) {
    const auto s = solve_bar(delta, m, geo);
    const double a_min = geo.area(s.x_band);
    if (s.P > 0.0) {
      // traction continuity
      CHECK(std::fabs(s.P / a_min - (m.sigma_p + m.Hbar * s.j)) <= 1e-12);
    }
    // compatibility
    CHECK(std::fabs(delta - (s.P * s.compliance + s.j)) <= 1e-12);
  }
}

TEST_CASE("bar displacement sampler") {
  const MaterialSpec m = bar_material();
  const BarGeometry geo;
  const auto s = solve_bar(4.5, m, geo);
  CHECK(bar_displacement(s, m, geo, 0.0) == doctest::Approx(0.0));
  CHECK(bar_displacement(s, m, geo, 10.0) == doctest::Approx(4.5).epsilon(1e-8));
  // closed form of the elastic part: u_e(x) = (P/E) 5 (atan((x-5)/5) + pi/4)
  const double x = 3.0;
  const double ue =
      (s.P / m.E) * 5.0 * (std::atan((x - 5.0) / 5.0) + M_PI / 4.0);
  CHECK(bar_displacement(s, m, geo, x) == doctest::Approx(ue).epsilon(1e-8));
  // jump across the band
  const double below = bar_displacement(s, m, geo, 4.999);
  const double above = bar_displacement(s, m, geo, 5.001);
  CHECK(above - below == doctest::Approx(s.j).epsilon(1e-3));
}

TEST_CASE("shear oracle: onset and closed forms") {
  const MaterialSpec m = shear_material();

  const auto pre = solve_shear(0.375, m);
  CHECK(pre.j == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pre.tau == doctest::Approx(0.75).epsilon(1e-12));

  const auto a = solve_shear(0.55, m);
  CHECK(a.j == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(a.tau == doctest::Approx(0.40).epsilon(1e-12));

  const auto b = solve_shear(0.7, m);
  CHECK(b.j == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(b.tau == doctest::Approx(0.10).epsilon(1e-12));

  const auto onset = solve_shear(0.4, m);
  CHECK(onset.j == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("shear oracle matches the brute-force grid") {
  const MaterialSpec base = shear_material();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  int tested = 0;
  while (tested < 100) {
    MaterialSpec m = base;
    const double mu = 0.5 + 4.0 * ud(rng);
    m.E = 2.0 * mu * (1.0 + m.nu);
    m.Hbar = -ud(rng) * 0.9 * mu;  // keep mu + Hbar > 0 (unique minimizer)
    m.sigma_p = 0.2 + ud(rng);
    m.sigma_p_profile = SigmaPProfile::kUniform;
    const double delta = ud(rng);
    const auto s = solve_shear(delta, m);
    REQUIRE(s.unique);
    CHECK(std::fabs(s.j - s.j_grid) <= 1e-5);
    ++tested;
  }
}

TEST_CASE("shear oracle flags non-unique cases") {
  MaterialSpec m = shear_material();
  m.Hbar = -3.0;  // mu + Hbar = -1 < 0
  const auto s = solve_shear(0.5, m);
  CHECK_FALSE(s.unique);
}

TEST_CASE("oracle energies are minima under jump perturbation") {
  const MaterialSpec m = bar_material();
  const BarGeometry geo;
  auto barW = [&](double delta, double j) {
    // energy at prescribed delta with trial jump j (P from compatibility)
    const auto s = solve_bar(delta, m, geo);
    const double P = (delta - j) / s.compliance;
    return 0.5 * P * P * s.compliance + 0.5 * m.Hbar * j * j + m.sigma_p * j;
  };
  const MaterialSpec ms = shear_material();
  for (int i = 0; i < 50; ++i) {
    const double delta = 4.0 + 1.5 * i / 49.0;
    const auto s = solve_bar(delta, m, geo);
    if (s.j > 1e-3 && s.j < 5.5 - 1e-3) {
      const double w0 = barW(delta, s.j);
      CHECK(barW(delta, s.j + 1e-3) >= w0 - 1e-12);
      CHECK(barW(delta, s.j - 1e-3) >= w0 - 1e-12);
    }
    const double d2 = 0.375 + 0.325 * i / 49.0;
    const auto t = solve_shear(d2, ms);
    auto shearW = [&](double j) {
      const double ge = d2 - j;
      return 0.5 * ms.lame_mu() * ge * ge + 0.5 * ms.Hbar * j * j +
             ms.sigma_p_min() * j;
    };
    if (t.j > 1e-3 && t.j < d2 - 1e-3) {
      CHECK(shearW(t.j + 1e-3) >= t.W - 1e-12);
      CHECK(shearW(t.j - 1e-3) >= t.W - 1e-12);
    }
  }
}
