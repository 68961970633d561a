#include <doctest.h>

#include <cmath>
#include <random>

#include "hpoc/problem.hpp"

using namespace hpoc::problem;

TEST_CASE("burgers parameter set") {
  const auto p = burgers();
  CHECK(p.x0 == 0.0);
  CHECK(p.xf == 1.0);
  CHECK(p.t0 == 0.0);
  CHECK(p.tf == 1.0);
  CHECK(p.u1_min == -0.015);
  CHECK(p.u1_max == 0.015);
  CHECK(p.theta.value(3.0) == doctest::Approx(3.0));
  CHECK(p.beta.value(3.0) == doctest::Approx(4.5));
  CHECK(p.alpha.first(0.0) == doctest::Approx(0.1));
  CHECK(p.initial_condition(0.5) == doctest::Approx(0.0625));
  CHECK(p.source(0.3, 0.7) == 0.0);
  // flux terms carry the viscosity
  CHECK(p.flux_near.value(0.0, 2.0, 0.0) == doctest::Approx(0.2));
  CHECK(p.flux_far.value(0.0, -1.0, 0.0) == doctest::Approx(-0.1));
  // objective weights
  CHECK(p.pointwise.value(0.0, 0.01, -0.01, 0.0, 0.0) ==
        doctest::Approx(0.5 * 0.01 * 2e-4));
  CHECK(p.lagrange_integrand(0.0, 0.0, 0.035) == doctest::Approx(0.0));
}

TEST_CASE("heat parameter set") {
  const auto p = heat();
  CHECK(p.tf == 0.5);
  CHECK(p.u1_max == 0.1);
  CHECK(p.u1_min <= -1e19);
  CHECK(p.u2_min == p.u2_max);
  // y_d(0) = 1 enters through the pointwise tracking term
  CHECK(p.pointwise.value(0.0, 0.0, 0.0, 0.0, 1.0) == doctest::Approx(0.0));
  CHECK(p.initial_condition(0.0) == doctest::Approx(3.0));
  CHECK(p.initial_condition(1.0) == doctest::Approx(1.0));
  // closed-form source at the origin
  CHECK(p.source(0.0, 0.0) ==
        doctest::Approx(M_PI * M_PI - 7.0).epsilon(1e-12));
  // state-dependent mass and diffusion transforms
  CHECK(p.theta.value(2.0) == doctest::Approx(4.0 * 2.0 + 0.5 * 4.0));
  CHECK(p.theta.first(2.0) == doctest::Approx(6.0));
  CHECK(p.alpha.first(2.0) == doctest::Approx(2.0));
  CHECK(p.flux_near.value(3.0, 0.1, 0.0) == doctest::Approx(2.9));
}

TEST_CASE("transform derivatives agree with central differences") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> state(-10.0, 10.0);
  const double step = 1e-5;
  for (const auto& p : {burgers(), heat()}) {
    for (int trial = 0; trial < 100; ++trial) {
      const double y = state(rng);
      for (const Transform* tr : {&p.theta, &p.beta, &p.alpha}) {
        const double fd =
            (tr->value(y + step) - tr->value(y - step)) / (2.0 * step);
        CHECK(tr->first(y) == doctest::Approx(fd).epsilon(1e-6));
        const double fd2 =
            (tr->first(y + step) - tr->first(y - step)) / (2.0 * step);
        CHECK(tr->second(y) == doctest::Approx(fd2).epsilon(1e-6));
      }
      CHECK(std::isfinite(p.theta.value(y)));
      CHECK(p.theta.first(y) != 0.0);
    }
  }
}

TEST_CASE("strong residual of trivial and steady states") {
  const auto b = burgers();
  CHECK(strong_residual(b, 0.0, 0.0, 0.0, 0.0, 0.3, 0.7) == 0.0);

  // an arbitrary non-solution of the heat problem has nonzero residual
  const auto h = heat();
  CHECK(std::abs(strong_residual(h, 1.3, 0.2, -0.4, 0.9, 0.5, 0.1)) > 1e-6);

  // linear diffusion with y = x^2 steady input
  const auto lin = linear_diffusion(
      1.0, [](double, double) { return 0.0; }, [](double x) { return x * x; },
      [](double) { return 0.0; }, [](double) { return 0.0; });
  CHECK(strong_residual(lin, 0.25, 0.0, 1.0, 2.0, 0.5, 0.0) ==
        doctest::Approx(-2.0));
}
