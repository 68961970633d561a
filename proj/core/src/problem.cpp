#include "hpoc/problem.hpp"

#include <cmath>

namespace hpoc::problem {

Transform linear_transform(double slope) {
  return {[slope](double y) { return slope * y; },
          [slope](double) { return slope; },
          [](double) { return 0.0; }};
}

Transform quadratic_transform(double linear, double quadratic) {
  return {[=](double y) { return linear * y + 0.5 * quadratic * y * y; },
          [=](double y) { return linear + quadratic * y; },
          [=](double) { return quadratic; }};
}

ProblemDefinition burgers() {
  constexpr double nu = 0.1;
  constexpr double gamma = 0.01;
  constexpr double target = 0.035;

  ProblemDefinition p;
  p.name = "burgers";
  p.x0 = 0.0;
  p.xf = 1.0;
  p.t0 = 0.0;
  p.tf = 1.0;

  p.theta = linear_transform(1.0);
  p.beta = quadratic_transform(0.0, 1.0);  // beta(y) = y^2/2, kappa(y) = y
  p.alpha = linear_transform(nu);

  p.source = [](double, double) { return 0.0; };

  p.flux_near = {[=](double, double u, double) { return nu * u; },
                 [](double, double, double) { return 0.0; },
                 [=](double, double, double) { return nu; }};
  p.flux_far = {[=](double, double u, double) { return nu * u; },
                [](double, double, double) { return 0.0; },
                [=](double, double, double) { return nu; }};

  p.initial_condition = [](double x) {
    const double g = x * (1.0 - x);
    return g * g;
  };

  p.lagrange_integrand = [=](double, double, double y) {
    return 0.5 * (y - target) * (y - target);
  };
  p.lagrange_dy = [=](double, double, double y) { return y - target; };

  p.pointwise = {
      [=](double, double u1, double u2, double, double) {
        return 0.5 * gamma * (u1 * u1 + u2 * u2);
      },
      [=](double, double u1, double, double, double) { return gamma * u1; },
      [=](double, double, double u2, double, double) { return gamma * u2; },
      [](double, double, double, double, double) { return 0.0; },
      [](double, double, double, double, double) { return 0.0; }};

  p.u1_min = p.u2_min = -0.015;
  p.u1_max = p.u2_max = 0.015;
  return p;
}

ProblemDefinition heat() {
  constexpr double a1 = 4.0, a2 = 1.0, a3 = 4.0, a4 = -1.0;
  constexpr double rho = -1.0;
  constexpr double gamma = 1e-3;
  constexpr double g = 1.0;

  ProblemDefinition p;
  p.name = "heat";
  p.x0 = 0.0;
  p.xf = 1.0;
  p.t0 = 0.0;
  p.tf = 0.5;

  p.theta = quadratic_transform(a1, a2);
  p.beta = linear_transform(0.0);
  p.alpha = quadratic_transform(a3, a4);

  p.source = [=](double x, double t) {
    const double c = std::cos(M_PI * x);
    const double e1 = std::exp(rho * t);
    const double e2 = std::exp(2.0 * rho * t);
    return (rho * (a1 + 2.0 * a2) + M_PI * M_PI * (a3 + 2.0 * a4)) * e1 * c -
           a4 * M_PI * M_PI * e2 +
           (2.0 * a4 * M_PI * M_PI + rho * a2) * e2 * c * c;
  };

  p.flux_near = {[=](double y, double u, double) { return g * (y - u); },
                 [=](double, double, double) { return g; },
                 [=](double, double, double) { return -g; }};
  p.flux_far = {[](double, double, double) { return 0.0; },
                [](double, double, double) { return 0.0; },
                [](double, double, double) { return 0.0; }};

  p.initial_condition = [](double x) { return 2.0 + std::cos(M_PI * x); };

  p.lagrange_integrand = [](double, double, double) { return 0.0; };
  p.lagrange_dy = [](double, double, double) { return 0.0; };

  // tracks y(1,t) against y_d(t) = 2 - exp(rho t)
  p.pointwise = {
      [=](double t, double u1, double, double, double y_far) {
        const double dev = y_far - (2.0 - std::exp(rho * t));
        return 0.5 * (dev * dev + gamma * u1 * u1);
      },
      [=](double, double u1, double, double, double) { return gamma * u1; },
      [](double, double, double, double, double) { return 0.0; },
      [](double, double, double, double, double) { return 0.0; },
      [=](double t, double, double, double, double y_far) {
        return y_far - (2.0 - std::exp(rho * t));
      }};

  p.u1_min = -1e20;
  p.u1_max = 0.1;
  p.u2_min = p.u2_max = 0.0;  // unused control slot, pinned
  return p;
}

ProblemDefinition linear_diffusion(
    double c2, std::function<double(double, double)> source,
    std::function<double(double)> initial,
    std::function<double(double)> flux_near_of_t,
    std::function<double(double)> flux_far_of_t) {
  ProblemDefinition p;
  p.name = "linear_diffusion";
  p.theta = linear_transform(1.0);
  p.beta = linear_transform(0.0);
  p.alpha = linear_transform(c2);
  p.source = std::move(source);
  p.flux_near = {[f = std::move(flux_near_of_t)](double, double, double t) {
                   return f(t);
                 },
                 [](double, double, double) { return 0.0; },
                 [](double, double, double) { return 0.0; }};
  p.flux_far = {[f = std::move(flux_far_of_t)](double, double, double t) {
                  return f(t);
                },
                [](double, double, double) { return 0.0; },
                [](double, double, double) { return 0.0; }};
  p.initial_condition = std::move(initial);
  p.lagrange_integrand = [](double, double, double) { return 0.0; };
  p.lagrange_dy = [](double, double, double) { return 0.0; };
  p.pointwise = {[](double, double, double, double, double) { return 0.0; },
                 [](double, double, double, double, double) { return 0.0; },
                 [](double, double, double, double, double) { return 0.0; },
                 [](double, double, double, double, double) { return 0.0; },
                 [](double, double, double, double, double) { return 0.0; }};
  p.u1_min = p.u1_max = 0.0;
  p.u2_min = p.u2_max = 0.0;
  return p;
}

double strong_residual(const ProblemDefinition& p, double y, double y_t,
                       double y_x, double y_xx, double x, double t) {
  return p.theta.first(y) * y_t + p.beta.first(y) * y_x -
         p.alpha.second(y) * y_x * y_x - p.alpha.first(y) * y_xx -
         p.source(x, t);
}

}  // namespace hpoc::problem
