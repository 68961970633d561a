#pragma once

#include <functional>
#include <optional>
#include <string>

namespace hpoc::problem {

/// Scalar transform together with the derivatives the assembled Jacobians
/// and residual solvers need.
struct Transform {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
};

Transform linear_transform(double slope);
Transform quadratic_transform(double linear, double quadratic);  // a*y + b*y^2/2

/// Boundary data b(y_b, u, t). Under Neumann-type conditions the value is
/// the diffusive flux alpha'(y) d_x y substituted into the integrated-by-parts
/// boundary term; under Dirichlet-type conditions it is a residual imposed
/// directly on the boundary coefficient row.
struct BoundaryCondition {
  std::function<double(double, double, double)> value;  // (y_b, u, t)
  std::function<double(double, double, double)> d_y;
  std::function<double(double, double, double)> d_u;
};

enum class BoundaryKind { Neumann, Dirichlet };

/// Pointwise objective term P(t, u1, u2, y(x0,t), y(xf,t)) with the partial
/// derivatives used by the analytic gradient.
struct PointwiseObjective {
  std::function<double(double, double, double, double, double)> value;
  std::function<double(double, double, double, double, double)> d_u1;
  std::function<double(double, double, double, double, double)> d_u2;
  std::function<double(double, double, double, double, double)> d_y_near;
  std::function<double(double, double, double, double, double)> d_y_far;
};

/// Pointwise path constraint d(y, x, t, u1, u2) <= 0 applied at every
/// spatial support point and collocation time.
struct PathConstraint {
  std::function<double(double, double, double, double, double)> value;
  std::function<double(double, double, double, double, double)> d_y;
  std::function<double(double, double, double, double, double)> d_u1;
  std::function<double(double, double, double, double, double)> d_u2;
};

/// Generalized parabolic boundary-control problem
///
///   d_t theta(y) + kappa(y) d_x y = d_x(alpha'(y) d_x y) + f(x, t)
///
/// on [x0,xf] x [t0,tf] with boundary data at both ends, initial state q(x),
/// and an integral-plus-pointwise objective. beta is the antiderivative of
/// kappa (the Kirchhoff-like transform), so the weak form is linear in the
/// transformed coefficients theta(Y), beta(Y), alpha(Y).
struct ProblemDefinition {
  std::string name;
  double x0 = 0.0, xf = 1.0, t0 = 0.0, tf = 1.0;

  Transform theta;  // mass transform
  Transform beta;   // advection transform; beta.first is kappa
  Transform alpha;  // diffusion transform

  std::function<double(double, double)> source;  // f(x, t)

  BoundaryCondition flux_near, flux_far;
  BoundaryKind bc_near = BoundaryKind::Neumann;
  BoundaryKind bc_far = BoundaryKind::Neumann;

  std::function<double(double)> initial_condition;

  std::function<double(double, double, double)> lagrange_integrand;  // (x,t,y)
  std::function<double(double, double, double)> lagrange_dy;
  PointwiseObjective pointwise;

  double u1_min = -1e20, u1_max = 1e20;
  double u2_min = -1e20, u2_max = 1e20;

  std::optional<PathConstraint> path;
};

/// Boundary tracking control of the viscous Burgers equation.
ProblemDefinition burgers();

/// Boundary tracking control of a nonlinear heat equation (single control;
/// the second control slot is pinned to zero).
ProblemDefinition heat();

/// Linear diffusion d_t y = c2 d_xx y + f with prescribed flux data; used by
/// tests and verification problems.
ProblemDefinition linear_diffusion(
    double c2, std::function<double(double, double)> source,
    std::function<double(double)> initial,
    std::function<double(double)> flux_near_of_t,
    std::function<double(double)> flux_far_of_t);

/// Pointwise residual of the strong-form PDE:
/// theta'(y) y_t + kappa(y) y_x - alpha''(y) y_x^2 - alpha'(y) y_xx - f(x,t).
double strong_residual(const ProblemDefinition& p, double y, double y_t,
                       double y_x, double y_xx, double x, double t);

}  // namespace hpoc::problem
