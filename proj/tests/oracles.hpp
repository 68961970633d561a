// Test-side numeric oracles, kept independent of the library implementation.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "hpoc/transcribe.hpp"

namespace oracle {

// Directly solves the linear collocation system for the state trajectory of
// a pure-diffusion problem with control-independent flux data; the oracle
// path around eval_constraints and the interior-point solver.
inline Eigen::MatrixXd solve_linear_diffusion(
    const hpoc::transcribe::DiscreteOCP& ocp, double c2) {
  const int n_x = ocp.layout().n_x;
  const int n_t = ocp.layout().n_t;
  const auto& sops = ocp.spatial_ops();
  const auto& tops = ocp.temporal_ops();
  const Eigen::MatrixXd m = sops.M;
  const Eigen::MatrixXd a = sops.A;
  const Eigen::MatrixXd d = tops.D_t;

  Eigen::VectorXd q(n_x);
  for (int r = 0; r < n_x; ++r)
    q[r] = ocp.problem().initial_condition(ocp.support_points()[r]);
  const Eigen::MatrixXd f = hpoc::spatial::project_source(
      ocp.spatial_mesh(), ocp.problem().source, tops.T.tail(n_t));

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_x * n_t, n_x * n_t);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_x * n_t);
  for (int i = 0; i < n_t; ++i) {
    const double psi = tops.psi[i];
    const double t = tops.T[i + 1];
    for (int col = 0; col <= n_t; ++col) {
      if (d(i, col) == 0.0) continue;
      if (col == 0)
        rhs.segment(i * n_x, n_x) -= d(i, col) * (m * q);
      else
        g.block(i * n_x, (col - 1) * n_x, n_x, n_x) += d(i, col) * m;
    }
    g.block(i * n_x, i * n_x, n_x, n_x) += psi * c2 * a;
    rhs.segment(i * n_x, n_x) += psi * f.col(i);
    rhs[i * n_x + 0] -= psi * ocp.problem().flux_near.value(0.0, 0.0, t);
    rhs[i * n_x + n_x - 1] += psi * ocp.problem().flux_far.value(0.0, 0.0, t);
  }
  const Eigen::VectorXd sol = g.fullPivLu().solve(rhs);
  Eigen::MatrixXd state(n_x, n_t + 1);
  state.col(0) = q;
  for (int i = 0; i < n_t; ++i) state.col(i + 1) = sol.segment(i * n_x, n_x);
  return state;
}

// Legendre P_n by the plain recurrence.
inline double legendre(int n, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2 * k + 1) * x * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

// exact value of the monomial integral over [-1, 1]
inline double monomial_integral(int k) {
  return (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
}

// All roots of f in [lo, hi] located by bisection on sign changes over a
// uniform scan grid.
inline std::vector<double> bisect_roots(const std::function<double(double)>& f,
                                        double lo, double hi, int samples) {
  std::vector<double> roots;
  double a = lo, fa = f(lo);
  for (int i = 1; i <= samples; ++i) {
    const double b = lo + (hi - lo) * i / samples;
    const double fb = f(b);
    if (fb == 0.0) {
      roots.push_back(b);
    } else if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
      double x0 = a, x1 = b, f0 = fa;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (x0 + x1);
        const double fm = f(mid);
        if (fm == 0.0) {
          x0 = x1 = mid;
          break;
        }
        if ((f0 < 0) == (fm < 0)) {
          x0 = mid;
          f0 = fm;
        } else {
          x1 = mid;
        }
      }
      roots.push_back(0.5 * (x0 + x1));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

// Weights that integrate monomials 1, s, ..., s^{n-1} exactly at the given
// nodes (moment matching).
inline Eigen::VectorXd moment_weights(const Eigen::VectorXd& nodes) {
  const int n = nodes.size();
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd rhs(n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) v(k, j) = std::pow(nodes[j], k);
    rhs[k] = monomial_integral(k);
  }
  return v.fullPivLu().solve(rhs);
}

}  // namespace oracle
