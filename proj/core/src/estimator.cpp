#include "hpoc/estimator.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "hpoc/basis.hpp"

namespace hpoc::estimator {

namespace {

constexpr double kNewtonTol = 1e-10;
constexpr int kNewtonMaxIter = 50;
constexpr int kNewtonMaxHalvings = 30;

Eigen::VectorXd equidistant_reference(int p) {
  Eigen::VectorXd r(p + 1);
  for (int i = 0; i <= p; ++i) r[i] = static_cast<double>(i) / p;
  return r;
}

// d_x y_h at a reference point of one element, one time column
double element_dx(const Eigen::MatrixXd& state, int off, int p, double h,
                  const Eigen::MatrixXd& dphi_at_point, int col) {
  double v = 0.0;
  for (int i = 0; i <= p; ++i) v += dphi_at_point(i, 0) * state(off + i, col);
  return v / h;
}

// generic damped Newton driver on a coupled residual system
template <typename ResidualFn, typename JacobianFn>
bool damped_newton(Eigen::MatrixXd& coeffs, int unknown_cols, int rows,
                   ResidualFn&& residual, JacobianFn&& jacobian) {
  const int unknowns = rows * unknown_cols;
  Eigen::VectorXd res(unknowns);
  Eigen::SparseMatrix<double> jmat(unknowns, unknowns);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  residual(coeffs, res);
  double rnorm = res.cwiseAbs().maxCoeff();
  // the residual scales with the problem data, so the tolerance follows it
  const double tol = kNewtonTol * std::max(1.0, rnorm);
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    if (rnorm <= tol) return true;
    std::vector<Eigen::Triplet<double>> trips;
    jacobian(coeffs, trips);
    jmat.setFromTriplets(trips.begin(), trips.end());
    lu.compute(jmat);
    if (lu.info() != Eigen::Success) return false;
    residual(coeffs, res);
    const Eigen::VectorXd step = lu.solve(-res);
    if (!step.allFinite()) return false;

    double alpha = 1.0;
    bool improved = false;
    for (int half = 0; half < kNewtonMaxHalvings && !improved; ++half) {
      Eigen::MatrixXd trial = coeffs;
      for (int c = 0; c < unknown_cols; ++c)
        trial.col(c + 1) += alpha * step.segment(c * rows, rows);
      Eigen::VectorXd rtrial(unknowns);
      residual(trial, rtrial);
      const double tnorm = rtrial.cwiseAbs().maxCoeff();
      if (std::isfinite(tnorm) && tnorm < rnorm) {
        coeffs = trial;
        rnorm = tnorm;
        improved = true;
      }
      alpha *= 0.5;
    }
    if (!improved) return rnorm <= tol;
  }
  return rnorm <= tol;
}

}  // namespace

double ErrorReport::eta_x_max() const {
  double m = 0.0;
  for (const auto& e : elements) m = std::max(m, e.indicator);
  return m;
}

double ErrorReport::eta_t_max() const {
  double m = 0.0;
  for (const auto& e : intervals) m = std::max(m, e.indicator);
  return m;
}

std::vector<double> ErrorReport::eta_x() const {
  std::vector<double> v;
  v.reserve(elements.size());
  for (const auto& e : elements) v.push_back(e.indicator);
  return v;
}

std::vector<double> ErrorReport::eta_t() const {
  std::vector<double> v;
  v.reserve(intervals.size());
  for (const auto& e : intervals) v.push_back(e.indicator);
  return v;
}

ElementResidual solve_element_residual(int element,
                                       const transcribe::Solution& solution,
                                       const problem::ProblemDefinition& prob,
                                       const spatial::SpatialOperators& sops,
                                       const temporal::TemporalOperators& tops) {
  (void)sops;
  const auto& smesh = solution.smesh;
  const int p = smesh.degrees[element];
  const int n_err = p + 2;
  const int n_t = static_cast<int>(solution.state.cols()) - 1;
  const double h = smesh.width(element);
  const double x_left = smesh.boundaries[element];
  const int off = smesh.dof_offset(element);
  const int K = smesh.element_count();

  ElementResidual out;
  out.element = element;

  // error support: p+2 LGL points mapped to the reference element
  const auto lgl = basis::gauss_nodes(basis::RuleKind::LGL, n_err);
  out.support_r = ((lgl.nodes.array() + 1.0) * 0.5).matrix();

  // element quadrature: 2(p+1) LG points
  const auto rule = basis::gauss_nodes(basis::RuleKind::LG, 2 * (p + 1));
  const int L = rule.nodes.size();
  const Eigen::VectorXd qr = ((rule.nodes.array() + 1.0) * 0.5).matrix();
  Eigen::VectorXd qx(L);
  for (int l = 0; l < L; ++l) qx[l] = x_left + h * qr[l];

  const auto [psi_q, dpsi_q] = basis::lagrange_eval(out.support_r, qr);
  Eigen::VectorXd edges(2);
  edges << 0.0, 1.0;
  const auto [psi_e, dpsi_e] = basis::lagrange_eval(out.support_r, edges);

  const Eigen::VectorXd trial_support = equidistant_reference(p);
  const auto [phi_q, dphi_q] = basis::lagrange_eval(trial_support, qr);
  const auto [phi_lgl, dphi_lgl] =
      basis::lagrange_eval(trial_support, out.support_r);
  const auto [phi_edges, dphi_edges] = basis::lagrange_eval(trial_support, edges);

  // traces of y_h across all time columns
  const auto block = solution.state.block(off, 0, p + 1, n_t + 1);
  const Eigen::MatrixXd y_quad = phi_q.transpose() * block;
  const Eigen::MatrixXd yx_quad = dphi_q.transpose() * block / h;
  const Eigen::MatrixXd y_lgl = phi_lgl.transpose() * block;
  const Eigen::MatrixXd yx_lgl = dphi_lgl.transpose() * block / h;
  const Eigen::MatrixXd yt_quad = (y_quad * tops.D_t.transpose()) *
                                  tops.psi.cwiseInverse().asDiagonal();

  // interface fluxes approximated by averaged one-sided gradients of y_h;
  // the diffusion transform is continuous across the interface
  Eigen::VectorXd flux_left = Eigen::VectorXd::Zero(n_t);
  Eigen::VectorXd flux_right = Eigen::VectorXd::Zero(n_t);
  const bool left_is_domain = element == 0;
  const bool right_is_domain = element == K - 1;
  if (!left_is_domain) {
    const int pl = smesh.degrees[element - 1];
    const int offl = smesh.dof_offset(element - 1);
    Eigen::VectorXd one(1);
    one << 1.0;
    const Eigen::MatrixXd dleft =
        basis::lagrange_eval(equidistant_reference(pl), one).second;
    for (int c = 0; c < n_t; ++c) {
      const double from_left = element_dx(solution.state, offl, pl,
                                          smesh.width(element - 1), dleft, c + 1);
      double own = 0.0;
      for (int i = 0; i <= p; ++i)
        own += dphi_edges(i, 0) * solution.state(off + i, c + 1);
      own /= h;
      const double grad = 0.5 * (from_left + own);
      flux_left[c] = prob.alpha.first(solution.state(off, c + 1)) * grad;
    }
  }
  if (!right_is_domain) {
    const int pr = smesh.degrees[element + 1];
    const int offr = smesh.dof_offset(element + 1);
    Eigen::VectorXd zero(1);
    zero << 0.0;
    const Eigen::MatrixXd dright =
        basis::lagrange_eval(equidistant_reference(pr), zero).second;
    for (int c = 0; c < n_t; ++c) {
      double own = 0.0;
      for (int i = 0; i <= p; ++i)
        own += dphi_edges(i, 1) * solution.state(off + i, c + 1);
      own /= h;
      const double from_right = element_dx(solution.state, offr, pr,
                                           smesh.width(element + 1), dright, c + 1);
      const double grad = 0.5 * (own + from_right);
      flux_right[c] = prob.alpha.first(solution.state(off + p, c + 1)) * grad;
    }
  }

  // initial column from the interpolation mismatch against q(x)
  out.coeffs = Eigen::MatrixXd::Zero(n_err, n_t + 1);
  for (int j = 0; j < n_err; ++j) {
    const double xj = x_left + h * out.support_r[j];
    out.coeffs(j, 0) = prob.initial_condition(xj) - y_lgl(j, 0);
  }

  const bool near_dirichlet =
      left_is_domain && prob.bc_near == problem::BoundaryKind::Dirichlet;
  const bool far_dirichlet =
      right_is_domain && prob.bc_far == problem::BoundaryKind::Dirichlet;
  auto skip_row = [&](int i) {
    return (i == 0 && near_dirichlet) || (i == n_err - 1 && far_dirichlet);
  };

  auto eval_residual = [&](const Eigen::MatrixXd& ecoef, Eigen::VectorXd& res) {
    res.setZero(n_err * n_t);
    const Eigen::MatrixXd e_quad = psi_q.transpose() * ecoef;
    const Eigen::MatrixXd ex_quad = dpsi_q.transpose() * ecoef / h;
    const Eigen::MatrixXd et_quad = (e_quad * tops.D_t.transpose()) *
                                    tops.psi.cwiseInverse().asDiagonal();
    for (int c = 0; c < n_t; ++c) {
      const double t = tops.T[c + 1];
      for (int l = 0; l < L; ++l) {
        const double w = y_quad(l, c + 1) + e_quad(l, c + 1);
        const double wx = yx_quad(l, c + 1) + ex_quad(l, c + 1);
        const double wt = yt_quad(l, c) + et_quad(l, c);
        const double scale = 0.5 * h * rule.weights[l];
        const double volume =
            prob.theta.first(w) * wt + prob.beta.first(w) * wx -
            prob.source(qx[l], t);
        const double diffuse = prob.alpha.first(w) * wx;
        for (int i = 0; i < n_err; ++i)
          res[c * n_err + i] +=
              scale * (volume * psi_q(i, l) + diffuse * dpsi_q(i, l) / h);
      }
      double ff, fn;
      if (right_is_domain)
        ff = prob.flux_far.value(y_lgl(n_err - 1, c + 1) + ecoef(n_err - 1, c + 1),
                                 solution.u2[c], t);
      else
        ff = flux_right[c];
      if (left_is_domain)
        fn = prob.flux_near.value(y_lgl(0, c + 1) + ecoef(0, c + 1),
                                  solution.u1[c], t);
      else
        fn = flux_left[c];
      for (int i = 0; i < n_err; ++i)
        res[c * n_err + i] -= ff * psi_e(i, 1) - fn * psi_e(i, 0);
      if (near_dirichlet)
        res[c * n_err + 0] = prob.flux_near.value(
            y_lgl(0, c + 1) + ecoef(0, c + 1), solution.u1[c], t);
      if (far_dirichlet)
        res[c * n_err + n_err - 1] = prob.flux_far.value(
            y_lgl(n_err - 1, c + 1) + ecoef(n_err - 1, c + 1), solution.u2[c],
            t);
    }
  };

  auto eval_jacobian = [&](const Eigen::MatrixXd& ecoef,
                           std::vector<Eigen::Triplet<double>>& trips) {
    const Eigen::MatrixXd e_quad = psi_q.transpose() * ecoef;
    const Eigen::MatrixXd ex_quad = dpsi_q.transpose() * ecoef / h;
    const Eigen::MatrixXd et_quad = (e_quad * tops.D_t.transpose()) *
                                    tops.psi.cwiseInverse().asDiagonal();
    for (int c = 0; c < n_t; ++c) {
      const double t = tops.T[c + 1];
      for (int l = 0; l < L; ++l) {
        const double w = y_quad(l, c + 1) + e_quad(l, c + 1);
        const double wx = yx_quad(l, c + 1) + ex_quad(l, c + 1);
        const double wt = yt_quad(l, c) + et_quad(l, c);
        const double scale = 0.5 * h * rule.weights[l];
        const double dvol_dw = prob.theta.second(w) * wt +
                               prob.beta.second(w) * wx;
        const double kappa = prob.beta.first(w);
        const double aprime = prob.alpha.first(w);
        const double ddif_dw = prob.alpha.second(w) * wx;
        for (int i = 0; i < n_err; ++i) {
          if (skip_row(i)) continue;
          for (int j = 0; j < n_err; ++j) {
            const double v =
                scale * psi_q(i, l) *
                    (dvol_dw * psi_q(j, l) + kappa * dpsi_q(j, l) / h) +
                scale * dpsi_q(i, l) / h *
                    (ddif_dw * psi_q(j, l) + aprime * dpsi_q(j, l) / h);
            trips.emplace_back(c * n_err + i, c * n_err + j, v);
          }
        }
      }
      if (right_is_domain) {
        const double yb = y_lgl(n_err - 1, c + 1) + ecoef(n_err - 1, c + 1);
        const double d = prob.flux_far.d_y(yb, solution.u2[c], t);
        if (far_dirichlet) {
          trips.emplace_back(c * n_err + n_err - 1, c * n_err + n_err - 1, d);
        } else if (d != 0.0) {
          for (int i = 0; i < n_err; ++i) {
            if (skip_row(i)) continue;
            trips.emplace_back(c * n_err + i, c * n_err + n_err - 1,
                               -d * psi_e(i, 1));
          }
        }
      }
      if (left_is_domain) {
        const double yb = y_lgl(0, c + 1) + ecoef(0, c + 1);
        const double d = prob.flux_near.d_y(yb, solution.u1[c], t);
        if (near_dirichlet) {
          trips.emplace_back(c * n_err + 0, c * n_err + 0, d);
        } else if (d != 0.0) {
          for (int i = 0; i < n_err; ++i) {
            if (skip_row(i)) continue;
            trips.emplace_back(c * n_err + i, c * n_err + 0, d * psi_e(i, 0));
          }
        }
      }
    }
    // mass coupling through the temporal differentiation matrix
    for (int m = 1; m <= n_t; ++m) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(tops.D_t, m); it;
           ++it) {
        const int c = it.row();
        const double dval = it.value() / tops.psi[c];
        for (int l = 0; l < L; ++l) {
          const double w = y_quad(l, c + 1) + e_quad(l, c + 1);
          const double thetap = prob.theta.first(w);
          const double scale = 0.5 * h * rule.weights[l] * thetap * dval;
          for (int i = 0; i < n_err; ++i) {
            if (skip_row(i)) continue;
            for (int j = 0; j < n_err; ++j)
              trips.emplace_back(c * n_err + i, (m - 1) * n_err + j,
                                 scale * psi_q(i, l) * psi_q(j, l));
          }
        }
      }
    }
  };

  out.converged = damped_newton(out.coeffs, n_t, n_err, eval_residual,
                                eval_jacobian);
  spatial_indicator(out, solution);
  if (!out.converged)
    out.indicator = std::numeric_limits<double>::infinity();
  return out;
}

double spatial_indicator(ElementResidual& residual,
                         const transcribe::Solution& solution) {
  const auto& smesh = solution.smesh;
  const int element = residual.element;
  const int p = smesh.degrees[element];
  const int n_err = p + 2;
  const int n_t = static_cast<int>(solution.state.cols()) - 1;
  const double h = smesh.width(element);
  const int off = smesh.dof_offset(element);

  const auto rule = basis::gauss_nodes(basis::RuleKind::LG, 2 * (p + 1));
  const int L = rule.nodes.size();
  const Eigen::VectorXd qr = ((rule.nodes.array() + 1.0) * 0.5).matrix();
  const Eigen::MatrixXd psi_q =
      basis::lagrange_eval(residual.support_r, qr).first;
  const auto [phi_lgl, dphi_lgl] =
      basis::lagrange_eval(equidistant_reference(p), residual.support_r);
  const auto block = solution.state.block(off, 0, p + 1, n_t + 1);
  const Eigen::MatrixXd y_lgl = phi_lgl.transpose() * block;
  const Eigen::MatrixXd yx_lgl = dphi_lgl.transpose() * block / h;

  residual.norm_per_time.resize(n_t + 1);
  residual.chi.resize(n_t + 1);
  const Eigen::MatrixXd e_quad = psi_q.transpose() * residual.coeffs;
  for (int c = 0; c <= n_t; ++c) {
    double norm2 = 0.0;
    for (int l = 0; l < L; ++l)
      norm2 += 0.5 * h * rule.weights[l] * e_quad(l, c) * e_quad(l, c);
    residual.norm_per_time[c] = std::sqrt(norm2);
    residual.chi[c] = 1.0 + std::max(y_lgl.col(c).cwiseAbs().maxCoeff(),
                                     yx_lgl.col(c).cwiseAbs().maxCoeff());
  }
  residual.indicator =
      (residual.norm_per_time.array() / residual.chi.array()).maxCoeff();
  (void)n_err;
  return residual.indicator;
}

IntervalResidual solve_interval_residual(
    int interval, const transcribe::Solution& solution,
    const problem::ProblemDefinition& prob,
    const spatial::SpatialOperators& sops,
    const temporal::TemporalOperators& tops) {
  const auto& tmesh = solution.tmesh;
  const int n = tmesh.degrees[interval];
  const int n_pts = n + 1;
  const int n_x = static_cast<int>(solution.state.rows());
  const double psi = tmesh.psi(interval);
  const int cs = tops.col_start[interval];

  IntervalResidual out;
  out.interval = interval;

  const auto rule = basis::gauss_nodes(basis::RuleKind::FLGR, n_pts);
  out.support_s.resize(n_pts + 1);
  out.support_s[0] = -1.0;
  out.support_s.tail(n_pts) = rule.nodes;

  Eigen::VectorXd old_support(n + 1);
  old_support[0] = -1.0;
  old_support.tail(n) = tops.nodes[interval];
  const auto [lag_vals, lag_derivs] =
      basis::lagrange_eval(old_support, out.support_s);
  Eigen::MatrixXd y_tilde = Eigen::MatrixXd::Zero(n_x, n_pts + 1);
  Eigen::MatrixXd ys_tilde = Eigen::MatrixXd::Zero(n_x, n_pts + 1);
  for (int q = 0; q <= n_pts; ++q) {
    for (int i = 0; i <= n; ++i) {
      y_tilde.col(q) += lag_vals(i, q) * solution.state.col(cs + i);
      ys_tilde.col(q) += lag_derivs(i, q) * solution.state.col(cs + i);
    }
  }

  // control interpolant excludes the noncollocated point
  const Eigen::VectorXd eval_pts = out.support_s.tail(n_pts);
  const Eigen::MatrixXd ctrl_vals =
      basis::lagrange_eval(tops.nodes[interval], eval_pts).first;
  Eigen::VectorXd u1_tilde = Eigen::VectorXd::Zero(n_pts);
  Eigen::VectorXd u2_tilde = Eigen::VectorXd::Zero(n_pts);
  for (int a = 0; a < n_pts; ++a) {
    for (int i = 0; i < n; ++i) {
      u1_tilde[a] += ctrl_vals(i, a) * solution.u1[cs + i];
      u2_tilde[a] += ctrl_vals(i, a) * solution.u2[cs + i];
    }
  }

  Eigen::VectorXd t_tilde(n_pts);
  for (int a = 0; a < n_pts; ++a)
    t_tilde[a] = temporal::time_of(tmesh, interval + 1, rule.nodes[a]);
  const Eigen::MatrixXd f_tilde =
      spatial::project_source(solution.smesh, sops, prob.source, t_tilde);

  const Eigen::MatrixXd dhat = basis::diff_matrix(out.support_s, rule.nodes);

  const bool near_dirichlet = prob.bc_near == problem::BoundaryKind::Dirichlet;
  const bool far_dirichlet = prob.bc_far == problem::BoundaryKind::Dirichlet;
  auto skip_row = [&](int r) {
    return (r == 0 && near_dirichlet) || (r == n_x - 1 && far_dirichlet);
  };

  out.coeffs = Eigen::MatrixXd::Zero(n_x, n_pts + 1);

  auto eval_residual = [&](const Eigen::MatrixXd& ecoef, Eigen::VectorXd& res) {
    const Eigen::MatrixXd w = y_tilde + ecoef;
    Eigen::MatrixXd theta_w(n_x, n_pts + 1);
    for (int q = 0; q <= n_pts; ++q)
      for (int r = 0; r < n_x; ++r) theta_w(r, q) = prob.theta.value(w(r, q));
    const Eigen::MatrixXd mass = sops.M * (theta_w * dhat.transpose());
    res.resize(n_x * n_pts);
    for (int a = 0; a < n_pts; ++a) {
      Eigen::VectorXd beta_w(n_x), alpha_w(n_x);
      for (int r = 0; r < n_x; ++r) {
        beta_w[r] = prob.beta.value(w(r, a + 1));
        alpha_w[r] = prob.alpha.value(w(r, a + 1));
      }
      Eigen::VectorXd col =
          mass.col(a) +
          psi * (sops.N * beta_w + sops.A * alpha_w - f_tilde.col(a));
      const double fn =
          prob.flux_near.value(w(0, a + 1), u1_tilde[a], t_tilde[a]);
      const double ff =
          prob.flux_far.value(w(n_x - 1, a + 1), u2_tilde[a], t_tilde[a]);
      if (near_dirichlet)
        col[0] = fn;
      else
        col[0] += psi * fn;
      if (far_dirichlet)
        col[n_x - 1] = ff;
      else
        col[n_x - 1] -= psi * ff;
      res.segment(a * n_x, n_x) = col;
    }
  };

  auto eval_jacobian = [&](const Eigen::MatrixXd& ecoef,
                           std::vector<Eigen::Triplet<double>>& trips) {
    const Eigen::MatrixXd w = y_tilde + ecoef;
    for (int q = 1; q <= n_pts; ++q) {
      for (int a = 0; a < n_pts; ++a) {
        const double dval = dhat(a, q);
        if (dval == 0.0) continue;
        for (int c = 0; c < sops.M.outerSize(); ++c) {
          const double thetap = prob.theta.first(w(c, q));
          for (Eigen::SparseMatrix<double>::InnerIterator it(sops.M, c); it;
               ++it) {
            if (skip_row(it.row())) continue;
            trips.emplace_back(a * n_x + it.row(), (q - 1) * n_x + c,
                               dval * it.value() * thetap);
          }
        }
      }
    }
    for (int a = 0; a < n_pts; ++a) {
      for (int c = 0; c < n_x; ++c) {
        const double kappa = prob.beta.first(w(c, a + 1));
        const double aprime = prob.alpha.first(w(c, a + 1));
        for (Eigen::SparseMatrix<double>::InnerIterator it(sops.N, c); it;
             ++it) {
          if (skip_row(it.row())) continue;
          trips.emplace_back(a * n_x + it.row(), a * n_x + c,
                             psi * it.value() * kappa);
        }
        for (Eigen::SparseMatrix<double>::InnerIterator it(sops.A, c); it;
             ++it) {
          if (skip_row(it.row())) continue;
          trips.emplace_back(a * n_x + it.row(), a * n_x + c,
                             psi * it.value() * aprime);
        }
      }
      const double dfn =
          prob.flux_near.d_y(w(0, a + 1), u1_tilde[a], t_tilde[a]);
      const double dff =
          prob.flux_far.d_y(w(n_x - 1, a + 1), u2_tilde[a], t_tilde[a]);
      trips.emplace_back(a * n_x + 0, a * n_x + 0,
                         near_dirichlet ? dfn : psi * dfn);
      trips.emplace_back(a * n_x + n_x - 1, a * n_x + n_x - 1,
                         far_dirichlet ? dff : -psi * dff);
    }
  };

  out.converged = damped_newton(out.coeffs, n_pts, n_x, eval_residual,
                                eval_jacobian);
  temporal_indicator(out, solution);
  if (!out.converged)
    out.indicator = std::numeric_limits<double>::infinity();
  return out;
}

double temporal_indicator(IntervalResidual& residual,
                          const transcribe::Solution& solution) {
  const auto& tmesh = solution.tmesh;
  const int interval = residual.interval;
  const int n = tmesh.degrees[interval];
  const int n_pts = n + 1;
  const int n_x = static_cast<int>(solution.state.rows());
  const double psi = tmesh.psi(interval);

  const auto tops = temporal::build_temporal(tmesh);
  const int cs = tops.col_start[interval];
  const auto rule = basis::gauss_nodes(basis::RuleKind::FLGR, n_pts);

  Eigen::VectorXd old_support(n + 1);
  old_support[0] = -1.0;
  old_support.tail(n) = tops.nodes[interval];
  const auto [lag_vals, lag_derivs] =
      basis::lagrange_eval(old_support, residual.support_s);
  Eigen::MatrixXd y_tilde = Eigen::MatrixXd::Zero(n_x, n_pts + 1);
  Eigen::MatrixXd ys_tilde = Eigen::MatrixXd::Zero(n_x, n_pts + 1);
  for (int q = 0; q <= n_pts; ++q)
    for (int i = 0; i <= n; ++i) {
      y_tilde.col(q) += lag_vals(i, q) * solution.state.col(cs + i);
      ys_tilde.col(q) += lag_derivs(i, q) * solution.state.col(cs + i);
    }

  residual.norm_per_row.resize(n_x);
  residual.chi.resize(n_x);
  for (int r = 0; r < n_x; ++r) {
    double norm2 = 0.0;
    for (int a = 0; a < n_pts; ++a)
      norm2 +=
          rule.weights[a] * residual.coeffs(r, a + 1) * residual.coeffs(r, a + 1);
    residual.norm_per_row[r] = std::sqrt(psi * norm2);
    residual.chi[r] = 1.0 + std::max(y_tilde.row(r).cwiseAbs().maxCoeff(),
                                     ys_tilde.row(r).cwiseAbs().maxCoeff() / psi);
  }
  residual.indicator =
      (residual.norm_per_row.array() / residual.chi.array()).maxCoeff();
  return residual.indicator;
}

ErrorReport estimate_all(const transcribe::Solution& solution,
                         const problem::ProblemDefinition& prob,
                         const spatial::SpatialOperators& sops,
                         const temporal::TemporalOperators& tops,
                         int threads) {
  ErrorReport report;
  const int K = solution.smesh.element_count();
  const int J = solution.tmesh.interval_count();
  report.elements.resize(K);
  report.intervals.resize(J);

  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, workers);

  // the two dimensions run in sequence; cells within a dimension may run on
  // separate workers with results assembled by index
  auto run_cells = [&](int count, auto&& body) {
    const int use = std::min(workers, count);
    if (use <= 1) {
      for (int i = 0; i < count; ++i) body(i);
      return;
    }
    std::vector<std::thread> pool;
    pool.reserve(use);
    for (int w = 0; w < use; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < count; i += use) body(i);
      });
    for (auto& th : pool) th.join();
  };

  const auto t0 = std::chrono::steady_clock::now();
  run_cells(K, [&](int k) {
    report.elements[k] = solve_element_residual(k, solution, prob, sops, tops);
  });
  const auto t1 = std::chrono::steady_clock::now();
  run_cells(J, [&](int j) {
    report.intervals[j] =
        solve_interval_residual(j, solution, prob, sops, tops);
  });
  const auto t2 = std::chrono::steady_clock::now();
  report.time_elements = std::chrono::duration<double>(t1 - t0).count();
  report.time_intervals = std::chrono::duration<double>(t2 - t1).count();

  for (const auto& e : report.elements)
    if (!e.converged)
      report.warnings.push_back("element " + std::to_string(e.element) +
                                " residual solve did not converge");
  for (const auto& e : report.intervals)
    if (!e.converged)
      report.warnings.push_back("interval " + std::to_string(e.interval) +
                                " residual solve did not converge");
  return report;
}

}  // namespace hpoc::estimator
