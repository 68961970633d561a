#include "hpoc/transcribe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hpoc/basis.hpp"

namespace hpoc::transcribe {

namespace {

Eigen::MatrixXd apply_entrywise(const std::function<double(double)>& f,
                                const Eigen::MatrixXd& in) {
  Eigen::MatrixXd out(in.rows(), in.cols());
  for (int c = 0; c < in.cols(); ++c)
    for (int r = 0; r < in.rows(); ++r) out(r, c) = f(in(r, c));
  return out;
}

bool same_temporal(const temporal::TemporalMesh& a,
                   const temporal::TemporalMesh& b) {
  return a.t0 == b.t0 && a.tf == b.tf && a.degrees == b.degrees &&
         a.tau_points.size() == b.tau_points.size() &&
         a.tau_points == b.tau_points;
}

bool same_spatial(const spatial::SpatialMesh& a, const spatial::SpatialMesh& b) {
  return a.degrees == b.degrees && a.boundaries.size() == b.boundaries.size() &&
         a.boundaries == b.boundaries;
}

// interval of the old mesh containing tau (ties to the left interval)
int locate_interval(const temporal::TemporalMesh& mesh, double tau) {
  const int J = mesh.interval_count();
  for (int j = 0; j < J; ++j)
    if (tau <= mesh.tau_points[j + 1]) return j;
  return J - 1;
}

}  // namespace

DiscreteOCP::DiscreteOCP(const problem::ProblemDefinition& problem,
                         const spatial::SpatialMesh& smesh,
                         const temporal::TemporalMesh& tmesh)
    : problem_(problem), smesh_(smesh), tmesh_(tmesh) {
  smesh_.validate();
  tmesh_.validate();
  sops_ = spatial::assemble(smesh_);
  tops_ = temporal::build_temporal(tmesh_);
  layout_.n_x = smesh_.num_dofs();
  layout_.n_t = tmesh_.num_collocation();
  support_ = smesh_.support_points();
  source_ = spatial::project_source(smesh_, sops_, problem_.source,
                                    tops_.T.tail(layout_.n_t));

  lower_ = Eigen::VectorXd::Constant(layout_.size(), -1e20);
  upper_ = Eigen::VectorXd::Constant(layout_.size(), 1e20);
  for (int i = 0; i < layout_.n_t; ++i) {
    lower_[layout_.u1_index(i)] = problem_.u1_min;
    upper_[layout_.u1_index(i)] = problem_.u1_max;
    lower_[layout_.u2_index(i)] = problem_.u2_min;
    upper_[layout_.u2_index(i)] = problem_.u2_max;
  }
  build_pattern();
}

int DiscreteOCP::num_equalities() const {
  return layout_.n_x * layout_.n_t + layout_.n_x;
}

int DiscreteOCP::num_inequalities() const {
  return problem_.path ? layout_.n_x * layout_.n_t : 0;
}

double DiscreteOCP::eval_objective(const Eigen::VectorXd& z) const {
  const int n_x = layout_.n_x;
  const int n_t = layout_.n_t;
  const Eigen::Map<const Eigen::MatrixXd> state(z.data(), n_x, n_t + 1);

  double total = 0.0;
  for (int i = 0; i < n_t; ++i) {
    const double t = tops_.T[i + 1];
    double integral = 0.0;
    for (int k = 0; k < smesh_.element_count(); ++k) {
      const auto& q = sops_.quadrature[k];
      const int off = smesh_.dof_offset(k);
      const int p = smesh_.degrees[k];
      const double h = smesh_.width(k);
      for (int l = 0; l < q.w.size(); ++l) {
        double y = 0.0;
        for (int b = 0; b <= p; ++b) y += q.phi(b, l) * state(off + b, i + 1);
        integral += 0.5 * h * q.w[l] * problem_.lagrange_integrand(q.x[l], t, y);
      }
    }
    const double pw = problem_.pointwise.value(
        t, z[layout_.u1_index(i)], z[layout_.u2_index(i)], state(0, i + 1),
        state(n_x - 1, i + 1));
    total += tops_.psi[i] * tops_.omega[i] * (integral + pw);
  }
  if (!std::isfinite(total))
    throw std::runtime_error("hpoc::transcribe: non-finite objective");
  return total;
}

Eigen::VectorXd DiscreteOCP::eval_gradient(const Eigen::VectorXd& z) const {
  const int n_x = layout_.n_x;
  const int n_t = layout_.n_t;
  const Eigen::Map<const Eigen::MatrixXd> state(z.data(), n_x, n_t + 1);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.size());

  for (int i = 0; i < n_t; ++i) {
    const double t = tops_.T[i + 1];
    const double scale = tops_.psi[i] * tops_.omega[i];
    for (int k = 0; k < smesh_.element_count(); ++k) {
      const auto& q = sops_.quadrature[k];
      const int off = smesh_.dof_offset(k);
      const int p = smesh_.degrees[k];
      const double h = smesh_.width(k);
      for (int l = 0; l < q.w.size(); ++l) {
        double y = 0.0;
        for (int b = 0; b <= p; ++b) y += q.phi(b, l) * state(off + b, i + 1);
        const double dl = problem_.lagrange_dy(q.x[l], t, y);
        const double w = scale * 0.5 * h * q.w[l] * dl;
        for (int b = 0; b <= p; ++b)
          grad[layout_.state_index(off + b, i + 1)] += w * q.phi(b, l);
      }
    }
    const double u1 = z[layout_.u1_index(i)];
    const double u2 = z[layout_.u2_index(i)];
    const double y0 = state(0, i + 1);
    const double yf = state(n_x - 1, i + 1);
    grad[layout_.u1_index(i)] += scale * problem_.pointwise.d_u1(t, u1, u2, y0, yf);
    grad[layout_.u2_index(i)] += scale * problem_.pointwise.d_u2(t, u1, u2, y0, yf);
    grad[layout_.state_index(0, i + 1)] +=
        scale * problem_.pointwise.d_y_near(t, u1, u2, y0, yf);
    grad[layout_.state_index(n_x - 1, i + 1)] +=
        scale * problem_.pointwise.d_y_far(t, u1, u2, y0, yf);
  }
  return grad;
}

Eigen::VectorXd DiscreteOCP::eval_constraints(const Eigen::VectorXd& z) const {
  const int n_x = layout_.n_x;
  const int n_t = layout_.n_t;
  const Eigen::Map<const Eigen::MatrixXd> state(z.data(), n_x, n_t + 1);

  const Eigen::MatrixXd theta = apply_entrywise(problem_.theta.value, state);
  // M (D_t Theta^T)^T = M Theta D_t^T
  Eigen::MatrixXd residual = sops_.M * (theta * tops_.D_t.transpose());

  for (int i = 0; i < n_t; ++i) {
    const double psi = tops_.psi[i];
    const double t = tops_.T[i + 1];
    const Eigen::VectorXd col = state.col(i + 1);
    Eigen::VectorXd beta(n_x), alpha(n_x);
    for (int r = 0; r < n_x; ++r) {
      beta[r] = problem_.beta.value(col[r]);
      alpha[r] = problem_.alpha.value(col[r]);
    }
    residual.col(i) += psi * (sops_.N * beta + sops_.A * alpha - source_.col(i));
    const double u1 = z[layout_.u1_index(i)];
    const double u2 = z[layout_.u2_index(i)];
    if (problem_.bc_near == problem::BoundaryKind::Neumann)
      residual(0, i) += psi * problem_.flux_near.value(col[0], u1, t);
    else
      residual(0, i) = problem_.flux_near.value(col[0], u1, t);
    if (problem_.bc_far == problem::BoundaryKind::Neumann)
      residual(n_x - 1, i) -= psi * problem_.flux_far.value(col[n_x - 1], u2, t);
    else
      residual(n_x - 1, i) = problem_.flux_far.value(col[n_x - 1], u2, t);
  }

  Eigen::VectorXd out(num_equalities() + num_inequalities());
  for (int i = 0; i < n_t; ++i) out.segment(i * n_x, n_x) = residual.col(i);
  for (int m = 0; m < n_x; ++m)
    out[n_t * n_x + m] = state(m, 0) - problem_.initial_condition(support_[m]);

  if (problem_.path) {
    const auto& d = *problem_.path;
    int row = num_equalities();
    for (int i = 0; i < n_t; ++i) {
      const double t = tops_.T[i + 1];
      const double u1 = z[layout_.u1_index(i)];
      const double u2 = z[layout_.u2_index(i)];
      for (int m = 0; m < n_x; ++m)
        out[row++] = d.value(state(m, i + 1), support_[m], t, u1, u2);
    }
  }
  if (!out.allFinite()) {
    for (int i = 0; i < out.size(); ++i)
      if (!std::isfinite(out[i]))
        throw std::runtime_error(
            "hpoc::transcribe: non-finite constraint residual in row " +
            std::to_string(i));
  }
  return out;
}

void DiscreteOCP::build_pattern() {
  std::vector<Eigen::Triplet<double>> trips;
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(layout_.size());
  emit_jacobian(z, trips, true);
  pattern_.resize(num_equalities() + num_inequalities(), layout_.size());
  pattern_.setFromTriplets(trips.begin(), trips.end());
}

void DiscreteOCP::eval_jacobian(const Eigen::VectorXd& z,
                                Eigen::SparseMatrix<double>& jac) const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(pattern_.nonZeros());
  emit_jacobian(z, trips, false);
  jac.resize(num_equalities() + num_inequalities(), layout_.size());
  jac.setFromTriplets(trips.begin(), trips.end());
}

void DiscreteOCP::emit_jacobian(const Eigen::VectorXd& z,
                                std::vector<Eigen::Triplet<double>>& out,
                                bool structural) const {
  const int n_x = layout_.n_x;
  const int n_t = layout_.n_t;
  const Eigen::Map<const Eigen::MatrixXd> state(z.data(), n_x, n_t + 1);

  struct {
    std::vector<Eigen::Triplet<double>>* out;
    bool structural;
    void add(int row, int col, double value) {
      out->emplace_back(row, col, structural ? 1.0 : value);
    }
  } sink{&out, structural};

  const bool near_dirichlet = problem_.bc_near == problem::BoundaryKind::Dirichlet;
  const bool far_dirichlet = problem_.bc_far == problem::BoundaryKind::Dirichlet;

  // mass-term coupling: row block i couples to state column m through
  // D_t(i, m) and the theta chain factor
  for (int m = 0; m <= n_t; ++m) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(tops_.D_t, m); it; ++it) {
      const int i = it.row();     // collocation row block
      const double dval = it.value();
      for (int c = 0; c < sops_.M.outerSize(); ++c) {
        const double tp = problem_.theta.first(state(c, m));
        for (Eigen::SparseMatrix<double>::InnerIterator mit(sops_.M, c); mit;
             ++mit) {
          const int r = mit.row();
          if ((r == 0 && near_dirichlet) || (r == n_x - 1 && far_dirichlet))
            continue;
          sink.add(i * n_x + r, layout_.state_index(c, m), dval * mit.value() * tp);
        }
      }
    }
  }

  for (int i = 0; i < n_t; ++i) {
    const double psi = tops_.psi[i];
    const double t = tops_.T[i + 1];
    const Eigen::VectorXd col = state.col(i + 1);
    const double u1 = z[layout_.u1_index(i)];
    const double u2 = z[layout_.u2_index(i)];

    for (int c = 0; c < n_x; ++c) {
      const double kappa = problem_.beta.first(col[c]);
      const double ap = problem_.alpha.first(col[c]);
      for (Eigen::SparseMatrix<double>::InnerIterator nit(sops_.N, c); nit; ++nit) {
        const int r = nit.row();
        if ((r == 0 && near_dirichlet) || (r == n_x - 1 && far_dirichlet))
          continue;
        sink.add(i * n_x + r, layout_.state_index(c, i + 1),
                 psi * nit.value() * kappa);
      }
      for (Eigen::SparseMatrix<double>::InnerIterator ait(sops_.A, c); ait; ++ait) {
        const int r = ait.row();
        if ((r == 0 && near_dirichlet) || (r == n_x - 1 && far_dirichlet))
          continue;
        sink.add(i * n_x + r, layout_.state_index(c, i + 1),
                 psi * ait.value() * ap);
      }
    }

    if (near_dirichlet) {
      sink.add(i * n_x + 0, layout_.state_index(0, i + 1),
               problem_.flux_near.d_y(col[0], u1, t));
      sink.add(i * n_x + 0, layout_.u1_index(i),
               problem_.flux_near.d_u(col[0], u1, t));
    } else {
      sink.add(i * n_x + 0, layout_.state_index(0, i + 1),
               psi * problem_.flux_near.d_y(col[0], u1, t));
      sink.add(i * n_x + 0, layout_.u1_index(i),
               psi * problem_.flux_near.d_u(col[0], u1, t));
    }
    if (far_dirichlet) {
      sink.add(i * n_x + (n_x - 1), layout_.state_index(n_x - 1, i + 1),
               problem_.flux_far.d_y(col[n_x - 1], u2, t));
      sink.add(i * n_x + (n_x - 1), layout_.u2_index(i),
               problem_.flux_far.d_u(col[n_x - 1], u2, t));
    } else {
      sink.add(i * n_x + (n_x - 1), layout_.state_index(n_x - 1, i + 1),
               -psi * problem_.flux_far.d_y(col[n_x - 1], u2, t));
      sink.add(i * n_x + (n_x - 1), layout_.u2_index(i),
               -psi * problem_.flux_far.d_u(col[n_x - 1], u2, t));
    }
  }

  for (int m = 0; m < n_x; ++m)
    sink.add(n_t * n_x + m, layout_.state_index(m, 0), 1.0);

  if (problem_.path) {
    const auto& d = *problem_.path;
    int row = num_equalities();
    for (int i = 0; i < n_t; ++i) {
      const double t = tops_.T[i + 1];
      const double u1 = z[layout_.u1_index(i)];
      const double u2 = z[layout_.u2_index(i)];
      for (int m = 0; m < n_x; ++m) {
        sink.add(row, layout_.state_index(m, i + 1),
                 d.d_y(state(m, i + 1), support_[m], t, u1, u2));
        sink.add(row, layout_.u1_index(i),
                 d.d_u1(state(m, i + 1), support_[m], t, u1, u2));
        sink.add(row, layout_.u2_index(i),
                 d.d_u2(state(m, i + 1), support_[m], t, u1, u2));
        ++row;
      }
    }
  }
}

Eigen::MatrixXd interpolate_state(const Solution& from,
                                  const spatial::SpatialMesh& to_smesh,
                                  const temporal::TemporalMesh& to_tmesh) {
  const auto from_tops = temporal::build_temporal(from.tmesh);
  const auto to_tops = temporal::build_temporal(to_tmesh);
  const int old_nx = from.smesh.num_dofs();
  const int new_nt = to_tmesh.num_collocation();

  // time first: old coefficient rows interpolated to the new time columns
  Eigen::MatrixXd staged;
  if (same_temporal(from.tmesh, to_tmesh)) {
    staged = from.state;
  } else {
    staged.resize(old_nx, new_nt + 1);
    staged.col(0) = from.state.col(0);
    for (int j = 0; j < to_tmesh.interval_count(); ++j) {
      const int n = to_tmesh.degrees[j];
      for (int a = 0; a < n; ++a) {
        const int col = to_tops.col_start[j] + a + 1;
        const double tau =
            to_tmesh.tau_points[j] +
            0.5 * (to_tops.nodes[j][a] + 1.0) *
                (to_tmesh.tau_points[j + 1] - to_tmesh.tau_points[j]);
        const int oj = locate_interval(from.tmesh, tau);
        const double s_old =
            2.0 * (tau - from.tmesh.tau_points[oj]) /
                (from.tmesh.tau_points[oj + 1] - from.tmesh.tau_points[oj]) -
            1.0;
        const int on = from.tmesh.degrees[oj];
        Eigen::VectorXd support(on + 1);
        support[0] = -1.0;
        support.tail(on) = from_tops.nodes[oj];
        Eigen::VectorXd pt(1);
        pt << s_old;
        const Eigen::MatrixXd vals = basis::lagrange_eval(support, pt).first;
        staged.col(col).setZero();
        for (int q = 0; q <= on; ++q)
          staged.col(col) +=
              vals(q, 0) * from.state.col(from_tops.col_start[oj] + q);
      }
    }
  }

  if (same_spatial(from.smesh, to_smesh)) return staged;

  const Eigen::VectorXd new_support = to_smesh.support_points();
  Eigen::MatrixXd out(to_smesh.num_dofs(), staged.cols());
  for (int c = 0; c < staged.cols(); ++c) {
    const Eigen::VectorXd col = staged.col(c);
    for (int m = 0; m < new_support.size(); ++m)
      out(m, c) = spatial::eval_state(from.smesh, col, new_support[m]).value;
  }
  return out;
}

Eigen::VectorXd DiscreteOCP::initial_guess(
    const std::optional<Solution>& previous) const {
  const int n_x = layout_.n_x;
  const int n_t = layout_.n_t;
  Eigen::VectorXd z(layout_.size());

  if (!previous) {
    Eigen::VectorXd q(n_x);
    for (int m = 0; m < n_x; ++m) q[m] = problem_.initial_condition(support_[m]);
    for (int c = 0; c <= n_t; ++c) z.segment(c * n_x, n_x) = q;
    for (int i = 0; i < n_t; ++i) {
      z[layout_.u1_index(i)] =
          std::clamp(0.0, lower_[layout_.u1_index(i)], upper_[layout_.u1_index(i)]);
      z[layout_.u2_index(i)] =
          std::clamp(0.0, lower_[layout_.u2_index(i)], upper_[layout_.u2_index(i)]);
    }
    return z;
  }

  const Eigen::MatrixXd state = interpolate_state(*previous, smesh_, tmesh_);
  for (int c = 0; c <= n_t; ++c) z.segment(c * n_x, n_x) = state.col(c);

  // controls: Lagrange interpolant over the old collocation points only
  const auto from_tops = temporal::build_temporal(previous->tmesh);
  const bool same_t = same_temporal(previous->tmesh, tmesh_);
  for (int j = 0, i = 0; j < tmesh_.interval_count(); ++j) {
    for (int a = 0; a < tmesh_.degrees[j]; ++a, ++i) {
      double u1, u2;
      if (same_t) {
        u1 = previous->u1[i];
        u2 = previous->u2[i];
      } else {
        const double tau =
            tmesh_.tau_points[j] +
            0.5 * (tops_.nodes[j][a] + 1.0) *
                (tmesh_.tau_points[j + 1] - tmesh_.tau_points[j]);
        const int oj = locate_interval(previous->tmesh, tau);
        const double s_old =
            2.0 * (tau - previous->tmesh.tau_points[oj]) /
                (previous->tmesh.tau_points[oj + 1] -
                 previous->tmesh.tau_points[oj]) -
            1.0;
        const int on = previous->tmesh.degrees[oj];
        Eigen::VectorXd pt(1);
        pt << s_old;
        const Eigen::MatrixXd vals =
            basis::lagrange_eval(from_tops.nodes[oj], pt).first;
        u1 = 0.0;
        u2 = 0.0;
        for (int q = 0; q < on; ++q) {
          u1 += vals(q, 0) * previous->u1[from_tops.col_start[oj] + q];
          u2 += vals(q, 0) * previous->u2[from_tops.col_start[oj] + q];
        }
      }
      z[layout_.u1_index(i)] =
          std::clamp(u1, lower_[layout_.u1_index(i)], upper_[layout_.u1_index(i)]);
      z[layout_.u2_index(i)] =
          std::clamp(u2, lower_[layout_.u2_index(i)], upper_[layout_.u2_index(i)]);
    }
  }
  return z;
}

Solution DiscreteOCP::unpack(const Eigen::VectorXd& z) const {
  if (z.size() != layout_.size())
    throw std::invalid_argument("hpoc::transcribe: decision vector length");
  Solution s;
  s.smesh = smesh_;
  s.tmesh = tmesh_;
  s.state = Eigen::Map<const Eigen::MatrixXd>(z.data(), layout_.n_x,
                                              layout_.n_t + 1);
  s.u1 = z.segment(layout_.u1_index(0), layout_.n_t);
  s.u2 = z.segment(layout_.u2_index(0), layout_.n_t);
  s.times = tops_.T;
  s.objective = eval_objective(z);
  return s;
}

Eigen::VectorXd DiscreteOCP::pack(const Solution& solution) const {
  Eigen::VectorXd z(layout_.size());
  for (int c = 0; c <= layout_.n_t; ++c)
    z.segment(c * layout_.n_x, layout_.n_x) = solution.state.col(c);
  z.segment(layout_.u1_index(0), layout_.n_t) = solution.u1;
  z.segment(layout_.u2_index(0), layout_.n_t) = solution.u2;
  return z;
}

nlp::NlpSpec make_nlp_spec(const DiscreteOCP& ocp) {
  nlp::NlpSpec spec;
  spec.num_variables = ocp.num_variables();
  spec.num_equalities = ocp.num_equalities();
  spec.num_inequalities = ocp.num_inequalities();
  spec.lower = ocp.lower_bounds();
  spec.upper = ocp.upper_bounds();
  spec.objective = [&ocp](const Eigen::VectorXd& z) {
    return ocp.eval_objective(z);
  };
  spec.gradient = [&ocp](const Eigen::VectorXd& z) {
    return ocp.eval_gradient(z);
  };
  spec.constraints = [&ocp](const Eigen::VectorXd& z) {
    return ocp.eval_constraints(z);
  };
  spec.jacobian = [&ocp](const Eigen::VectorXd& z,
                         Eigen::SparseMatrix<double>& jac) {
    ocp.eval_jacobian(z, jac);
  };
  spec.jacobian_pattern = ocp.jacobian_pattern();
  return spec;
}

}  // namespace hpoc::transcribe
