#include "hpoc/nlp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hpoc::nlp {

namespace {

constexpr double kInfinity = 1e19;
constexpr double kSigmaClip = 1e10;   // bound-dual safeguard window
constexpr double kDualRegular = 1e-8;

struct Pair {
  Eigen::VectorXd s, y;
  double sy;
};

// Compact limited-memory BFGS model B = sigma I - U Q^{-1} U^T with
// U = [Y  sigma*S], Q = [[-D, L^T], [L, sigma*S^T S]].
class LbfgsModel {
 public:
  explicit LbfgsModel(int memory) : memory_(memory) {}

  void reset(int dim) {
    dim_ = dim;
    pairs_.clear();
    sigma_ = 1.0;
    rebuild();
  }

  double sigma() const { return sigma_; }
  int rank() const { return 2 * static_cast<int>(pairs_.size()); }
  const Eigen::MatrixXd& basis() const { return u_; }
  const Eigen::MatrixXd& inverse_core() const { return q_neg_; }  // C^{-1} = -Q

  Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = sigma_ * v;
    if (rank() > 0) out -= u_ * q_lu_.solve(u_.transpose() * v);
    return out;
  }

  void update(const Eigen::VectorXd& step, Eigen::VectorXd grad_diff) {
    const double snorm = step.norm();
    if (snorm <= 1e-14) return;
    double sy = step.dot(grad_diff);
    const Eigen::VectorXd bs = multiply(step);
    const double sbs = step.dot(bs);
    if (sbs <= 0.0 || !std::isfinite(sbs)) return;
    if (sy < 0.2 * sbs) {  // Powell damping keeps the model positive definite
      const double theta = 0.8 * sbs / (sbs - sy);
      grad_diff = theta * grad_diff + (1.0 - theta) * bs;
      sy = step.dot(grad_diff);
    }
    if (sy <= 1e-12 * snorm * grad_diff.norm()) return;
    // pairs are scale-invariant in B; normalizing keeps the core matrix
    // well conditioned when step sizes span many orders of magnitude
    pairs_.push_back({step / snorm, grad_diff / snorm, sy / (snorm * snorm)});
    while (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
    sigma_ = std::clamp(grad_diff.squaredNorm() / sy, 1e-8, 1e8);
    rebuild();
  }

 private:
  void rebuild() {
    const int m = static_cast<int>(pairs_.size());
    if (m == 0) {
      u_.resize(dim_, 0);
      q_neg_.resize(0, 0);
      return;
    }
    Eigen::MatrixXd s(dim_, m), y(dim_, m);
    for (int i = 0; i < m; ++i) {
      s.col(i) = pairs_[i].s;
      y.col(i) = pairs_[i].y;
    }
    Eigen::MatrixXd q(2 * m, 2 * m);
    q.setZero();
    for (int i = 0; i < m; ++i) {
      q(i, i) = -pairs_[i].sy;
      for (int j = 0; j < i; ++j) {
        // L(i,j) = s_i . y_j for i > j sits in the off-diagonal blocks
        const double l = pairs_[i].s.dot(pairs_[j].y);
        q(j, i + m) = l;
        q(i + m, j) = l;
      }
    }
    q.bottomRightCorner(m, m) = sigma_ * (s.transpose() * s);
    u_.resize(dim_, 2 * m);
    u_.leftCols(m) = y;
    u_.rightCols(m) = sigma_ * s;
    q_neg_ = -q;
    q_lu_.compute(q);
  }

  int memory_;
  int dim_ = 0;
  std::deque<Pair> pairs_;
  double sigma_ = 1.0;
  Eigen::MatrixXd u_;      // n x 2m
  Eigen::MatrixXd q_neg_;  // C^{-1}
  Eigen::FullPivLU<Eigen::MatrixXd> q_lu_;
};

struct Residuals {
  Eigen::VectorXd dual;        // stationarity, full space
  Eigen::VectorXd c_eq, c_in;  // unscaled constraint values
  double comp_max = 0.0;
  double dual_scale = 1.0, comp_scale = 1.0;
};

double safe_norm_inf(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

class InteriorPoint {
 public:
  InteriorPoint(const NlpSpec& spec, const SolveOptions& options)
      : spec_(spec), opt_(options), lbfgs_(options.lbfgs_memory) {
    n_ = spec.num_variables;
    me_ = spec.num_equalities;
    mi_ = spec.num_inequalities;
    for (int i = 0; i < n_; ++i) {
      if (spec.upper[i] - spec.lower[i] <= 0.0)
        fixed_.push_back(i);
      else
        free_.push_back(i);
    }
    nf_ = static_cast<int>(free_.size());
    free_of_full_.assign(n_, -1);
    for (int i = 0; i < nf_; ++i) free_of_full_[free_[i]] = i;
  }

  SolveResult run(Eigen::VectorXd z0);

 private:
  const NlpSpec& spec_;
  SolveOptions opt_;
  LbfgsModel lbfgs_;
  int n_, me_, mi_, nf_;
  std::vector<int> free_, fixed_;
  std::vector<int> free_of_full_;

  Eigen::VectorXd row_scale_;
  Eigen::SparseMatrix<double> jac_;
  Eigen::VectorXd grad_, cons_;
  double fval_ = 0.0;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;

  bool finite_lower(int i) const { return spec_.lower[i] > -kInfinity; }
  bool finite_upper(int i) const { return spec_.upper[i] < kInfinity; }

  void evaluate(const Eigen::VectorXd& z) {
    fval_ = spec_.objective(z);
    grad_ = spec_.gradient(z);
    cons_ = spec_.constraints(z);
    spec_.jacobian(z, jac_);
    if (!std::isfinite(fval_) || !grad_.allFinite() || !cons_.allFinite())
      throw std::runtime_error("non-finite callback value");
  }

  Residuals residuals(const Eigen::VectorXd& z, const Eigen::VectorXd& y_eq,
                      const Eigen::VectorXd& y_in, const Eigen::VectorXd& zl,
                      const Eigen::VectorXd& zu, double mu) const {
    Residuals r;
    r.dual = grad_;
    Eigen::VectorXd y_full(me_ + mi_);
    y_full.head(me_) = y_eq;
    y_full.tail(mi_) = y_in;
    r.dual += jac_.transpose() * (row_scale_.cwiseProduct(y_full));
    r.dual -= zl;
    r.dual += zu;
    r.c_eq = cons_.head(me_);
    r.c_in = cons_.tail(mi_);

    double comp = 0.0;
    double dual_sum = y_eq.lpNorm<1>() + y_in.lpNorm<1>();
    int dual_count = me_ + mi_;
    for (int i = 0; i < n_; ++i) {
      if (free_of_full_[i] < 0) {
        r.dual[i] = 0.0;  // pinned variable, multiplier implicit
        continue;
      }
      if (finite_lower(i)) {
        comp = std::max(comp, std::abs(zl[i] * (z[i] - spec_.lower[i]) - mu));
        dual_sum += std::abs(zl[i]);
        ++dual_count;
      }
      if (finite_upper(i)) {
        comp = std::max(comp, std::abs(zu[i] * (spec_.upper[i] - z[i]) - mu));
        dual_sum += std::abs(zu[i]);
        ++dual_count;
      }
    }
    r.comp_max = comp;
    const double smax = 100.0;
    r.dual_scale =
        std::max(smax, dual_count > 0 ? dual_sum / dual_count : 0.0) / smax;
    r.comp_scale = r.dual_scale;
    return r;
  }

  // termination metric at mu = 0 including inequality complementarity
  double kkt_metric(const Residuals& r, const Eigen::VectorXd& y_in,
                    const Eigen::VectorXd& s, double mu) const {
    double feas = safe_norm_inf(r.c_eq);
    double comp = r.comp_max;
    for (int i = 0; i < mi_; ++i) {
      feas = std::max(feas, std::max(0.0, r.c_in[i]));
      comp = std::max(comp, std::abs(y_in[i] * s[i] - mu));
    }
    double dual = 0.0;
    for (int i : free_) dual = std::max(dual, std::abs(r.dual[i]));
    return std::max({dual / r.dual_scale, feas, comp / r.comp_scale});
  }
};

SolveResult InteriorPoint::run(Eigen::VectorXd z) {
  SolveResult result;
  result.status = SolveStatus::Failed;
  if (z.size() != n_) throw std::invalid_argument("hpoc::nlp: z0 length");

  // clamp into the box and push strictly inside
  for (int i = 0; i < n_; ++i) {
    if (free_of_full_[i] < 0) {
      z[i] = spec_.lower[i];
      continue;
    }
    const double lo = spec_.lower[i], hi = spec_.upper[i];
    if (finite_lower(i) && finite_upper(i)) {
      const double pad = std::min(1e-2 * std::max(1.0, std::abs(lo)),
                                  1e-2 * (hi - lo));
      z[i] = std::clamp(z[i], lo + pad, hi - pad);
    } else if (finite_lower(i)) {
      z[i] = std::max(z[i], lo + 1e-2 * std::max(1.0, std::abs(lo)));
    } else if (finite_upper(i)) {
      z[i] = std::min(z[i], hi - 1e-2 * std::max(1.0, std::abs(hi)));
    }
  }

  try {
    evaluate(z);
  } catch (const std::exception& e) {
    result.message = std::string("initial evaluation failed: ") + e.what();
    result.z = z;
    return result;
  }

  // fixed row scaling from the initial Jacobian
  row_scale_ = Eigen::VectorXd::Ones(me_ + mi_);
  {
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(me_ + mi_);
    for (int c = 0; c < jac_.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(jac_, c); it; ++it)
        row_norm[it.row()] = std::max(row_norm[it.row()], std::abs(it.value()));
    for (int r = 0; r < me_ + mi_; ++r)
      row_scale_[r] = 1.0 / std::max(1.0, row_norm[r]);
  }

  double mu = opt_.mu_init;
  Eigen::VectorXd s(mi_), y_in(mi_);
  for (int i = 0; i < mi_; ++i) {
    s[i] = std::max(1e-6, -row_scale_[me_ + i] * cons_[me_ + i]);
    y_in[i] = mu / s[i];
  }
  Eigen::VectorXd y_eq = Eigen::VectorXd::Zero(me_);
  Eigen::VectorXd zl = Eigen::VectorXd::Zero(n_), zu = Eigen::VectorXd::Zero(n_);
  for (int i : free_) {
    if (finite_lower(i)) zl[i] = mu / (z[i] - spec_.lower[i]);
    if (finite_upper(i)) zu[i] = mu / (spec_.upper[i] - z[i]);
  }

  lbfgs_.reset(nf_);
  double nu = 1.0;         // l1 penalty weight
  double delta_w = 0.0;    // inertia regularization
  double best_kkt = std::numeric_limits<double>::infinity();
  int stall = 0;
  Eigen::VectorXd best_z = z, best_yeq = y_eq, best_yin = y_in, best_zl = zl,
                  best_zu = zu;

  const int dim = nf_ + me_ + mi_;
  Eigen::SparseMatrix<double> kkt(dim, dim);
  std::vector<Eigen::Triplet<double>> trips;

  int iter = 0;
  for (; iter < opt_.max_iterations; ++iter) {
    Residuals res = residuals(z, y_eq, y_in, zl, zu, 0.0);
    const double kkt0 = kkt_metric(res, y_in, s, 0.0);
    if (kkt0 < best_kkt * (1.0 - 1e-3)) {
      stall = 0;
    } else {
      ++stall;
    }
    if (kkt0 < best_kkt) {
      best_kkt = kkt0;
      best_z = z;
      best_yeq = y_eq;
      best_yin = y_in;
      best_zl = zl;
      best_zu = zu;
    }
    if (opt_.verbose)
      std::printf("it %4d  f % .8e  kkt %.3e  mu %.1e  sig %.1e\n", iter, fval_,
                  kkt0, mu, lbfgs_.sigma());
    if (kkt0 <= opt_.tol) {
      result.status = SolveStatus::Optimal;
      break;
    }
    if (best_kkt <= opt_.acceptable_tol &&
        stall >= opt_.acceptable_stall_iterations) {
      result.status = SolveStatus::Acceptable;
      break;
    }
    if (stall >= 4 * opt_.acceptable_stall_iterations) {
      result.status = SolveStatus::MaxIter;
      result.message = "stalled before reaching tolerance";
      break;
    }

    // monotone barrier reduction
    Residuals res_mu = residuals(z, y_eq, y_in, zl, zu, mu);
    while (mu > opt_.tol / 10.0 &&
           kkt_metric(res_mu, y_in, s, mu) <= opt_.kappa_mu * mu) {
      mu = std::max(opt_.tol / 10.0, mu / 10.0);
      res_mu = residuals(z, y_eq, y_in, zl, zu, mu);
    }

    // assemble the reduced primal-dual system
    Eigen::VectorXd sigma_x = Eigen::VectorXd::Zero(nf_);
    Eigen::VectorXd rhs(dim);
    for (int f = 0; f < nf_; ++f) {
      const int i = free_[f];
      double grad_term = grad_[i];
      if (finite_lower(i)) {
        sigma_x[f] += zl[i] / (z[i] - spec_.lower[i]);
        grad_term -= mu / (z[i] - spec_.lower[i]);
      }
      if (finite_upper(i)) {
        sigma_x[f] += zu[i] / (spec_.upper[i] - z[i]);
        grad_term += mu / (spec_.upper[i] - z[i]);
      }
      rhs[f] = -grad_term;
    }
    {
      Eigen::VectorXd y_full(me_ + mi_);
      y_full.head(me_) = y_eq;
      y_full.tail(mi_) = y_in;
      const Eigen::VectorXd jty = jac_.transpose() * row_scale_.cwiseProduct(y_full);
      for (int f = 0; f < nf_; ++f) rhs[f] -= jty[free_[f]];
    }
    for (int r = 0; r < me_; ++r) rhs[nf_ + r] = -row_scale_[r] * cons_[r];
    for (int i = 0; i < mi_; ++i)
      rhs[nf_ + me_ + i] = -row_scale_[me_ + i] * cons_[me_ + i] - mu / y_in[i];

    Eigen::VectorXd step;
    Eigen::VectorXd step_flat;
    bool solved = false;
    for (int attempt = 0; attempt < 30 && !solved; ++attempt) {
      trips.clear();
      for (int f = 0; f < nf_; ++f)
        trips.emplace_back(f, f, lbfgs_.sigma() + sigma_x[f] + delta_w);
      for (int c = 0; c < jac_.outerSize(); ++c) {
        const int fc = free_of_full_[c];
        if (fc < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(jac_, c); it; ++it) {
          const double v = row_scale_[it.row()] * it.value();
          trips.emplace_back(nf_ + it.row(), fc, v);
          trips.emplace_back(fc, nf_ + it.row(), v);
        }
      }
      for (int r = 0; r < me_; ++r)
        trips.emplace_back(nf_ + r, nf_ + r, -kDualRegular - delta_w * 1e-2);
      for (int i = 0; i < mi_; ++i)
        trips.emplace_back(nf_ + me_ + i, nf_ + me_ + i,
                           -s[i] / y_in[i] - kDualRegular);
      kkt.setFromTriplets(trips.begin(), trips.end());
      if (!analyzed_) {
        ldlt_.analyzePattern(kkt);
        analyzed_ = true;
      }
      ldlt_.factorize(kkt);
      bool ok = ldlt_.info() == Eigen::Success;
      if (ok) {
        // quasi-definite inertia: nf_ positive, me_+mi_ negative pivots
        const auto& d = ldlt_.vectorD();
        int pos = 0, neg = 0, zero = 0;
        for (int i = 0; i < d.size(); ++i) {
          if (d[i] > 0)
            ++pos;
          else if (d[i] < 0)
            ++neg;
          else
            ++zero;
        }
        ok = pos == nf_ && neg == me_ + mi_ && zero == 0;
      }
      if (ok) {
        if (lbfgs_.rank() == 0) {
          step_flat = ldlt_.solve(rhs);
          solved = step_flat.allFinite();
        } else {
          // Woodbury correction for the low-rank quasi-Newton part
          const int rank = lbfgs_.rank();
          Eigen::MatrixXd u_lift = Eigen::MatrixXd::Zero(dim, rank);
          u_lift.topRows(nf_) = lbfgs_.basis()(free_, Eigen::all);
          const Eigen::MatrixXd x_u = ldlt_.solve(u_lift);
          const Eigen::VectorXd x_b = ldlt_.solve(rhs);
          Eigen::MatrixXd mid =
              lbfgs_.inverse_core() + u_lift.transpose() * x_u;
          Eigen::FullPivLU<Eigen::MatrixXd> lu(mid);
          if (lu.isInvertible()) {
            step_flat = x_b - x_u * lu.solve(u_lift.transpose() * x_b);
            solved = step_flat.allFinite();
          }
        }
      }
      if (!solved)
        delta_w = delta_w == 0.0 ? 1e-8 * std::max(1.0, lbfgs_.sigma())
                                 : delta_w * 10.0;
    }
    if (!solved) {
      result.message = "KKT system singular after regularization";
      break;
    }
    step = step_flat;
    delta_w = 0.0;

    Eigen::VectorXd dz_full = Eigen::VectorXd::Zero(n_);
    for (int f = 0; f < nf_; ++f) dz_full[free_[f]] = step[f];
    const Eigen::VectorXd dy_eq = step.segment(nf_, me_);
    const Eigen::VectorXd dy_in = step.segment(nf_ + me_, mi_);
    Eigen::VectorXd ds(mi_), dzl = Eigen::VectorXd::Zero(n_),
                    dzu = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < mi_; ++i)
      ds[i] = mu / y_in[i] - s[i] - s[i] / y_in[i] * dy_in[i];
    for (int i : free_) {
      if (finite_lower(i))
        dzl[i] = mu / (z[i] - spec_.lower[i]) - zl[i] -
                 zl[i] / (z[i] - spec_.lower[i]) * dz_full[i];
      if (finite_upper(i))
        dzu[i] = mu / (spec_.upper[i] - z[i]) - zu[i] +
                 zu[i] / (spec_.upper[i] - z[i]) * dz_full[i];
    }

    // fraction-to-boundary step caps
    const double tau = std::max(0.99, 1.0 - mu);
    double alpha_max = 1.0, alpha_dual = 1.0;
    for (int i : free_) {
      if (finite_lower(i) && dz_full[i] < 0.0)
        alpha_max = std::min(alpha_max,
                             -tau * (z[i] - spec_.lower[i]) / dz_full[i]);
      if (finite_upper(i) && dz_full[i] > 0.0)
        alpha_max = std::min(alpha_max,
                             tau * (spec_.upper[i] - z[i]) / dz_full[i]);
      if (finite_lower(i) && dzl[i] < 0.0)
        alpha_dual = std::min(alpha_dual, -tau * zl[i] / dzl[i]);
      if (finite_upper(i) && dzu[i] < 0.0)
        alpha_dual = std::min(alpha_dual, -tau * zu[i] / dzu[i]);
    }
    for (int i = 0; i < mi_; ++i) {
      if (ds[i] < 0.0) alpha_max = std::min(alpha_max, -tau * s[i] / ds[i]);
      if (dy_in[i] < 0.0)
        alpha_dual = std::min(alpha_dual, -tau * y_in[i] / dy_in[i]);
    }

    // l1 merit line search
    nu = std::max(nu, 1.2 * std::max(safe_norm_inf(y_eq + dy_eq),
                                     safe_norm_inf(y_in + dy_in)) +
                          0.1);
    auto merit = [&](double f, const Eigen::VectorXd& zz,
                     const Eigen::VectorXd& cc, const Eigen::VectorXd& ss) {
      double phi = f;
      for (int i : free_) {
        if (finite_lower(i)) phi -= mu * std::log(zz[i] - spec_.lower[i]);
        if (finite_upper(i)) phi -= mu * std::log(spec_.upper[i] - zz[i]);
      }
      double infeas = 0.0;
      for (int r = 0; r < me_; ++r) infeas += std::abs(row_scale_[r] * cc[r]);
      for (int i = 0; i < mi_; ++i) {
        phi -= mu * std::log(ss[i]);
        infeas += std::abs(row_scale_[me_ + i] * cc[me_ + i] + ss[i]);
      }
      return phi + nu * infeas;
    };
    const double phi0 = merit(fval_, z, cons_, s);
    double dphi = grad_.dot(dz_full);
    double infeas0 = 0.0;
    for (int r = 0; r < me_; ++r) infeas0 += std::abs(row_scale_[r] * cons_[r]);
    for (int i = 0; i < mi_; ++i)
      infeas0 += std::abs(row_scale_[me_ + i] * cons_[me_ + i] + s[i]);
    for (int i : free_) {
      if (finite_lower(i)) dphi -= mu * dz_full[i] / (z[i] - spec_.lower[i]);
      if (finite_upper(i)) dphi += mu * dz_full[i] / (spec_.upper[i] - z[i]);
    }
    for (int i = 0; i < mi_; ++i) dphi -= mu * ds[i] / s[i];
    dphi -= nu * infeas0;

    double alpha = alpha_max;
    bool accepted = false;
    double f_trial = 0.0;
    Eigen::VectorXd z_trial, c_trial, s_trial;
    // merit Armijo backtracking (cheap trials: objective and constraints)
    for (int ls = 0; ls < 40 && !accepted; ++ls) {
      z_trial = z + alpha * dz_full;
      s_trial = s + alpha * ds;
      try {
        f_trial = spec_.objective(z_trial);
        c_trial = spec_.constraints(z_trial);
        if (std::isfinite(f_trial) && c_trial.allFinite() &&
            merit(f_trial, z_trial, c_trial, s_trial) <=
                phi0 + 1e-4 * alpha * std::min(dphi, 0.0)) {
          accepted = true;
          break;
        }
      } catch (const std::exception&) {
        // reject and backtrack
      }
      if (!accepted) alpha *= 0.5;
    }
    if (!accepted) {
      // Near the solution the merit difference drowns in roundoff. Fall back
      // to a damped search that accepts on primal-dual residual decrease.
      const double save_f = fval_;
      const Eigen::VectorXd save_g = grad_, save_c = cons_;
      const Eigen::SparseMatrix<double> save_j = jac_;
      const double e_now = kkt_metric(res_mu, y_in, s, mu);
      alpha = alpha_max;
      for (int t = 0; t < 15 && !accepted; ++t, alpha *= 0.5) {
        z_trial = z + alpha * dz_full;
        s_trial = s + alpha * ds;
        try {
          evaluate(z_trial);
          const Eigen::VectorXd zl_trial = zl + alpha * dzl;
          const Eigen::VectorXd zu_trial = zu + alpha * dzu;
          Eigen::VectorXd y_in_trial = y_in + alpha * dy_in;
          const Residuals trial_res =
              residuals(z_trial, y_eq + alpha * dy_eq, y_in_trial, zl_trial,
                        zu_trial, mu);
          const double e_trial = kkt_metric(trial_res, y_in_trial, s_trial, mu);
          if (e_trial <= (1.0 - 1e-4 * alpha) * e_now) {
            accepted = true;
            f_trial = fval_;
            c_trial = cons_;
          }
        } catch (const std::exception&) {
          // reject and shrink
        }
        if (!accepted) {
          fval_ = save_f;
          grad_ = save_g;
          cons_ = save_c;
          jac_ = save_j;
        }
      }
      if (accepted) {
        // the damped search scales the dual step with the primal one
        alpha_dual = alpha;
        fval_ = save_f;
        grad_ = save_g;
        cons_ = save_c;
        jac_ = save_j;
      }
    }
    if (!accepted) {
      // no measurable progress in any metric; keep the tiny step and let the
      // stagnation counter decide when to stop
      alpha *= 2.0;
      z_trial = z + alpha * dz_full;
      s_trial = s + alpha * ds;
      try {
        f_trial = spec_.objective(z_trial);
        c_trial = spec_.constraints(z_trial);
      } catch (const std::exception& e) {
        result.message = std::string("line search failed: ") + e.what();
        break;
      }
    }

    // quasi-Newton update needs the Lagrangian gradient difference at the
    // new multipliers
    Eigen::VectorXd y_full(me_ + mi_);
    y_full.head(me_) = y_eq + alpha_dual * dy_eq;
    y_full.tail(mi_) = y_in + alpha_dual * dy_in;
    const Eigen::VectorXd lag_old =
        grad_ + jac_.transpose() * row_scale_.cwiseProduct(y_full);

    try {
      evaluate(z_trial);
    } catch (const std::exception& e) {
      result.message = std::string("evaluation failed: ") + e.what();
      break;
    }
    const Eigen::VectorXd lag_new =
        grad_ + jac_.transpose() * row_scale_.cwiseProduct(y_full);

    Eigen::VectorXd step_free(nf_), diff_free(nf_);
    for (int f = 0; f < nf_; ++f) {
      step_free[f] = z_trial[free_[f]] - z[free_[f]];
      diff_free[f] = lag_new[free_[f]] - lag_old[free_[f]];
    }
    lbfgs_.update(step_free, diff_free);

    if (opt_.verbose)
      std::printf("      alpha %.2e amax %.2e adual %.2e acc %d\n", alpha,
                  alpha_max, alpha_dual, accepted ? 1 : -1);
    z = z_trial;
    s = s_trial;
    y_eq += alpha_dual * dy_eq;
    y_in += alpha_dual * dy_in;
    for (int i : free_) {
      if (finite_lower(i)) {
        zl[i] += alpha_dual * dzl[i];
        const double prim = mu / (z[i] - spec_.lower[i]);
        zl[i] = std::clamp(zl[i], prim / kSigmaClip, prim * kSigmaClip);
      }
      if (finite_upper(i)) {
        zu[i] += alpha_dual * dzu[i];
        const double prim = mu / (spec_.upper[i] - z[i]);
        zu[i] = std::clamp(zu[i], prim / kSigmaClip, prim * kSigmaClip);
      }
    }
  }

  if (result.status == SolveStatus::Failed) {
    if (iter >= opt_.max_iterations) {
      result.status = best_kkt <= opt_.acceptable_tol ? SolveStatus::Acceptable
                                                      : SolveStatus::MaxIter;
      if (result.status == SolveStatus::MaxIter)
        result.message = "iteration limit reached";
    } else if (best_kkt <= opt_.acceptable_tol) {
      result.status = SolveStatus::Acceptable;
    }
  }
  result.z = best_z;
  result.mult_eq = row_scale_.head(me_).cwiseProduct(best_yeq);
  result.mult_ineq = row_scale_.tail(mi_).cwiseProduct(best_yin);
  result.mult_lower = best_zl;
  result.mult_upper = best_zu;
  result.kkt_error = best_kkt;
  result.iterations = iter;
  return result;
}

}  // namespace

SolveResult solve(const NlpSpec& spec, const Eigen::VectorXd& z0,
                  const SolveOptions& options) {
  InteriorPoint worker(spec, options);
  return worker.run(z0);
}

double kkt_error(const NlpSpec& spec, const Eigen::VectorXd& z,
                 const Eigen::VectorXd& mult_eq,
                 const Eigen::VectorXd& mult_ineq,
                 const Eigen::VectorXd& mult_lower,
                 const Eigen::VectorXd& mult_upper) {
  const int me = spec.num_equalities;
  const int mi = spec.num_inequalities;
  const Eigen::VectorXd grad = spec.gradient(z);
  const Eigen::VectorXd cons = spec.constraints(z);
  Eigen::SparseMatrix<double> jac;
  spec.jacobian(z, jac);

  Eigen::VectorXd y(me + mi);
  y.head(me) = mult_eq;
  y.tail(mi) = mult_ineq;
  Eigen::VectorXd dual = grad + jac.transpose() * y - mult_lower + mult_upper;

  double comp = 0.0;
  double dual_sum = mult_eq.lpNorm<1>() + mult_ineq.lpNorm<1>();
  int count = me + mi;
  double dual_max = 0.0;
  for (int i = 0; i < spec.num_variables; ++i) {
    const bool fixed = spec.upper[i] - spec.lower[i] <= 0.0;
    if (fixed) continue;
    dual_max = std::max(dual_max, std::abs(dual[i]));
    if (spec.lower[i] > -kInfinity) {
      comp = std::max(comp, std::abs(mult_lower[i] * (z[i] - spec.lower[i])));
      dual_sum += std::abs(mult_lower[i]);
      ++count;
    }
    if (spec.upper[i] < kInfinity) {
      comp = std::max(comp, std::abs(mult_upper[i] * (spec.upper[i] - z[i])));
      dual_sum += std::abs(mult_upper[i]);
      ++count;
    }
  }
  double feas = me > 0 ? cons.head(me).cwiseAbs().maxCoeff() : 0.0;
  for (int i = 0; i < mi; ++i) {
    feas = std::max(feas, std::max(0.0, cons[me + i]));
    comp = std::max(comp, std::abs(mult_ineq[i] * cons[me + i]));
  }
  const double smax = 100.0;
  const double sd = std::max(smax, count > 0 ? dual_sum / count : 0.0) / smax;
  return std::max({dual_max / sd, feas, comp / sd});
}

}  // namespace hpoc::nlp
