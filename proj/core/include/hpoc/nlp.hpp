#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <functional>
#include <string>

namespace hpoc::nlp {

/// Sparse nonlinear program
///   min f(z)  s.t.  c_E(z) = 0,  c_I(z) <= 0,  l <= z <= u,
/// with constraint rows ordered equalities-first and a Jacobian whose
/// sparsity pattern is fixed across iterates. Components with
/// lower == upper are held fixed. |bound| >= 1e19 means absent.
struct NlpSpec {
  int num_variables = 0;
  int num_equalities = 0;
  int num_inequalities = 0;
  Eigen::VectorXd lower, upper;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;
  std::function<void(const Eigen::VectorXd&, Eigen::SparseMatrix<double>&)>
      jacobian;
  Eigen::SparseMatrix<double> jacobian_pattern;
};

struct SolveOptions {
  double tol = 1e-12;
  double acceptable_tol = 1e-10;
  int acceptable_stall_iterations = 15;
  int max_iterations = 3000;
  double mu_init = 1e-1;
  double kappa_mu = 10.0;  // barrier drops when kkt <= kappa_mu * mu
  int lbfgs_memory = 6;
  bool verbose = false;
};

enum class SolveStatus { Optimal, Acceptable, MaxIter, Failed };

struct SolveResult {
  Eigen::VectorXd z;
  Eigen::VectorXd mult_eq;       // equality multipliers
  Eigen::VectorXd mult_ineq;     // inequality multipliers (>= 0)
  Eigen::VectorXd mult_lower;    // bound multipliers (>= 0)
  Eigen::VectorXd mult_upper;    // bound multipliers (>= 0)
  SolveStatus status = SolveStatus::Failed;
  double kkt_error = 0.0;
  int iterations = 0;
  std::string message;
};

/// Primal-dual interior-point solve with a limited-memory BFGS model of the
/// Lagrangian Hessian, an l1 merit line search, and monotone barrier
/// reduction. Deterministic for identical inputs.
SolveResult solve(const NlpSpec& spec, const Eigen::VectorXd& z0,
                  const SolveOptions& options = {});

/// Scaled max-norm KKT error (stationarity, feasibility, complementarity)
/// at mu = 0; the solver's termination metric.
double kkt_error(const NlpSpec& spec, const Eigen::VectorXd& z,
                 const Eigen::VectorXd& mult_eq,
                 const Eigen::VectorXd& mult_ineq,
                 const Eigen::VectorXd& mult_lower,
                 const Eigen::VectorXd& mult_upper);

}  // namespace hpoc::nlp
