#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hpoc/problem.hpp"
#include "hpoc/transcribe.hpp"

namespace hpoc::estimator {

/// Solved element residual problem: the error function lives on p+2 LGL
/// support points (one degree above the trial space) across all time
/// columns; column 0 carries the initial-condition mismatch.
struct ElementResidual {
  int element = 0;
  Eigen::VectorXd support_r;   // LGL support on [0,1]
  Eigen::MatrixXd coeffs;      // (p+2) x (N_t+1)
  Eigen::VectorXd norm_per_time;  // L2 norm of e_h at each time point
  Eigen::VectorXd chi;            // relative scaling per time point
  double indicator = 0.0;
  bool converged = true;
};

/// Solved interval residual problem: the error is collocated at n_t+1 fLGR
/// points distinct from the NLP's, with a zero initial column.
struct IntervalResidual {
  int interval = 0;
  Eigen::VectorXd support_s;   // n_t+2 points on [-1,1]
  Eigen::MatrixXd coeffs;      // N_x x (n_t+2)
  Eigen::VectorXd norm_per_row;  // weighted L2 norm per spatial coefficient
  Eigen::VectorXd chi;           // relative scaling per spatial coefficient
  double indicator = 0.0;
  bool converged = true;
};

struct ErrorReport {
  std::vector<ElementResidual> elements;
  std::vector<IntervalResidual> intervals;
  std::vector<std::string> warnings;
  double time_elements = 0.0;   // wall seconds spent on element problems
  double time_intervals = 0.0;  // wall seconds spent on interval problems

  double eta_x_max() const;
  double eta_t_max() const;
  std::vector<double> eta_x() const;
  std::vector<double> eta_t() const;
};

ElementResidual solve_element_residual(int element,
                                       const transcribe::Solution& solution,
                                       const problem::ProblemDefinition& prob,
                                       const spatial::SpatialOperators& sops,
                                       const temporal::TemporalOperators& tops);

IntervalResidual solve_interval_residual(
    int interval, const transcribe::Solution& solution,
    const problem::ProblemDefinition& prob,
    const spatial::SpatialOperators& sops,
    const temporal::TemporalOperators& tops);

/// Relative indicator from a solved element residual: the max over time
/// points of the L2 norm of e_h scaled by 1 + max(|y_h|, |d_x y_h|) over the
/// LGL support. Fills norm_per_time, chi, and indicator.
double spatial_indicator(ElementResidual& residual,
                         const transcribe::Solution& solution);

/// Relative indicator from a solved interval residual: the max over spatial
/// coefficients of sqrt(psi * int e^2 ds) scaled by 1 + max(|Y|, |dY/dt|)
/// over the residual support. Fills norm_per_row, chi, and indicator.
double temporal_indicator(IntervalResidual& residual,
                          const transcribe::Solution& solution);

/// Runs every element problem, then every interval problem (the two
/// dimensions in sequence; cells within a dimension may run on `threads`
/// workers with deterministic assembly). Nonconvergent cells get +inf
/// indicators and a warning instead of aborting.
ErrorReport estimate_all(const transcribe::Solution& solution,
                         const problem::ProblemDefinition& prob,
                         const spatial::SpatialOperators& sops,
                         const temporal::TemporalOperators& tops,
                         int threads = 0);

}  // namespace hpoc::estimator
