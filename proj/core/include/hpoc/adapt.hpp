#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hpoc/estimator.hpp"
#include "hpoc/nlp.hpp"
#include "hpoc/transcribe.hpp"

namespace hpoc::adapt {

/// Exponential decay-rate fit of Legendre expansion coefficients. sigma is
/// clamped to zero whenever the raw fit is nonpositive or degenerate.
struct DecayEstimate {
  Eigen::VectorXd coeffs;
  double sigma = 0.0;
  double log10_c = 0.0;
};

/// Legendre coefficients of nodal data sampled at support points already
/// mapped onto [-1, 1].
Eigen::VectorXd legendre_coeffs(const Eigen::VectorXd& support_xi,
                                const Eigen::VectorXd& values);

/// Total-least-squares fit of log10|a_i| against i, after filtering entries
/// below 1e-14 * max|a|. Fewer than two surviving points yields sigma = 0.
DecayEstimate decay_rate(const Eigen::VectorXd& coeffs);

struct MeshAction {
  enum class Kind { Keep, PRefine, HSplit, ReduceDegree, MergeWithNext };
  int cell = 0;
  Kind kind = Kind::Keep;
  int p_new = 0;   // PRefine / ReduceDegree target degree
  int parts = 0;   // HSplit child count
};

struct AdaptOptions {
  double sigma_bar = 0.5;
  int p_max = 8;        // spatial degree cap
  int n_max = 12;       // temporal degree cap
  double rho_safe = 0.1;  // safety factor on reduction/merging
  int max_iterations = 25;
  int threads = 0;
};

/// Refinement-and-reduction plan for the spatial dimension. Elements above
/// the tolerance are p-refined or h-split according to the decay rate of
/// the spatial Legendre coefficients; compliant elements are offered for
/// merging and degree reduction.
std::vector<MeshAction> plan_spatial(const estimator::ErrorReport& report,
                                     const transcribe::Solution& solution,
                                     double eps, const AdaptOptions& options);

std::vector<MeshAction> plan_temporal(const estimator::ErrorReport& report,
                                      const transcribe::Solution& solution,
                                      double eps, const AdaptOptions& options);

/// Degree-reduction candidate for one compliant cell (spatial element when
/// `temporal` is false). Returns Keep when nothing can be stripped.
MeshAction reduce_degree(int cell, const transcribe::Solution& solution,
                         const estimator::ErrorReport& report, double eps,
                         double safety, bool temporal);

/// Merge test for compliant equal-degree neighbours via junction power
/// expansions.
bool try_merge(int cell, const transcribe::Solution& solution,
               const estimator::ErrorReport& report, double eps, double safety,
               bool temporal);

spatial::SpatialMesh apply_spatial(const spatial::SpatialMesh& mesh,
                                   const std::vector<MeshAction>& actions);
temporal::TemporalMesh apply_temporal(const temporal::TemporalMesh& mesh,
                                      const std::vector<MeshAction>& actions);

enum class Strategy { LocalHp, GlobalH, GlobalP, GlobalPh };

/// Global baseline plans: GlobalH doubles the cell count of a violating
/// dimension, GlobalP raises every degree by four, GlobalPh raises degrees
/// by one until the cap then doubles the cell count.
std::vector<MeshAction> global_strategy_spatial(Strategy kind,
                                                const estimator::ErrorReport& r,
                                                const spatial::SpatialMesh& m,
                                                double eps,
                                                const AdaptOptions& options);
std::vector<MeshAction> global_strategy_temporal(Strategy kind,
                                                 const estimator::ErrorReport& r,
                                                 const temporal::TemporalMesh& m,
                                                 double eps,
                                                 const AdaptOptions& options);

struct RunConfig {
  std::string problem_name = "burgers";
  double eps = 1e-4;
  Strategy strategy = Strategy::LocalHp;
  int initial_intervals = 0;      // 0 = problem default
  int initial_points = 0;
  int initial_elements = 0;
  int initial_degree = 0;
  nlp::SolveOptions nlp;
  AdaptOptions adapt;
  std::string out_dir;
  bool emit_plots = false;
};

struct IterationRecord {
  int iteration = 0;
  double eta_t_max = 0.0, eta_x_max = 0.0;
  double objective = 0.0;
  int N_t = 0, J = 0, N_x = 0, K = 0;
  double time_build = 0.0, time_nlp = 0.0;
  double time_estimate_t = 0.0, time_estimate_x = 0.0, time_adapt = 0.0;
  int nlp_iterations = 0;
  nlp::SolveStatus nlp_status = nlp::SolveStatus::Failed;
  std::vector<double> eta_x, eta_t;
  std::vector<std::string> warnings;
  spatial::SpatialMesh smesh;
  temporal::TemporalMesh tmesh;
};

struct RunHistory {
  std::vector<IterationRecord> iterations;
  transcribe::Solution solution;
  bool converged = false;
  bool failed = false;
  std::string message;
};

/// Fig.-4-style driver: build, solve (warm started), estimate, then refine
/// or reduce until every indicator meets eps in both dimensions or the
/// iteration cap is reached. A failed NLP solve is retried once from a cold
/// start before aborting.
RunHistory run_adaptive(const problem::ProblemDefinition& prob,
                        const RunConfig& config);

}  // namespace hpoc::adapt
