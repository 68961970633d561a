#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <optional>
#include <vector>

#include "hpoc/nlp.hpp"
#include "hpoc/problem.hpp"
#include "hpoc/spatial.hpp"
#include "hpoc/temporal.hpp"

namespace hpoc::transcribe {

/// Packing of the decision vector: state coefficients column-major by time
/// (the noncollocated initial column first), then u1, then u2.
struct DecisionLayout {
  int n_x = 0;  // spatial coefficients
  int n_t = 0;  // collocation points

  int state_index(int row, int col) const { return col * n_x + row; }
  int u1_index(int i) const { return n_x * (n_t + 1) + i; }
  int u2_index(int i) const { return n_x * (n_t + 1) + n_t + i; }
  int size() const { return n_x * (n_t + 1) + 2 * n_t; }
};

/// A solved (or candidate) trajectory on a particular mesh pair.
struct Solution {
  spatial::SpatialMesh smesh;
  temporal::TemporalMesh tmesh;
  Eigen::MatrixXd state;  // N_x x (N_t + 1)
  Eigen::VectorXd u1, u2; // N_t each
  Eigen::VectorXd times;  // N_t + 1
  double objective = 0.0;
};

/// Fully discrete transcription: collocated dynamics rows (by collocation
/// point), initial-condition rows, optional path-constraint rows, bounds,
/// and the analytic derivatives with a fixed sparsity pattern.
class DiscreteOCP {
 public:
  DiscreteOCP(const problem::ProblemDefinition& problem,
              const spatial::SpatialMesh& smesh,
              const temporal::TemporalMesh& tmesh);

  const DecisionLayout& layout() const { return layout_; }
  const spatial::SpatialOperators& spatial_ops() const { return sops_; }
  const temporal::TemporalOperators& temporal_ops() const { return tops_; }
  const problem::ProblemDefinition& problem() const { return problem_; }
  const spatial::SpatialMesh& spatial_mesh() const { return smesh_; }
  const temporal::TemporalMesh& temporal_mesh() const { return tmesh_; }
  const Eigen::VectorXd& support_points() const { return support_; }

  int num_variables() const { return layout_.size(); }
  int num_equalities() const;  // dynamics + initial-condition rows
  int num_inequalities() const;
  const Eigen::VectorXd& lower_bounds() const { return lower_; }
  const Eigen::VectorXd& upper_bounds() const { return upper_; }

  double eval_objective(const Eigen::VectorXd& z) const;
  Eigen::VectorXd eval_gradient(const Eigen::VectorXd& z) const;
  /// equality rows first (dynamics by collocation point, then initial
  /// conditions), inequality rows after
  Eigen::VectorXd eval_constraints(const Eigen::VectorXd& z) const;
  void eval_jacobian(const Eigen::VectorXd& z,
                     Eigen::SparseMatrix<double>& jac) const;
  const Eigen::SparseMatrix<double>& jacobian_pattern() const {
    return pattern_;
  }

  /// Cold start on the first mesh (initial-condition samples, zero controls)
  /// or interpolation of a previous solution onto this mesh.
  Eigen::VectorXd initial_guess(
      const std::optional<Solution>& previous = std::nullopt) const;

  Solution unpack(const Eigen::VectorXd& z) const;
  Eigen::VectorXd pack(const Solution& solution) const;

 private:
  problem::ProblemDefinition problem_;
  spatial::SpatialMesh smesh_;
  temporal::TemporalMesh tmesh_;
  spatial::SpatialOperators sops_;
  temporal::TemporalOperators tops_;
  DecisionLayout layout_;
  Eigen::VectorXd support_;
  Eigen::MatrixXd source_;  // N_x x N_t at collocation times
  Eigen::VectorXd lower_, upper_;
  Eigen::SparseMatrix<double> pattern_;

  void build_pattern();
  void emit_jacobian(const Eigen::VectorXd& z,
                     std::vector<Eigen::Triplet<double>>& out,
                     bool structural) const;
};

/// Interpolates a solution onto new support points and collocation times
/// (time interval-by-interval, then space element-by-element).
Eigen::MatrixXd interpolate_state(const Solution& from,
                                  const spatial::SpatialMesh& to_smesh,
                                  const temporal::TemporalMesh& to_tmesh);

/// Adapts the transcription to the solver interface. The returned spec
/// borrows `ocp`, which must outlive it.
nlp::NlpSpec make_nlp_spec(const DiscreteOCP& ocp);

}  // namespace hpoc::transcribe
