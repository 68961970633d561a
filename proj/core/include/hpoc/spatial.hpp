#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <functional>
#include <vector>

namespace hpoc::spatial {

/// Partition of [x0, xf] into elements, each carrying its own polynomial
/// degree. Element k spans [boundaries[k], boundaries[k+1]]. Lagrange support
/// inside an element is equidistant on the reference coordinate r in [0,1],
/// and the coefficient at a shared element boundary is stored once, so the
/// global coefficient count is sum(degrees) + 1.
struct SpatialMesh {
  Eigen::VectorXd boundaries;
  std::vector<int> degrees;

  int element_count() const { return static_cast<int>(degrees.size()); }
  int num_dofs() const;
  double width(int k) const { return boundaries[k + 1] - boundaries[k]; }
  /// global index of element k's local coefficient 0
  int dof_offset(int k) const;
  /// physical locations of all global support points
  Eigen::VectorXd support_points() const;
  /// index of the element containing x; interior boundary ties go left
  int locate(double x) const;
  void validate() const;
};

SpatialMesh uniform_mesh(double x0, double xf, int elements, int degree);

/// Galerkin operators assembled element-by-element with a 2p-point LG rule
/// per element, plus the per-element quadrature tables reused for source
/// projection and objective integration.
struct SpatialOperators {
  Eigen::SparseMatrix<double> M;  // mass
  Eigen::SparseMatrix<double> N;  // advection (phi_i, d_x phi_j)
  Eigen::SparseMatrix<double> A;  // stiffness

  struct ElementQuadrature {
    Eigen::VectorXd r;        // LG nodes mapped to [0,1]
    Eigen::VectorXd w;        // LG weights (sum 2)
    Eigen::VectorXd x;        // physical quadrature points
    Eigen::MatrixXd phi;      // (p+1) x L basis values at the nodes
    Eigen::MatrixXd dphi_dr;  // (p+1) x L reference-coordinate derivatives
  };
  std::vector<ElementQuadrature> quadrature;
};

SpatialOperators assemble(const SpatialMesh& mesh);

/// Column j holds the load vector of f(., times[j]) under the element LG
/// rules. Throws on non-finite integrand values.
Eigen::MatrixXd project_source(const SpatialMesh& mesh,
                               const std::function<double(double, double)>& f,
                               const Eigen::VectorXd& times);
Eigen::MatrixXd project_source(const SpatialMesh& mesh,
                               const SpatialOperators& ops,
                               const std::function<double(double, double)>& f,
                               const Eigen::VectorXd& times);

enum class Side { Left, Right };

struct StateSample {
  double value;
  double derivative;
};

/// Evaluates the piecewise state and its x-derivative at x. The value is
/// single-valued by continuity; the one-sided derivative follows `side` at
/// interior element boundaries.
StateSample eval_state(const SpatialMesh& mesh, const Eigen::VectorXd& coeffs,
                       double x, Side side = Side::Left);

}  // namespace hpoc::spatial
