#pragma once

#include <Eigen/Dense>
#include <utility>

namespace hpoc::basis {

enum class RuleKind { LG, LGL, FLGR };

/// Gaussian quadrature rule on [-1,+1]. Nodes are strictly increasing and
/// the weights sum to 2. LG nodes lie in (-1,1), LGL nodes include both
/// endpoints, fLGR nodes exclude -1 and include +1.
struct QuadratureRule {
  RuleKind kind;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Computes an n-point rule of the given kind. Exactness degree: LG 2n-1,
/// fLGR 2n-2, LGL 2n-3. Throws std::invalid_argument for n = 0 (or n < 2
/// for LGL).
QuadratureRule gauss_nodes(RuleKind kind, int n);

/// Values and first derivatives of the Lagrange cardinal basis on `support`
/// at `points`. values(i,j) = phi_i(points[j]); derivatives likewise. Any
/// affine chain factor is the caller's responsibility. Evaluation uses the
/// barycentric form.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
lagrange_eval(const Eigen::VectorXd& support, const Eigen::VectorXd& points);

/// Differentiation matrix D with D(k,i) = dphi_i/ds at eval_points[k].
/// Rows sum to zero (a constant differentiates to zero).
Eigen::MatrixXd diff_matrix(const Eigen::VectorXd& support,
                            const Eigen::VectorXd& eval_points);

/// Vandermonde-type matrix [P_0(points) ... P_degree(points)], one row per
/// point, built by the three-term Legendre recurrence. Requires
/// |points| = degree+1.
Eigen::MatrixXd legendre_vandermonde(int degree, const Eigen::VectorXd& points);

/// P_n(x) by the three-term recurrence.
double legendre_value(int n, double x);

}  // namespace hpoc::basis
