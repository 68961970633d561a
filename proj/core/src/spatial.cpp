#include "hpoc/spatial.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hpoc/basis.hpp"

namespace hpoc::spatial {

int SpatialMesh::num_dofs() const {
  int total = 1;
  for (int p : degrees) total += p;
  return total;
}

int SpatialMesh::dof_offset(int k) const {
  int offset = 0;
  for (int m = 0; m < k; ++m) offset += degrees[m];
  return offset;
}

Eigen::VectorXd SpatialMesh::support_points() const {
  Eigen::VectorXd pts(num_dofs());
  int idx = 0;
  for (int k = 0; k < element_count(); ++k) {
    const int p = degrees[k];
    for (int i = (k == 0 ? 0 : 1); i <= p; ++i)
      pts[idx++] = boundaries[k] + width(k) * i / p;
  }
  pts[0] = boundaries[0];
  pts[num_dofs() - 1] = boundaries[element_count()];
  return pts;
}

int SpatialMesh::locate(double x) const {
  const int K = element_count();
  if (x < boundaries[0] || x > boundaries[K])
    throw std::out_of_range("hpoc::spatial: x outside the domain");
  // ties at interior boundaries resolve to the left element
  for (int k = 0; k < K; ++k)
    if (x <= boundaries[k + 1]) return k;
  return K - 1;
}

void SpatialMesh::validate() const {
  if (element_count() < 1 || boundaries.size() != element_count() + 1)
    throw std::invalid_argument("hpoc::spatial: inconsistent mesh arrays");
  for (int k = 0; k < element_count(); ++k) {
    if (width(k) <= 0.0)
      throw std::invalid_argument("hpoc::spatial: nonpositive element width");
    if (degrees[k] < 1)
      throw std::invalid_argument("hpoc::spatial: element degree < 1");
  }
}

SpatialMesh uniform_mesh(double x0, double xf, int elements, int degree) {
  SpatialMesh mesh;
  mesh.boundaries.resize(elements + 1);
  for (int k = 0; k <= elements; ++k)
    mesh.boundaries[k] = x0 + (xf - x0) * k / elements;
  mesh.degrees.assign(elements, degree);
  mesh.validate();
  return mesh;
}

namespace {

Eigen::VectorXd equidistant_reference(int p) {
  Eigen::VectorXd r(p + 1);
  for (int i = 0; i <= p; ++i) r[i] = static_cast<double>(i) / p;
  return r;
}

}  // namespace

SpatialOperators assemble(const SpatialMesh& mesh) {
  mesh.validate();
  const int n = mesh.num_dofs();
  SpatialOperators ops;
  ops.quadrature.resize(mesh.element_count());

  std::vector<Eigen::Triplet<double>> tm, tn, ta;
  for (int k = 0; k < mesh.element_count(); ++k) {
    const int p = mesh.degrees[k];
    const double h = mesh.width(k);
    const int offset = mesh.dof_offset(k);
    const auto rule = basis::gauss_nodes(basis::RuleKind::LG, 2 * p);

    auto& q = ops.quadrature[k];
    q.w = rule.weights;
    q.r = ((rule.nodes.array() + 1.0) * 0.5).matrix();
    q.x = (mesh.boundaries[k] + h * q.r.array()).matrix();
    std::tie(q.phi, q.dphi_dr) =
        basis::lagrange_eval(equidistant_reference(p), q.r);

    // M_ij = h/2 sum w phi_i phi_j ; N_ij = 1/2 sum w phi_i dphi_j ;
    // A_ij = 1/(2h) sum w dphi_i dphi_j. Extended precision keeps the
    // cancellation in the derivative products below 1e-12 absolute.
    for (int i = 0; i <= p; ++i) {
      for (int j = 0; j <= p; ++j) {
        long double m = 0.0, nn = 0.0, a = 0.0;
        for (int l = 0; l < q.w.size(); ++l) {
          const long double w = q.w[l];
          m += w * q.phi(i, l) * q.phi(j, l);
          nn += w * q.phi(i, l) * q.dphi_dr(j, l);
          a += w * q.dphi_dr(i, l) * q.dphi_dr(j, l);
        }
        tm.emplace_back(offset + i, offset + j, static_cast<double>(0.5L * h * m));
        tn.emplace_back(offset + i, offset + j, static_cast<double>(0.5L * nn));
        ta.emplace_back(offset + i, offset + j, static_cast<double>(0.5L * a / h));
      }
    }
  }
  ops.M.resize(n, n);
  ops.N.resize(n, n);
  ops.A.resize(n, n);
  ops.M.setFromTriplets(tm.begin(), tm.end());
  ops.N.setFromTriplets(tn.begin(), tn.end());
  ops.A.setFromTriplets(ta.begin(), ta.end());
  return ops;
}

Eigen::MatrixXd project_source(const SpatialMesh& mesh,
                               const std::function<double(double, double)>& f,
                               const Eigen::VectorXd& times) {
  return project_source(mesh, assemble(mesh), f, times);
}

Eigen::MatrixXd project_source(const SpatialMesh& mesh,
                               const SpatialOperators& ops,
                               const std::function<double(double, double)>& f,
                               const Eigen::VectorXd& times) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Zero(mesh.num_dofs(), times.size());
  for (int k = 0; k < mesh.element_count(); ++k) {
    const auto& q = ops.quadrature[k];
    const int p = mesh.degrees[k];
    const int offset = mesh.dof_offset(k);
    const double h = mesh.width(k);
    for (int c = 0; c < times.size(); ++c) {
      for (int l = 0; l < q.w.size(); ++l) {
        const double val = f(q.x[l], times[c]);
        if (!std::isfinite(val))
          throw std::runtime_error(
              "hpoc::spatial: non-finite source value at x=" +
              std::to_string(q.x[l]) + ", t=" + std::to_string(times[c]));
        const double scaled = 0.5 * h * q.w[l] * val;
        for (int i = 0; i <= p; ++i)
          result(offset + i, c) += scaled * q.phi(i, l);
      }
    }
  }
  return result;
}

StateSample eval_state(const SpatialMesh& mesh, const Eigen::VectorXd& coeffs,
                       double x, Side side) {
  int k = mesh.locate(x);
  if (side == Side::Right && k + 1 < mesh.element_count() &&
      x == mesh.boundaries[k + 1])
    k += 1;
  const int p = mesh.degrees[k];
  const double h = mesh.width(k);
  const double r = (x - mesh.boundaries[k]) / h;
  Eigen::VectorXd pt(1);
  pt << r;
  const auto [phi, dphi] = basis::lagrange_eval(equidistant_reference(p), pt);
  double value = 0.0, deriv = 0.0;
  const int offset = mesh.dof_offset(k);
  for (int i = 0; i <= p; ++i) {
    value += phi(i, 0) * coeffs[offset + i];
    deriv += dphi(i, 0) * coeffs[offset + i];
  }
  return {value, deriv / h};
}

}  // namespace hpoc::spatial
