#include "hpoc/temporal.hpp"

#include <stdexcept>
#include <vector>

#include "hpoc/basis.hpp"

namespace hpoc::temporal {

int TemporalMesh::num_collocation() const {
  int total = 0;
  for (int n : degrees) total += n;
  return total;
}

double TemporalMesh::psi(int j) const {
  return 0.5 * (tf - t0) * 0.5 * (tau_points[j + 1] - tau_points[j]);
}

void TemporalMesh::validate() const {
  if (interval_count() < 1 || tau_points.size() != interval_count() + 1)
    throw std::invalid_argument("hpoc::temporal: inconsistent mesh arrays");
  if (tau_points[0] != -1.0 || tau_points[interval_count()] != 1.0)
    throw std::invalid_argument("hpoc::temporal: tau must span [-1, 1]");
  if (tf <= t0)
    throw std::invalid_argument("hpoc::temporal: tf must exceed t0");
  for (int j = 0; j < interval_count(); ++j) {
    if (tau_points[j + 1] <= tau_points[j])
      throw std::invalid_argument("hpoc::temporal: tau not increasing");
    if (degrees[j] < 1)
      throw std::invalid_argument("hpoc::temporal: interval degree < 1");
  }
}

TemporalMesh uniform_mesh(double t0, double tf, int intervals,
                          int points_per_interval) {
  TemporalMesh mesh;
  mesh.t0 = t0;
  mesh.tf = tf;
  mesh.tau_points.resize(intervals + 1);
  for (int j = 0; j <= intervals; ++j)
    mesh.tau_points[j] = -1.0 + 2.0 * j / intervals;
  mesh.tau_points[0] = -1.0;
  mesh.tau_points[intervals] = 1.0;
  mesh.degrees.assign(intervals, points_per_interval);
  mesh.validate();
  return mesh;
}

double time_of(const TemporalMesh& mesh, int j, double s) {
  if (j < 1 || j > mesh.interval_count())
    throw std::invalid_argument("hpoc::temporal: interval index out of range");
  const double tau = mesh.tau_points[j - 1] +
                     0.5 * (s + 1.0) * (mesh.tau_points[j] - mesh.tau_points[j - 1]);
  return mesh.t0 + 0.5 * (tau + 1.0) * (mesh.tf - mesh.t0);
}

TemporalOperators build_temporal(const TemporalMesh& mesh) {
  mesh.validate();
  const int total = mesh.num_collocation();
  TemporalOperators ops;
  ops.omega.resize(total);
  ops.psi.resize(total);
  ops.T.resize(total + 1);
  ops.interval_index.resize(total);
  ops.col_start.resize(mesh.interval_count());
  ops.nodes.resize(mesh.interval_count());
  ops.T[0] = mesh.t0;

  std::vector<Eigen::Triplet<double>> entries;
  int row = 0;
  for (int j = 0; j < mesh.interval_count(); ++j) {
    const int n = mesh.degrees[j];
    const auto rule = basis::gauss_nodes(basis::RuleKind::FLGR, n);
    ops.nodes[j] = rule.nodes;
    ops.col_start[j] = row;

    // support = noncollocated left endpoint plus the fLGR points
    Eigen::VectorXd support(n + 1);
    support[0] = -1.0;
    support.tail(n) = rule.nodes;
    const Eigen::MatrixXd block = basis::diff_matrix(support, rule.nodes);

    for (int a = 0; a < n; ++a) {
      for (int q = 0; q <= n; ++q)
        entries.emplace_back(row + a, row + q, block(a, q));
      ops.omega[row + a] = rule.weights[a];
      ops.psi[row + a] = mesh.psi(j);
      ops.interval_index[row + a] = j;
      ops.T[row + a + 1] = time_of(mesh, j + 1, rule.nodes[a]);
    }
    row += n;
  }
  ops.T[total] = mesh.tf;

  ops.D_t.resize(total, total + 1);
  ops.D_t.setFromTriplets(entries.begin(), entries.end());
  return ops;
}

}  // namespace hpoc::temporal
