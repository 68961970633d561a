#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <vector>

namespace hpoc::temporal {

/// Partition of [t0, tf] into mesh intervals on the static coordinate
/// tau in [-1, 1]. Interval j carries degrees[j] fLGR collocation points and
/// a noncollocated initial point at its left end.
struct TemporalMesh {
  double t0 = 0.0;
  double tf = 1.0;
  Eigen::VectorXd tau_points;  // J+1 entries, -1 = tau_1 < ... < tau_{J+1} = 1
  std::vector<int> degrees;    // collocation points per interval

  int interval_count() const { return static_cast<int>(degrees.size()); }
  int num_collocation() const;  // N_t
  /// chain factor dt/ds on interval j
  double psi(int j) const;
  void validate() const;
};

TemporalMesh uniform_mesh(double t0, double tf, int intervals,
                          int points_per_interval);

/// physical time of canonical point s in interval j (1-based j per the
/// interval numbering; throws on out-of-range j)
double time_of(const TemporalMesh& mesh, int j, double s);

/// Global collocation structure: the block differentiation matrix with
/// one-column overlap between consecutive intervals, stacked fLGR weights,
/// per-point mapping factors, and the physical time grid (noncollocated
/// initial time first).
struct TemporalOperators {
  Eigen::SparseMatrix<double> D_t;  // N_t x (N_t + 1)
  Eigen::VectorXd omega;            // N_t fLGR weights
  Eigen::VectorXd psi;              // N_t mapping factors
  Eigen::VectorXd T;                // N_t + 1 physical times, T[0] = t0
  std::vector<int> interval_index;  // collocation point -> interval
  std::vector<int> col_start;       // per interval: first state column
  /// canonical fLGR nodes per interval
  std::vector<Eigen::VectorXd> nodes;
};

TemporalOperators build_temporal(const TemporalMesh& mesh);

}  // namespace hpoc::temporal
