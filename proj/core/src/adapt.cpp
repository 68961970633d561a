#include "hpoc/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hpoc/basis.hpp"

namespace hpoc::adapt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::VectorXd equidistant_xi(int p) {
  Eigen::VectorXd xi(p + 1);
  for (int i = 0; i <= p; ++i) xi[i] = -1.0 + 2.0 * static_cast<double>(i) / p;
  return xi;
}

// monomial coefficients of nodal data: columns of data are fitted in powers
// of the local coordinate values given in `points`
Eigen::MatrixXd power_coefficients(const Eigen::VectorXd& points,
                                   const Eigen::MatrixXd& data) {
  const int n = points.size();
  Eigen::MatrixXd v(n, n);
  for (int j = 0; j < n; ++j) {
    double acc = 1.0;
    for (int l = 0; l < n; ++l) {
      v(j, l) = acc;
      acc *= points[j];
    }
  }
  return v.partialPivLu().solve(data);
}

// minimum spatial decay rate of one element over every time column
double min_sigma_spatial(int element, const transcribe::Solution& solution) {
  const int p = solution.smesh.degrees[element];
  if (p < 2) return 0.0;
  const int off = solution.smesh.dof_offset(element);
  const Eigen::VectorXd xi = equidistant_xi(p);
  const Eigen::MatrixXd v = basis::legendre_vandermonde(p, xi);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(v);
  double sigma = std::numeric_limits<double>::infinity();
  for (int c = 0; c < solution.state.cols(); ++c) {
    const Eigen::VectorXd coeffs =
        lu.solve(solution.state.col(c).segment(off, p + 1));
    sigma = std::min(sigma, decay_rate(coeffs).sigma);
  }
  return sigma;
}

// minimum temporal decay rate of one interval over every spatial coefficient
double min_sigma_temporal(int interval, const transcribe::Solution& solution,
                          const temporal::TemporalOperators& tops) {
  const int n = solution.tmesh.degrees[interval];
  if (n < 2) return 0.0;
  const int cs = tops.col_start[interval];
  Eigen::VectorXd support(n + 1);
  support[0] = -1.0;
  support.tail(n) = tops.nodes[interval];
  const Eigen::MatrixXd v = basis::legendre_vandermonde(n, support);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(v);
  double sigma = std::numeric_limits<double>::infinity();
  for (int m = 0; m < solution.state.rows(); ++m) {
    Eigen::VectorXd samples(n + 1);
    for (int q = 0; q <= n; ++q) samples[q] = solution.state(m, cs + q);
    sigma = std::min(sigma, decay_rate(lu.solve(samples)).sigma);
  }
  return sigma;
}

MeshAction refine_action(int cell, double eta, double eps, double sigma_min,
                         int degree, double sigma_bar, int degree_cap) {
  MeshAction action;
  action.cell = cell;
  if (sigma_min > sigma_bar) {
    const int target =
        degree + static_cast<int>(
                     std::ceil(std::log10(eta / eps) / sigma_min));
    if (target <= degree_cap) {
      action.kind = MeshAction::Kind::PRefine;
      action.p_new = target;
    } else {
      action.kind = MeshAction::Kind::HSplit;
      action.parts = static_cast<int>(
          std::ceil(static_cast<double>(target) / degree));
    }
  } else {
    const double target = degree + std::log10(eta / eps) / sigma_bar;
    action.kind = MeshAction::Kind::HSplit;
    action.parts =
        static_cast<int>(std::ceil(target / degree));
  }
  if (action.kind == MeshAction::Kind::HSplit)
    action.parts = std::max(2, action.parts);
  return action;
}

// shared refine/reduce planning; `temporal` flips the roles of the two mesh
// dimensions
std::vector<MeshAction> plan_dimension(const estimator::ErrorReport& report,
                                       const transcribe::Solution& solution,
                                       double eps, const AdaptOptions& options,
                                       bool temporal) {
  const int count = temporal ? solution.tmesh.interval_count()
                             : solution.smesh.element_count();
  std::vector<double> eta = temporal ? report.eta_t() : report.eta_x();
  std::vector<int> degree(count);
  for (int k = 0; k < count; ++k)
    degree[k] = temporal ? solution.tmesh.degrees[k] : solution.smesh.degrees[k];

  temporal::TemporalOperators tops;
  if (temporal) tops = temporal::build_temporal(solution.tmesh);

  std::vector<MeshAction> actions;
  std::vector<bool> merged(count, false);

  // refinement for violating cells
  std::vector<bool> compliant(count);
  for (int k = 0; k < count; ++k) compliant[k] = eta[k] <= eps;
  for (int k = 0; k < count; ++k) {
    if (compliant[k]) continue;
    const double sigma_min =
        temporal ? min_sigma_temporal(k, solution, tops)
                 : min_sigma_spatial(k, solution);
    actions.push_back(refine_action(k, eta[k], eps, sigma_min, degree[k],
                                    options.sigma_bar,
                                    temporal ? options.n_max : options.p_max));
  }

  // greedy left-to-right merging of compliant equal-degree neighbours
  for (int k = 0; k + 1 < count; ++k) {
    if (!compliant[k] || !compliant[k + 1] || merged[k] || merged[k + 1])
      continue;
    if (degree[k] != degree[k + 1]) continue;
    if (try_merge(k, solution, report, eps, options.rho_safe, temporal)) {
      MeshAction action;
      action.cell = k;
      action.kind = MeshAction::Kind::MergeWithNext;
      actions.push_back(action);
      merged[k] = merged[k + 1] = true;
    }
  }

  // degree reduction for the remaining compliant cells
  for (int k = 0; k < count; ++k) {
    if (!compliant[k] || merged[k]) continue;
    const MeshAction action =
        reduce_degree(k, solution, report, eps, options.rho_safe, temporal);
    if (action.kind != MeshAction::Kind::Keep) actions.push_back(action);
  }
  return actions;
}

}  // namespace

Eigen::VectorXd legendre_coeffs(const Eigen::VectorXd& support_xi,
                                const Eigen::VectorXd& values) {
  const int degree = static_cast<int>(support_xi.size()) - 1;
  const Eigen::MatrixXd v = basis::legendre_vandermonde(degree, support_xi);
  return v.partialPivLu().solve(values);
}

DecayEstimate decay_rate(const Eigen::VectorXd& coeffs) {
  DecayEstimate estimate;
  estimate.coeffs = coeffs;
  const double cutoff = 1e-14 * coeffs.cwiseAbs().maxCoeff();
  std::vector<double> is, logs;
  for (int i = 0; i < coeffs.size(); ++i) {
    if (std::abs(coeffs[i]) <= cutoff) continue;  // zero modes are filtered
    is.push_back(i);
    logs.push_back(std::log10(std::abs(coeffs[i])));
  }
  if (is.size() < 2) return estimate;

  // total least squares: the first principal direction of the point cloud
  const int n = static_cast<int>(is.size());
  double xm = 0.0, ym = 0.0;
  for (int i = 0; i < n; ++i) {
    xm += is[i];
    ym += logs[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (is[i] - xm) * (is[i] - xm);
    sxy += (is[i] - xm) * (logs[i] - ym);
    syy += (logs[i] - ym) * (logs[i] - ym);
  }
  double slope = 0.0;
  if (sxy != 0.0) {
    const double b = syy - sxx;
    slope = (b + std::sqrt(b * b + 4.0 * sxy * sxy)) / (2.0 * sxy);
  }
  estimate.sigma = std::max(0.0, -slope);
  estimate.log10_c = ym - slope * xm;
  return estimate;
}

MeshAction reduce_degree(int cell, const transcribe::Solution& solution,
                         const estimator::ErrorReport& report, double eps,
                         double safety, bool temporal) {
  MeshAction action;
  action.cell = cell;

  Eigen::VectorXd points;
  Eigen::MatrixXd data;
  Eigen::VectorXd chi;
  int degree;
  if (temporal) {
    const auto tops = temporal::build_temporal(solution.tmesh);
    degree = solution.tmesh.degrees[cell];
    const int cs = tops.col_start[cell];
    points.resize(degree + 1);
    points[0] = 0.0;
    for (int q = 1; q <= degree; ++q)
      points[q] = 0.5 * (tops.nodes[cell][q - 1] + 1.0);
    data = solution.state.block(0, cs, solution.state.rows(), degree + 1)
               .transpose();
    chi = report.intervals[cell].chi;
  } else {
    degree = solution.smesh.degrees[cell];
    const int off = solution.smesh.dof_offset(cell);
    points.resize(degree + 1);
    for (int i = 0; i <= degree; ++i)
      points[i] = static_cast<double>(i) / degree;
    data = solution.state.block(off, 0, degree + 1, solution.state.cols());
    chi = report.elements[cell].chi;
  }

  // power-basis rows b_l over all samples, scaled by the relative weights
  const Eigen::MatrixXd b = power_coefficients(points, data);
  int retained = degree;
  while (retained >= 2) {
    const double worst =
        (b.row(retained).transpose().cwiseAbs().array() / chi.array())
            .maxCoeff();
    if (worst < safety * eps)
      --retained;
    else
      break;
  }
  if (retained < degree) {
    action.kind = MeshAction::Kind::ReduceDegree;
    action.p_new = std::max(1, retained);
  }
  return action;
}

bool try_merge(int cell, const transcribe::Solution& solution,
               const estimator::ErrorReport& report, double eps, double safety,
               bool temporal) {
  Eigen::VectorXd left_points, right_points;
  Eigen::MatrixXd left_data, right_data;
  Eigen::VectorXd chi;
  double width_left, width_right;
  int degree;

  if (temporal) {
    const auto tops = temporal::build_temporal(solution.tmesh);
    degree = solution.tmesh.degrees[cell];
    if (solution.tmesh.degrees[cell + 1] != degree) return false;
    const int n = degree;
    width_left = solution.tmesh.tau_points[cell + 1] -
                 solution.tmesh.tau_points[cell];
    width_right = solution.tmesh.tau_points[cell + 2] -
                  solution.tmesh.tau_points[cell + 1];
    // local coordinates about the junction: (s-1)/2 on the left interval,
    // (s+1)/2 on the right interval
    left_points.resize(n + 1);
    right_points.resize(n + 1);
    left_points[0] = -1.0;
    right_points[0] = 0.0;
    for (int q = 1; q <= n; ++q) {
      left_points[q] = 0.5 * (tops.nodes[cell][q - 1] - 1.0);
      right_points[q] = 0.5 * (tops.nodes[cell + 1][q - 1] + 1.0);
    }
    left_data = solution.state
                    .block(0, tops.col_start[cell], solution.state.rows(),
                           n + 1)
                    .transpose();
    right_data = solution.state
                     .block(0, tops.col_start[cell + 1],
                            solution.state.rows(), n + 1)
                     .transpose();
    chi = report.intervals[cell].chi;
  } else {
    degree = solution.smesh.degrees[cell];
    if (solution.smesh.degrees[cell + 1] != degree) return false;
    const int p = degree;
    width_left = solution.smesh.width(cell);
    width_right = solution.smesh.width(cell + 1);
    left_points.resize(p + 1);
    right_points.resize(p + 1);
    for (int i = 0; i <= p; ++i) {
      left_points[i] = static_cast<double>(i) / p - 1.0;  // r - 1
      right_points[i] = static_cast<double>(i) / p;
    }
    left_data = solution.state.block(solution.smesh.dof_offset(cell), 0,
                                     p + 1, solution.state.cols());
    right_data = solution.state.block(solution.smesh.dof_offset(cell + 1), 0,
                                      p + 1, solution.state.cols());
    chi = report.elements[cell].chi;
  }

  const double hbar = std::max(width_left, width_right);
  Eigen::MatrixXd bl = power_coefficients(left_points, left_data);
  Eigen::MatrixXd br = power_coefficients(right_points, right_data);
  for (int l = 0; l <= degree; ++l) {
    bl.row(l) *= std::pow(hbar / width_left, l);
    br.row(l) *= std::pow(hbar / width_right, l);
  }
  const Eigen::VectorXd bound =
      (bl - br).cwiseAbs().colwise().sum().transpose();
  const double worst = (bound.array() / chi.array()).maxCoeff();
  return worst < safety * eps;
}

std::vector<MeshAction> plan_spatial(const estimator::ErrorReport& report,
                                     const transcribe::Solution& solution,
                                     double eps, const AdaptOptions& options) {
  return plan_dimension(report, solution, eps, options, false);
}

std::vector<MeshAction> plan_temporal(const estimator::ErrorReport& report,
                                      const transcribe::Solution& solution,
                                      double eps, const AdaptOptions& options) {
  return plan_dimension(report, solution, eps, options, true);
}

namespace {

// expands per-cell boundaries/degrees under a validated action list
struct CellEdits {
  std::vector<MeshAction> by_cell;

  explicit CellEdits(int count, const std::vector<MeshAction>& actions)
      : by_cell(count) {
    for (int k = 0; k < count; ++k) by_cell[k].cell = k;
    for (const auto& a : actions) {
      if (a.cell < 0 || a.cell >= count)
        throw std::invalid_argument("hpoc::adapt: action cell out of range");
      if (by_cell[a.cell].kind != MeshAction::Kind::Keep)
        throw std::invalid_argument("hpoc::adapt: conflicting actions");
      by_cell[a.cell] = a;
      if (a.kind == MeshAction::Kind::MergeWithNext) {
        if (a.cell + 1 >= count)
          throw std::invalid_argument("hpoc::adapt: merge at the last cell");
      }
    }
    // a merged-into cell must carry no action of its own
    for (int k = 0; k < count; ++k) {
      if (by_cell[k].kind == MeshAction::Kind::MergeWithNext &&
          by_cell[k + 1].kind != MeshAction::Kind::Keep)
        throw std::invalid_argument("hpoc::adapt: conflicting merge pair");
    }
  }
};

}  // namespace

spatial::SpatialMesh apply_spatial(const spatial::SpatialMesh& mesh,
                                   const std::vector<MeshAction>& actions) {
  const CellEdits edits(mesh.element_count(), actions);
  std::vector<double> boundaries{mesh.boundaries[0]};
  std::vector<int> degrees;
  for (int k = 0; k < mesh.element_count(); ++k) {
    const auto& a = edits.by_cell[k];
    switch (a.kind) {
      case MeshAction::Kind::Keep:
        boundaries.push_back(mesh.boundaries[k + 1]);
        degrees.push_back(mesh.degrees[k]);
        break;
      case MeshAction::Kind::PRefine:
      case MeshAction::Kind::ReduceDegree:
        boundaries.push_back(mesh.boundaries[k + 1]);
        degrees.push_back(a.p_new);
        break;
      case MeshAction::Kind::HSplit: {
        const double left = mesh.boundaries[k];
        const double right = mesh.boundaries[k + 1];
        for (int part = 1; part < a.parts; ++part)
          boundaries.push_back(left + (right - left) * part / a.parts);
        boundaries.push_back(right);
        for (int part = 0; part < a.parts; ++part)
          degrees.push_back(mesh.degrees[k]);
        break;
      }
      case MeshAction::Kind::MergeWithNext:
        boundaries.push_back(mesh.boundaries[k + 2]);
        degrees.push_back(mesh.degrees[k]);
        ++k;  // the merged neighbour is consumed
        break;
    }
  }
  spatial::SpatialMesh out;
  out.boundaries =
      Eigen::Map<Eigen::VectorXd>(boundaries.data(), boundaries.size());
  out.degrees = degrees;
  out.validate();
  return out;
}

temporal::TemporalMesh apply_temporal(const temporal::TemporalMesh& mesh,
                                      const std::vector<MeshAction>& actions) {
  const CellEdits edits(mesh.interval_count(), actions);
  std::vector<double> taus{mesh.tau_points[0]};
  std::vector<int> degrees;
  for (int j = 0; j < mesh.interval_count(); ++j) {
    const auto& a = edits.by_cell[j];
    switch (a.kind) {
      case MeshAction::Kind::Keep:
        taus.push_back(mesh.tau_points[j + 1]);
        degrees.push_back(mesh.degrees[j]);
        break;
      case MeshAction::Kind::PRefine:
      case MeshAction::Kind::ReduceDegree:
        taus.push_back(mesh.tau_points[j + 1]);
        degrees.push_back(a.p_new);
        break;
      case MeshAction::Kind::HSplit: {
        const double left = mesh.tau_points[j];
        const double right = mesh.tau_points[j + 1];
        for (int part = 1; part < a.parts; ++part)
          taus.push_back(left + (right - left) * part / a.parts);
        taus.push_back(right);
        for (int part = 0; part < a.parts; ++part)
          degrees.push_back(mesh.degrees[j]);
        break;
      }
      case MeshAction::Kind::MergeWithNext:
        taus.push_back(mesh.tau_points[j + 2]);
        degrees.push_back(mesh.degrees[j]);
        ++j;
        break;
    }
  }
  temporal::TemporalMesh out;
  out.t0 = mesh.t0;
  out.tf = mesh.tf;
  out.tau_points = Eigen::Map<Eigen::VectorXd>(taus.data(), taus.size());
  out.degrees = degrees;
  out.validate();
  return out;
}

namespace {

std::vector<MeshAction> global_plan(Strategy kind, double eta_max,
                                    const std::vector<int>& degrees,
                                    double eps, int cap) {
  std::vector<MeshAction> actions;
  if (eta_max <= eps) return actions;
  const int count = static_cast<int>(degrees.size());
  const int max_degree = *std::max_element(degrees.begin(), degrees.end());
  for (int k = 0; k < count; ++k) {
    MeshAction a;
    a.cell = k;
    switch (kind) {
      case Strategy::GlobalH:
        a.kind = MeshAction::Kind::HSplit;
        a.parts = 2;
        break;
      case Strategy::GlobalP:
        a.kind = MeshAction::Kind::PRefine;
        a.p_new = degrees[k] + 4;
        break;
      case Strategy::GlobalPh:
        if (max_degree < cap) {
          a.kind = MeshAction::Kind::PRefine;
          a.p_new = degrees[k] + 1;
        } else {
          a.kind = MeshAction::Kind::HSplit;
          a.parts = 2;
        }
        break;
      default:
        throw std::invalid_argument("hpoc::adapt: not a global strategy");
    }
    actions.push_back(a);
  }
  return actions;
}

}  // namespace

std::vector<MeshAction> global_strategy_spatial(Strategy kind,
                                                const estimator::ErrorReport& r,
                                                const spatial::SpatialMesh& m,
                                                double eps,
                                                const AdaptOptions& options) {
  return global_plan(kind, r.eta_x_max(), m.degrees, eps, options.p_max);
}

std::vector<MeshAction> global_strategy_temporal(
    Strategy kind, const estimator::ErrorReport& r,
    const temporal::TemporalMesh& m, double eps, const AdaptOptions& options) {
  // the global p-h baseline caps both dimensions at the same degree limit
  return global_plan(kind, r.eta_t_max(), m.degrees, eps, options.p_max);
}

RunHistory run_adaptive(const problem::ProblemDefinition& prob,
                        const RunConfig& config) {
  if (config.initial_intervals < 1 || config.initial_points < 1 ||
      config.initial_elements < 1 || config.initial_degree < 1)
    throw std::invalid_argument("hpoc::adapt: initial mesh not configured");
  if (config.eps <= 0.0)
    throw std::invalid_argument("hpoc::adapt: eps must be positive");

  spatial::SpatialMesh smesh = spatial::uniform_mesh(
      prob.x0, prob.xf, config.initial_elements, config.initial_degree);
  temporal::TemporalMesh tmesh = temporal::uniform_mesh(
      prob.t0, prob.tf, config.initial_intervals, config.initial_points);

  RunHistory history;
  std::optional<transcribe::Solution> previous;

  for (int iteration = 0; iteration <= config.adapt.max_iterations;
       ++iteration) {
    IterationRecord record;
    record.iteration = iteration;

    auto t_build = Clock::now();
    const transcribe::DiscreteOCP ocp(prob, smesh, tmesh);
    const auto spec = transcribe::make_nlp_spec(ocp);
    record.time_build = seconds_since(t_build);

    auto t_nlp = Clock::now();
    auto result = nlp::solve(spec, ocp.initial_guess(previous), config.nlp);
    if (result.status == nlp::SolveStatus::Failed) {
      // one cold-start retry before giving up
      result = nlp::solve(spec, ocp.initial_guess(), config.nlp);
    }
    record.time_nlp = seconds_since(t_nlp);
    record.nlp_status = result.status;
    record.nlp_iterations = result.iterations;
    if (result.status == nlp::SolveStatus::Failed) {
      history.failed = true;
      history.message = "NLP solve failed: " + result.message;
      history.iterations.push_back(std::move(record));
      break;
    }

    const transcribe::Solution solution = ocp.unpack(result.z);
    const auto report =
        estimator::estimate_all(solution, prob, ocp.spatial_ops(),
                                ocp.temporal_ops(), config.adapt.threads);

    record.objective = solution.objective;
    record.eta_x_max = report.eta_x_max();
    record.eta_t_max = report.eta_t_max();
    record.eta_x = report.eta_x();
    record.eta_t = report.eta_t();
    record.warnings = report.warnings;
    record.N_t = tmesh.num_collocation();
    record.J = tmesh.interval_count();
    record.N_x = smesh.num_dofs();
    record.K = smesh.element_count();
    record.time_estimate_x = report.time_elements;
    record.time_estimate_t = report.time_intervals;
    record.smesh = smesh;
    record.tmesh = tmesh;

    history.solution = solution;
    const bool done =
        record.eta_x_max <= config.eps && record.eta_t_max <= config.eps;

    if (done || iteration == config.adapt.max_iterations) {
      history.converged = done;
      history.iterations.push_back(std::move(record));
      break;
    }

    auto t_adapt = Clock::now();
    std::vector<MeshAction> actions_x, actions_t;
    if (config.strategy == Strategy::LocalHp) {
      actions_x = plan_spatial(report, solution, config.eps, config.adapt);
      actions_t = plan_temporal(report, solution, config.eps, config.adapt);
    } else {
      actions_x = global_strategy_spatial(config.strategy, report, smesh,
                                          config.eps, config.adapt);
      actions_t = global_strategy_temporal(config.strategy, report, tmesh,
                                           config.eps, config.adapt);
    }
    smesh = apply_spatial(smesh, actions_x);
    tmesh = apply_temporal(tmesh, actions_t);
    record.time_adapt = seconds_since(t_adapt);

    history.iterations.push_back(std::move(record));
    previous = solution;
  }
  return history;
}

}  // namespace hpoc::adapt
