#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hpoc/nlp.hpp"
#include "hpoc/problem.hpp"
#include "hpoc/transcribe.hpp"

using namespace hpoc;
using nlp::NlpSpec;
using nlp::SolveStatus;

namespace {

NlpSpec dense_spec(int n, int me, int mi,
                   std::function<double(const Eigen::VectorXd&)> f,
                   std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g,
                   std::function<Eigen::VectorXd(const Eigen::VectorXd&)> c,
                   std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> j) {
  NlpSpec spec;
  spec.num_variables = n;
  spec.num_equalities = me;
  spec.num_inequalities = mi;
  spec.lower = Eigen::VectorXd::Constant(n, -1e20);
  spec.upper = Eigen::VectorXd::Constant(n, 1e20);
  spec.objective = std::move(f);
  spec.gradient = std::move(g);
  spec.constraints = std::move(c);
  spec.jacobian = [j = std::move(j)](const Eigen::VectorXd& z,
                                     Eigen::SparseMatrix<double>& out) {
    out = j(z).sparseView();
  };
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(me + mi, n);
  spec.jacobian_pattern = ones.sparseView();
  return spec;
}

}  // namespace

TEST_CASE("scalar quadratic with an active upper bound") {
  auto spec = dense_spec(
      1, 0, 0,
      [](const Eigen::VectorXd& z) { return (z[0] - 1.0) * (z[0] - 1.0); },
      [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, 2.0 * (z[0] - 1.0));
      },
      [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd(0, 1); });
  spec.lower[0] = 0.0;
  spec.upper[0] = 0.5;
  const auto result = nlp::solve(spec, Eigen::VectorXd::Constant(1, 0.1));
  CHECK(result.status == SolveStatus::Optimal);
  CHECK(result.z[0] == doctest::Approx(0.5).epsilon(1e-8));
  // the interior iterate respects the bounds strictly
  CHECK(result.z[0] < 0.5);
  CHECK(result.z[0] > 0.0);
}

TEST_CASE("symmetric equality-constrained quadratic") {
  auto spec = dense_spec(
      2, 1, 0, [](const Eigen::VectorXd& z) { return z.squaredNorm(); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd(2.0 * z); },
      [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, z[0] + z[1] - 1.0);
      },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(1, 2); });
  const auto result = nlp::solve(spec, Eigen::VectorXd::Zero(2));
  CHECK(result.status == SolveStatus::Optimal);
  CHECK(result.z[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(result.z[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(result.kkt_error <= 1e-12);
}

TEST_CASE("inequality becomes active at the optimum") {
  // min (z1-2)^2 + (z2-1)^2 s.t. z1 + z2 <= 2
  auto spec = dense_spec(
      2, 0, 1,
      [](const Eigen::VectorXd& z) {
        return (z[0] - 2.0) * (z[0] - 2.0) + (z[1] - 1.0) * (z[1] - 1.0);
      },
      [](const Eigen::VectorXd& z) {
        Eigen::VectorXd g(2);
        g << 2.0 * (z[0] - 2.0), 2.0 * (z[1] - 1.0);
        return g;
      },
      [](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, z[0] + z[1] - 2.0);
      },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Ones(1, 2); });
  const auto result = nlp::solve(spec, Eigen::VectorXd::Zero(2));
  CHECK(result.status == SolveStatus::Optimal);
  CHECK(result.z[0] == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(result.z[1] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(result.mult_ineq[0] > 0.0);
}

TEST_CASE("fixed variables are pinned") {
  auto spec = dense_spec(
      2, 0, 0,
      [](const Eigen::VectorXd& z) { return (z[0] - 3.0) * (z[0] - 3.0); },
      [](const Eigen::VectorXd& z) {
        Eigen::VectorXd g(2);
        g << 2.0 * (z[0] - 3.0), 0.0;
        return g;
      },
      [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd(0, 2); });
  spec.lower[1] = 5.0;
  spec.upper[1] = 5.0;
  const auto result = nlp::solve(spec, Eigen::VectorXd::Zero(2));
  CHECK(result.status == SolveStatus::Optimal);
  CHECK(result.z[0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(result.z[1] == 5.0);
}

TEST_CASE("random convex quadratic programs against a dense KKT solve") {
  std::mt19937 rng(31415);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 20, m = 5;
    Eigen::MatrixXd base(n, n), a(m, n);
    Eigen::VectorXd gvec(n), b(m);
    for (int i = 0; i < n; ++i) {
      gvec[i] = noise(rng);
      for (int jj = 0; jj < n; ++jj) base(i, jj) = noise(rng);
    }
    for (int i = 0; i < m; ++i) {
      b[i] = noise(rng);
      for (int jj = 0; jj < n; ++jj) a(i, jj) = noise(rng);
    }
    const Eigen::MatrixXd h =
        base * base.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);

    // oracle: dense saddle-point solve
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = h;
    kkt.topRightCorner(n, m) = a.transpose();
    kkt.bottomLeftCorner(m, n) = a;
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -gvec;
    rhs.tail(m) = b;
    const Eigen::VectorXd expect =
        kkt.fullPivLu().solve(rhs).head(n);

    auto spec = dense_spec(
        n, m, 0,
        [=](const Eigen::VectorXd& z) {
          return 0.5 * z.dot(h * z) + gvec.dot(z);
        },
        [=](const Eigen::VectorXd& z) { return Eigen::VectorXd(h * z + gvec); },
        [=](const Eigen::VectorXd& z) { return Eigen::VectorXd(a * z - b); },
        [=](const Eigen::VectorXd&) { return a; });
    // a dense random Hessian is the hard case for the memory-limited model;
    // give the model enough pairs to cover it
    nlp::SolveOptions options;
    options.lbfgs_memory = 30;
    const auto result = nlp::solve(spec, Eigen::VectorXd::Zero(n), options);
    CHECK(result.status != SolveStatus::Failed);
    CHECK(result.kkt_error < 1e-8);
    CHECK((result.z - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("deterministic repeat solves") {
  auto make = [] {
    return dense_spec(
        2, 1, 0,
        [](const Eigen::VectorXd& z) {
          return std::pow(z[0] - 0.3, 4) + z[1] * z[1];
        },
        [](const Eigen::VectorXd& z) {
          Eigen::VectorXd g(2);
          g << 4.0 * std::pow(z[0] - 0.3, 3), 2.0 * z[1];
          return g;
        },
        [](const Eigen::VectorXd& z) {
          return Eigen::VectorXd::Constant(1, z[0] - z[1] - 0.1);
        },
        [](const Eigen::VectorXd&) {
          Eigen::MatrixXd j(1, 2);
          j << 1.0, -1.0;
          return j;
        });
  };
  const auto spec1 = make();
  const auto spec2 = make();
  const auto r1 = nlp::solve(spec1, Eigen::VectorXd::Zero(2));
  const auto r2 = nlp::solve(spec2, Eigen::VectorXd::Zero(2));
  CHECK(r1.iterations == r2.iterations);
  CHECK((r1.z - r2.z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kkt_error metric") {
  auto spec = dense_spec(
      2, 0, 0, [](const Eigen::VectorXd& z) { return z.squaredNorm(); },
      [](const Eigen::VectorXd& z) { return Eigen::VectorXd(2.0 * z); },
      [](const Eigen::VectorXd&) { return Eigen::VectorXd(0); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd(0, 2); });
  const Eigen::VectorXd none;
  const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  CHECK(nlp::kkt_error(spec, Eigen::VectorXd::Zero(2), none, none, zero2,
                       zero2) == 0.0);
  CHECK(nlp::kkt_error(spec, Eigen::VectorXd::Ones(2), none, none, zero2,
                       zero2) > 0.0);
}

TEST_CASE("burgers reference objective on the initial mesh") {
  const transcribe::DiscreteOCP ocp(problem::burgers(),
                                    spatial::uniform_mesh(0.0, 1.0, 9, 2),
                                    temporal::uniform_mesh(0.0, 1.0, 2, 6));
  const auto spec = transcribe::make_nlp_spec(ocp);
  const auto result = nlp::solve(spec, ocp.initial_guess());
  REQUIRE((result.status == SolveStatus::Optimal ||
           result.status == SolveStatus::Acceptable));
  const double objective = ocp.eval_objective(result.z);
  CHECK(objective == doctest::Approx(2.8940597e-5).epsilon(5e-3));
  CHECK(nlp::kkt_error(spec, result.z, result.mult_eq, result.mult_ineq,
                       result.mult_lower, result.mult_upper) <= 1e-10);
  // bounded controls stay strictly interior
  for (int i = 0; i < 12; ++i) {
    const double u1 = result.z[ocp.layout().u1_index(i)];
    CHECK(u1 > -0.015);
    CHECK(u1 < 0.015);
  }
}
