#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "hpoc/temporal.hpp"

using namespace hpoc::temporal;

TEST_CASE("single interval, single point") {
  const auto mesh = uniform_mesh(0.0, 2.0, 1, 1);
  const auto ops = build_temporal(mesh);
  REQUIRE(ops.psi.size() == 1);
  CHECK(ops.psi[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ops.omega[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ops.T[0] == 0.0);
  CHECK(ops.T[1] == 2.0);
  const Eigen::MatrixXd d = ops.D_t;
  CHECK(d(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(d(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("two equal intervals on the unit time domain") {
  const auto mesh = uniform_mesh(0.0, 1.0, 2, 3);
  const auto ops = build_temporal(mesh);
  for (int i = 0; i < ops.psi.size(); ++i)
    CHECK(ops.psi[i] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("psi-weighted quadrature integrates the constant") {
  for (auto [t0, tf, J, n] : {std::tuple{0.0, 1.0, 2, 6},
                              std::tuple{-2.0, 3.0, 3, 4},
                              std::tuple{0.0, 0.5, 5, 1}}) {
    const auto mesh = uniform_mesh(t0, tf, J, n);
    const auto ops = build_temporal(mesh);
    CHECK(std::abs(ops.psi.dot(ops.omega) - (tf - t0)) < 1e-12);
  }
}

TEST_CASE("time grid is increasing and spans the domain") {
  TemporalMesh mesh;
  mesh.t0 = 0.5;
  mesh.tf = 4.0;
  mesh.tau_points.resize(4);
  mesh.tau_points << -1.0, -0.25, 0.4, 1.0;
  mesh.degrees = {2, 5, 3};
  const auto ops = build_temporal(mesh);
  CHECK(ops.T[0] == 0.5);
  CHECK(ops.T[ops.T.size() - 1] == 4.0);
  for (int i = 1; i < ops.T.size(); ++i) CHECK(ops.T[i] > ops.T[i - 1]);
  CHECK(ops.col_start[0] == 0);
  CHECK(ops.col_start[1] == 2);
  CHECK(ops.col_start[2] == 7);
}

TEST_CASE("differentiation block overlap and row sums") {
  const auto mesh = uniform_mesh(0.0, 1.0, 3, 4);
  const auto ops = build_temporal(mesh);
  const Eigen::MatrixXd d = ops.D_t;
  REQUIRE(d.rows() == 12);
  REQUIRE(d.cols() == 13);
  for (int r = 0; r < d.rows(); ++r) CHECK(std::abs(d.row(r).sum()) < 1e-12);
  // block 2 occupies rows 4..7 and columns 4..8, sharing column 4 with block 1
  CHECK(d(4, 4) != 0.0);
  CHECK(d(3, 4) != 0.0);
  CHECK(d(4, 3) == 0.0);
  CHECK(d(3, 9) == 0.0);
}

TEST_CASE("derivative exactness per interval") {
  // block applied to samples of s^q reproduces q*s^(q-1) at the nodes
  TemporalMesh mesh;
  mesh.t0 = 0.0;
  mesh.tf = 1.0;
  mesh.tau_points.resize(3);
  mesh.tau_points << -1.0, 0.2, 1.0;
  mesh.degrees = {4, 6};
  const auto ops = build_temporal(mesh);
  const Eigen::MatrixXd d = ops.D_t;
  for (int j = 0; j < mesh.interval_count(); ++j) {
    const int n = mesh.degrees[j];
    const int start = ops.col_start[j];
    Eigen::VectorXd support(n + 1);
    support[0] = -1.0;
    support.tail(n) = ops.nodes[j];
    for (int q = 0; q <= n; ++q) {
      Eigen::VectorXd samples(n + 1);
      for (int i = 0; i <= n; ++i) samples[i] = std::pow(support[i], q);
      for (int a = 0; a < n; ++a) {
        double got = 0.0;
        for (int c = 0; c <= n; ++c) got += d(start + a, start + c) * samples[c];
        const double expect =
            q == 0 ? 0.0 : q * std::pow(ops.nodes[j][a], q - 1);
        CHECK(std::abs(got - expect) < 1e-11);
      }
    }
  }
}

TEST_CASE("integration-differentiation consistency") {
  // omega' * (D block * samples) telescopes to p(end) - p(start)
  const auto mesh = uniform_mesh(0.0, 1.0, 2, 5);
  const auto ops = build_temporal(mesh);
  const Eigen::MatrixXd d = ops.D_t;
  auto poly = [](double s) { return 1.0 - 0.3 * s + 2.0 * std::pow(s, 5); };
  for (int j = 0; j < 2; ++j) {
    const int n = mesh.degrees[j];
    const int start = ops.col_start[j];
    Eigen::VectorXd samples(n + 1);
    samples[0] = poly(-1.0);
    for (int i = 0; i < n; ++i) samples[i + 1] = poly(ops.nodes[j][i]);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
      double ds = 0.0;
      for (int c = 0; c <= n; ++c) ds += d(start + a, start + c) * samples[c];
      total += ops.omega[start + a] * ds;
    }
    CHECK(std::abs(total - (poly(1.0) - poly(-1.0))) < 1e-11);
  }
}

TEST_CASE("time_of endpoints and midpoints") {
  const auto unit = uniform_mesh(0.0, 1.0, 1, 3);
  CHECK(time_of(unit, 1, -1.0) == doctest::Approx(0.0));
  CHECK(time_of(unit, 1, 1.0) == doctest::Approx(1.0));
  const auto two = uniform_mesh(0.0, 4.0, 2, 3);
  CHECK(time_of(two, 2, 0.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(time_of(two, 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(time_of(two, 0, 0.0), std::invalid_argument);
}
