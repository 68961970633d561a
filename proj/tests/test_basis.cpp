#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "hpoc/basis.hpp"
#include "oracles.hpp"

using hpoc::basis::RuleKind;
using hpoc::basis::gauss_nodes;

namespace {
int exactness_degree(RuleKind kind, int n) {
  switch (kind) {
    case RuleKind::LG: return 2 * n - 1;
    case RuleKind::FLGR: return 2 * n - 2;
    default: return 2 * n - 3;
  }
}
}  // namespace

TEST_CASE("single-point LG rule is the midpoint rule") {
  const auto rule = gauss_nodes(RuleKind::LG, 1);
  REQUIRE(rule.nodes.size() == 1);
  CHECK(rule.nodes[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rule.weights[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("two-point fLGR rule matches the mirrored Radau rule") {
  // nodes: negated roots of P_1 + P_2; weights frozen from moment matching
  const auto rule = gauss_nodes(RuleKind::FLGR, 2);
  CHECK(rule.nodes[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
  CHECK(rule.nodes[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rule.weights[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(rule.weights[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("three-point LGL rule against the moment-matching oracle") {
  const auto rule = gauss_nodes(RuleKind::LGL, 3);
  CHECK(rule.nodes[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(rule.nodes[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rule.nodes[2] == doctest::Approx(1.0).epsilon(1e-15));
  const Eigen::VectorXd w = oracle::moment_weights(rule.nodes);
  for (int i = 0; i < 3; ++i)
    CHECK(rule.weights[i] == doctest::Approx(w[i]).epsilon(1e-13));
  CHECK(rule.weights[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("rules reject degenerate sizes") {
  CHECK_THROWS_AS(gauss_nodes(RuleKind::LG, 0), std::invalid_argument);
  CHECK_THROWS_AS(gauss_nodes(RuleKind::LGL, 1), std::invalid_argument);
}

TEST_CASE("quadrature exactness up to the stated degree for n <= 40") {
  for (const RuleKind kind : {RuleKind::LG, RuleKind::LGL, RuleKind::FLGR}) {
    for (int n = (kind == RuleKind::LGL ? 2 : 1); n <= 40; ++n) {
      const auto rule = gauss_nodes(kind, n);
      REQUIRE(rule.nodes.size() == n);
      for (int i = 1; i < n; ++i) REQUIRE(rule.nodes[i] > rule.nodes[i - 1]);
      CHECK(std::abs(rule.weights.sum() - 2.0) < 1e-13);
      CHECK(rule.weights.minCoeff() > 0.0);
      for (int k = 0; k <= exactness_degree(kind, n); ++k) {
        double q = 0.0;
        for (int i = 0; i < n; ++i)
          q += rule.weights[i] * std::pow(rule.nodes[i], k);
        CHECK(std::abs(q - oracle::monomial_integral(k)) < 1e-12);
      }
    }
  }
}

TEST_CASE("node ranges per kind") {
  const auto lg = gauss_nodes(RuleKind::LG, 7);
  CHECK(lg.nodes.minCoeff() > -1.0);
  CHECK(lg.nodes.maxCoeff() < 1.0);
  const auto lgl = gauss_nodes(RuleKind::LGL, 7);
  CHECK(lgl.nodes[0] == -1.0);
  CHECK(lgl.nodes[6] == 1.0);
  const auto flgr = gauss_nodes(RuleKind::FLGR, 7);
  CHECK(flgr.nodes[0] > -1.0);
  CHECK(flgr.nodes[6] == 1.0);
}

TEST_CASE("fLGR nodes mirror the Radau nodes found by bisection") {
  for (int n = 1; n <= 12; ++n) {
    auto poly = [n](double s) {
      return oracle::legendre(n - 1, s) + oracle::legendre(n, s);
    };
    std::vector<double> lgr = oracle::bisect_roots(poly, -1.0, 1.0 - 1e-9, 4000);
    if (lgr.empty() || std::abs(lgr.front() + 1.0) > 1e-8)
      lgr.insert(lgr.begin(), -1.0);
    REQUIRE(static_cast<int>(lgr.size()) == n);
    const auto rule = gauss_nodes(RuleKind::FLGR, n);
    for (int i = 0; i < n; ++i)
      CHECK(rule.nodes[i] == doctest::Approx(-lgr[n - 1 - i]).epsilon(1e-10));
  }
}

TEST_CASE("lagrange_eval reproduces linear interpolation") {
  Eigen::VectorXd support(2), pts(1);
  support << 0.0, 1.0;
  pts << 0.25;
  const auto [values, derivs] = hpoc::basis::lagrange_eval(support, pts);
  CHECK(values(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(values(1, 0) == doctest::Approx(0.25).epsilon(1e-15));

  pts << 0.5;
  const auto [v2, d2] = hpoc::basis::lagrange_eval(support, pts);
  CHECK(d2(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(d2(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lagrange_eval isolation at a support point") {
  Eigen::VectorXd support(3), pts(1);
  support << 0.0, 0.5, 1.0;
  pts << 0.0;
  const auto [values, derivs] = hpoc::basis::lagrange_eval(support, pts);
  CHECK(values(0, 0) == 1.0);
  CHECK(values(1, 0) == 0.0);
  CHECK(values(2, 0) == 0.0);
}

TEST_CASE("lagrange_eval rejects duplicate support points") {
  Eigen::VectorXd support(2), pts(1);
  support << 0.3, 0.3;
  pts << 0.1;
  CHECK_THROWS_AS(hpoc::basis::lagrange_eval(support, pts),
                  std::invalid_argument);
}

TEST_CASE("partition of unity at arbitrary points") {
  const auto lgl = gauss_nodes(RuleKind::LGL, 9);
  Eigen::VectorXd pts(41);
  for (int i = 0; i < 41; ++i) pts[i] = -1.0 + 2.0 * i / 40.0;
  const auto [values, derivs] = hpoc::basis::lagrange_eval(lgl.nodes, pts);
  for (int k = 0; k < pts.size(); ++k) {
    CHECK(std::abs(values.col(k).sum() - 1.0) < 1e-12);
    CHECK(std::abs(derivs.col(k).sum()) < 1e-11);
  }
}

TEST_CASE("diff_matrix on a linear support") {
  Eigen::VectorXd support(2), eval(1);
  support << -1.0, 1.0;
  eval << 1.0;
  const Eigen::MatrixXd d = hpoc::basis::diff_matrix(support, eval);
  CHECK(d(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(d(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("diff_matrix rows annihilate constants") {
  Eigen::VectorXd support(3), eval(2);
  support << -1.0, -1.0 / 3.0, 1.0;
  eval << -1.0 / 3.0, 1.0;
  const Eigen::MatrixXd d = hpoc::basis::diff_matrix(support, eval);
  REQUIRE(d.rows() == 2);
  REQUIRE(d.cols() == 3);
  for (int k = 0; k < 2; ++k) CHECK(std::abs(d.row(k).sum()) < 1e-12);
}

TEST_CASE("diff_matrix is exact on monomials up to the support degree") {
  // analytic derivative of s^d as the oracle
  for (int deg = 1; deg <= 10; ++deg) {
    const auto support = gauss_nodes(RuleKind::LGL, deg + 1).nodes;
    Eigen::VectorXd eval(7);
    for (int i = 0; i < 7; ++i) eval[i] = -0.95 + 1.9 * i / 6.0;
    const Eigen::MatrixXd d = hpoc::basis::diff_matrix(support, eval);
    for (int p = 0; p <= deg; ++p) {
      Eigen::VectorXd samples(deg + 1);
      for (int j = 0; j <= deg; ++j) samples[j] = std::pow(support[j], p);
      const Eigen::VectorXd got = d * samples;
      for (int k = 0; k < eval.size(); ++k) {
        const double expect = p == 0 ? 0.0 : p * std::pow(eval[k], p - 1);
        CHECK(std::abs(got[k] - expect) < 1e-11);
      }
    }
  }
}

TEST_CASE("legendre_vandermonde basics") {
  Eigen::VectorXd pts(2);
  pts << -1.0, 1.0;
  const Eigen::MatrixXd v = hpoc::basis::legendre_vandermonde(1, pts);
  CHECK(v(0, 0) == 1.0);
  CHECK(v(0, 1) == -1.0);
  CHECK(v(1, 0) == 1.0);
  CHECK(v(1, 1) == 1.0);

  Eigen::VectorXd three(3);
  three << -0.7, 0.0, 0.9;
  const Eigen::MatrixXd v2 = hpoc::basis::legendre_vandermonde(2, three);
  CHECK(v2(1, 2) == doctest::Approx(-0.5).epsilon(1e-15));

  Eigen::VectorXd wrong(2);
  wrong << 0.0, 1.0;
  CHECK_THROWS_AS(hpoc::basis::legendre_vandermonde(2, wrong),
                  std::invalid_argument);
}

TEST_CASE("legendre_vandermonde inverse recovers expansion coefficients") {
  Eigen::VectorXd pts(3);
  pts << -0.9, 0.2, 0.8;
  const Eigen::MatrixXd v = hpoc::basis::legendre_vandermonde(2, pts);
  Eigen::VectorXd samples(3);
  for (int i = 0; i < 3; ++i) samples[i] = oracle::legendre(2, pts[i]);
  const Eigen::VectorXd coeffs = v.fullPivLu().solve(samples);
  CHECK(std::abs(coeffs[0]) < 1e-13);
  CHECK(std::abs(coeffs[1]) < 1e-13);
  CHECK(coeffs[2] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("legendre round trip through a nodal representation") {
  // Lagrange coefficients of a known polynomial -> Legendre coefficients ->
  // evaluation matches the original within 1e-11.
  auto poly = [](double x) { return 0.3 - 1.2 * x + 0.5 * x * x * x; };
  const auto support = gauss_nodes(RuleKind::LGL, 4).nodes;
  Eigen::VectorXd nodal(4);
  for (int i = 0; i < 4; ++i) nodal[i] = poly(support[i]);
  const Eigen::MatrixXd v = hpoc::basis::legendre_vandermonde(3, support);
  const Eigen::VectorXd a = v.fullPivLu().solve(nodal);
  for (double x : {-1.0, -0.4, 0.1, 0.77, 1.0}) {
    double val = 0.0;
    for (int j = 0; j < 4; ++j) val += a[j] * oracle::legendre(j, x);
    CHECK(std::abs(val - poly(x)) < 1e-11);
  }
}
