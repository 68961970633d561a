#include "hpoc/basis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hpoc::basis {

namespace {

// Value and derivative of P_n via the three-term recurrence; the derivative
// uses P'_{k+1} = P'_{k-1} + (2k+1) P_k, which stays finite at the endpoints.
struct LegendrePair {
  double value;
  double derivative;
};

LegendrePair legendre_pair(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = x;
  double d_prev = 0.0, d = 1.0;
  for (int k = 1; k < n; ++k) {
    const double p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1);
    const double d_next = d_prev + (2 * k + 1) * p;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  return {p, d};
}

// Finds all sign-change roots of f in (lo, hi) by scanning a Chebyshev-spaced
// grid and polishing each bracket with Newton steps safeguarded by bisection.
std::vector<double> bracketed_roots(const std::function<LegendrePair(double)>& f,
                                    int expected, double lo, double hi) {
  const int samples = std::max(64, 16 * expected);
  std::vector<double> grid(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    const double theta = M_PI * static_cast<double>(samples - i) / samples;
    const double c = std::cos(theta);
    grid[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * c;
  }
  grid.front() = lo;
  grid.back() = hi;

  std::vector<double> roots;
  double fa = f(grid[0]).value;
  for (int i = 1; i <= samples; ++i) {
    double fb = f(grid[i]).value;
    if (fb == 0.0) {
      roots.push_back(grid[i]);
      fa = f(grid[i] + 1e-13 * (hi - lo)).value;
      continue;
    }
    if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
      double a = grid[i - 1], b = grid[i];
      double x = 0.5 * (a + b);
      double fa_loc = fa;
      for (int it = 0; it < 100; ++it) {
        const LegendrePair p = f(x);
        if (p.value == 0.0) break;
        if ((fa_loc < 0) == (p.value < 0)) a = x; else b = x;
        double step = p.derivative != 0.0 ? p.value / p.derivative : 0.0;
        double x_new = x - step;
        if (!(x_new > a && x_new < b)) x_new = 0.5 * (a + b);
        if (std::abs(x_new - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
          x = x_new;
          break;
        }
        x = x_new;
      }
      roots.push_back(x);
    }
    fa = fb;
  }
  return roots;
}

void symmetrize(Eigen::VectorXd& nodes) {
  const int n = nodes.size();
  for (int i = 0; i < n / 2; ++i) {
    const double v = 0.5 * (nodes[i] - nodes[n - 1 - i]);
    nodes[i] = v;
    nodes[n - 1 - i] = -v;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

QuadratureRule make_lg(int n) {
  auto f = [n](double x) { return legendre_pair(n, x); };
  std::vector<double> roots = bracketed_roots(f, n, -1.0, 1.0);
  if (static_cast<int>(roots.size()) != n)
    throw std::runtime_error("hpoc::basis: LG root scan failed");
  Eigen::VectorXd nodes = Eigen::Map<Eigen::VectorXd>(roots.data(), n);
  symmetrize(nodes);
  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    const LegendrePair p = legendre_pair(n, nodes[i]);
    weights[i] = 2.0 / ((1.0 - nodes[i] * nodes[i]) * p.derivative * p.derivative);
  }
  return {RuleKind::LG, std::move(nodes), std::move(weights)};
}

QuadratureRule make_lgl(int n) {
  Eigen::VectorXd nodes(n);
  nodes[0] = -1.0;
  nodes[n - 1] = 1.0;
  if (n > 2) {
    // interior nodes are the roots of P'_{n-1}
    auto f = [n](double x) {
      const LegendrePair p = legendre_pair(n - 1, x);
      const double second =
          (2.0 * x * p.derivative - (n - 1) * n * p.value) / (1.0 - x * x);
      return LegendrePair{p.derivative, second};
    };
    std::vector<double> roots = bracketed_roots(f, n - 2, -1.0, 1.0);
    if (static_cast<int>(roots.size()) != n - 2)
      throw std::runtime_error("hpoc::basis: LGL root scan failed");
    for (int i = 0; i < n - 2; ++i) nodes[i + 1] = roots[i];
  }
  symmetrize(nodes);
  Eigen::VectorXd weights(n);
  for (int i = 0; i < n; ++i) {
    const double p = legendre_pair(n - 1, nodes[i]).value;
    weights[i] = 2.0 / (n * (n - 1) * p * p);
  }
  return {RuleKind::LGL, std::move(nodes), std::move(weights)};
}

// Standard LGR rule (includes -1): nodes are the roots of P_{n-1} + P_n.
// The fLGR rule is its mirror image.
QuadratureRule make_flgr(int n) {
  Eigen::VectorXd lgr_nodes(n);
  lgr_nodes[0] = -1.0;
  if (n > 1) {
    auto f = [n](double x) {
      const LegendrePair a = legendre_pair(n - 1, x);
      const LegendrePair b = legendre_pair(n, x);
      return LegendrePair{a.value + b.value, a.derivative + b.derivative};
    };
    // exclude the known root at -1 from the scan
    std::vector<double> roots = bracketed_roots(f, n - 1, -1.0 + 1e-12, 1.0);
    if (static_cast<int>(roots.size()) != n - 1)
      throw std::runtime_error("hpoc::basis: LGR root scan failed");
    for (int i = 0; i < n - 1; ++i) lgr_nodes[i + 1] = roots[i];
  }
  Eigen::VectorXd lgr_weights(n);
  lgr_weights[0] = 2.0 / (n * n);
  for (int i = 1; i < n; ++i) {
    const double p = legendre_pair(n - 1, lgr_nodes[i]).value;
    lgr_weights[i] = (1.0 - lgr_nodes[i]) / (n * n * p * p);
  }
  Eigen::VectorXd nodes(n), weights(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = -lgr_nodes[n - 1 - i];
    weights[i] = lgr_weights[n - 1 - i];
  }
  if (n > 0) nodes[n - 1] = 1.0;
  return {RuleKind::FLGR, std::move(nodes), std::move(weights)};
}

Eigen::VectorXd barycentric_weights(const Eigen::VectorXd& support) {
  const int n = support.size();
  Eigen::VectorXd w(n);
  for (int j = 0; j < n; ++j) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const double d = support[j] - support[i];
      if (d == 0.0)
        throw std::invalid_argument("hpoc::basis: duplicate support points");
      prod *= d;
    }
    w[j] = 1.0 / prod;
  }
  return w;
}

}  // namespace

QuadratureRule gauss_nodes(RuleKind kind, int n) {
  if (n < 1) throw std::invalid_argument("hpoc::basis: rule needs n >= 1");
  if (kind == RuleKind::LGL && n < 2)
    throw std::invalid_argument("hpoc::basis: LGL needs n >= 2");
  QuadratureRule rule = kind == RuleKind::LG    ? make_lg(n)
                        : kind == RuleKind::LGL ? make_lgl(n)
                                                : make_flgr(n);
  if (std::abs(rule.weights.sum() - 2.0) > 1e-12)
    throw std::runtime_error("hpoc::basis: weights fail the measure check");
  return rule;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
lagrange_eval(const Eigen::VectorXd& support, const Eigen::VectorXd& points) {
  const int n = support.size();
  const int m = points.size();
  const Eigen::VectorXd w = barycentric_weights(support);
  const double scale = std::max(1.0, support.cwiseAbs().maxCoeff());

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd derivs = Eigen::MatrixXd::Zero(n, m);
  for (int k = 0; k < m; ++k) {
    const double x = points[k];
    int hit = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(x - support[j]) <= 8.0 * 2.220446049250313e-16 * scale) {
        hit = j;
        break;
      }
    }
    if (hit >= 0) {
      values(hit, k) = 1.0;
      double diag = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == hit) continue;
        const double d = (w[j] / w[hit]) / (support[hit] - support[j]);
        derivs(j, k) = d;
        diag -= d;
      }
      derivs(hit, k) = diag;
      continue;
    }
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double q = w[j] / (x - support[j]);
      s1 += q;
      s2 += q / (x - support[j]);
    }
    for (int j = 0; j < n; ++j) {
      const double q = w[j] / (x - support[j]);
      const double phi = q / s1;
      values(j, k) = phi;
      derivs(j, k) = phi * (s2 / s1 - 1.0 / (x - support[j]));
    }
  }
  return {std::move(values), std::move(derivs)};
}

Eigen::MatrixXd diff_matrix(const Eigen::VectorXd& support,
                            const Eigen::VectorXd& eval_points) {
  return lagrange_eval(support, eval_points).second.transpose();
}

Eigen::MatrixXd legendre_vandermonde(int degree, const Eigen::VectorXd& points) {
  if (points.size() != degree + 1)
    throw std::invalid_argument(
        "hpoc::basis: legendre_vandermonde needs degree+1 points");
  Eigen::MatrixXd v(degree + 1, degree + 1);
  for (int i = 0; i <= degree; ++i) {
    const double x = points[i];
    double p_prev = 1.0, p = x;
    v(i, 0) = 1.0;
    if (degree >= 1) v(i, 1) = x;
    for (int j = 2; j <= degree; ++j) {
      const double p_next = ((2 * j - 1) * x * p - (j - 1) * p_prev) / j;
      p_prev = p;
      p = p_next;
      v(i, j) = p;
    }
  }
  return v;
}

double legendre_value(int n, double x) { return legendre_pair(n, x).value; }

}  // namespace hpoc::basis
