#include "gradcont/polynomial.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using gradcont::Polynomial;
using gradcont::PolySystem;

namespace {

// Random sparse polynomial for round-trip / calculus checks.
Polynomial random_poly(std::mt19937& rng, int nvars, int nterms, int maxdeg) {
  std::uniform_int_distribution<int> expd(0, maxdeg);
  std::uniform_real_distribution<double> cd(-2.0, 2.0);
  Polynomial p(nvars);
  std::vector<int> e(nvars);
  for (int t = 0; t < nterms; ++t) {
    for (int i = 0; i < nvars; ++i) e[i] = expd(rng) == maxdeg ? 2 : 0;
    if (nvars > 0) e[t % nvars] += expd(rng);
    p.push_term(e, cd(rng));
  }
  p.canonicalize();
  return p;
}

double eval_naive(const Polynomial& p, const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (int t = 0; t < p.nterms(); ++t) {
    double m = p.coeff(t);
    const std::uint8_t* row = p.expo_row(t);
    for (int i = 0; i < p.nvars(); ++i) m *= std::pow(x[i], row[i]);
    acc += m;
  }
  return acc;
}

}  // namespace

TEST_CASE("polynomial basics: constant, variable, monomial") {
  auto c = Polynomial::constant(3, 2.5);
  auto x1 = Polynomial::variable(3, 1);
  Eigen::VectorXd x(3);
  x << 2.0, -3.0, 5.0;
  CHECK(c.eval(x) == doctest::Approx(2.5));
  CHECK(x1.eval(x) == doctest::Approx(-3.0));
  auto m = Polynomial::monomial(3, {1, 0, 2}, -1.5);
  CHECK(m.eval(x) == doctest::Approx(-1.5 * 2.0 * 25.0));
  CHECK(m.degree() == 3);
  CHECK(m.nterms() == 1);
  CHECK(Polynomial(4).is_zero());
  CHECK(Polynomial(4).degree() == 0);
}

TEST_CASE("canonicalize merges duplicates, sorts, drops zeros") {
  Polynomial p(2);
  p.push_term(std::vector<int>{1, 1}, 2.0);
  p.push_term(std::vector<int>{0, 2}, 1.0);
  p.push_term(std::vector<int>{1, 1}, 3.0);
  p.push_term(std::vector<int>{2, 0}, 4.0);
  p.push_term(std::vector<int>{0, 2}, -1.0);
  p.canonicalize();
  CHECK(p.nterms() == 2);  // xy merged, y^2 cancelled
  Eigen::VectorXd x(2);
  x << 2.0, 3.0;
  CHECK(p.eval(x) == doctest::Approx(5.0 * 6.0 + 4.0 * 4.0));
}

TEST_CASE("arithmetic identities hold structurally") {
  auto x = Polynomial::variable(2, 0);
  auto y = Polynomial::variable(2, 1);
  auto lhs = (x + y) * (x + y);
  auto rhs = x * x + 2.0 * (x * y) + y * y;
  CHECK(lhs == rhs);
  auto diff = lhs - rhs;
  CHECK(diff.is_zero());
  auto p = (x - y) * (x + y);
  CHECK(p == x * x - y * y);
}

TEST_CASE("eval matches naive term-by-term evaluation") {
  std::mt19937 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = random_poly(rng, 4, 12, 3);
    auto x = testutil::random_vector(rng, 4);
    const double a = p.eval(x);
    const double b = eval_naive(p, x);
    CHECK(std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(b)));
  }
}

TEST_CASE("derivative against finite differences") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    auto p = random_poly(rng, 3, 10, 3);
    auto x = testutil::random_vector(rng, 3);
    for (int v = 0; v < 3; ++v) {
      auto d = p.derivative(v);
      auto fd = oracle::fd_gradient(
          [&](const Eigen::VectorXd& z) { return p.eval(z); }, x);
      CHECK(d.eval(x) == doctest::Approx(fd[v]).epsilon(1e-6));
    }
  }
}

TEST_CASE("gradient and hessian accumulators match finite differences") {
  std::mt19937 rng(13);
  auto p = random_poly(rng, 4, 15, 3);
  auto x = testutil::random_vector(rng, 4);
  auto f = [&](const Eigen::VectorXd& z) { return p.eval(z); };

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(4);
  p.grad_acc(x, 2.0, grad);
  Eigen::VectorXd fd = 2.0 * oracle::fd_gradient(f, x);
  for (int i = 0; i < 4; ++i)
    CHECK(grad[i] == doctest::Approx(fd[i]).epsilon(1e-6));

  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(4, 4);
  p.hess_acc(x, -1.5, hess);
  Eigen::MatrixXd fh = -1.5 * oracle::fd_hessian(f, x);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(hess(i, j) ==
            doctest::Approx(fh(i, j)).epsilon(1e-4).scale(
                std::max(1.0, fh.cwiseAbs().maxCoeff())));
  // Accumulation really accumulates.
  Eigen::VectorXd grad2 = grad;
  p.grad_acc(x, 2.0, grad2);
  CHECK((grad2 - 2.0 * grad).norm() <= 1e-12 * (1.0 + grad.norm()));
}

TEST_CASE("homogenization inserts a fresh variable of compensating degree") {
  // p(x, y) = x^2 y + 3 x - 7, homogenize with new first variable t.
  auto x = Polynomial::variable(2, 0);
  auto y = Polynomial::variable(2, 1);
  auto p = x * x * y + 3.0 * x + Polynomial::constant(2, -7.0);
  auto h = p.homogenized(0);
  CHECK(h.nvars() == 3);
  CHECK(h.is_homogeneous());
  CHECK(h.degree() == 3);
  std::mt19937 rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    auto z = testutil::random_vector(rng, 2);
    Eigen::VectorXd lifted(3);
    lifted << 1.0, z[0], z[1];
    CHECK(h.eval(lifted) == doctest::Approx(p.eval(z)));
    const double t = 1.7;
    Eigen::VectorXd scaled(3);
    scaled << t, t * z[0], t * z[1];
    CHECK(h.eval(scaled) == doctest::Approx(t * t * t * p.eval(z)));
  }
}

TEST_CASE("text round trip preserves structure") {
  std::mt19937 rng(17);
  auto p = random_poly(rng, 5, 20, 3);
  auto q = Polynomial::from_text(p.to_text());
  CHECK(p == q);

  PolySystem sys(3);
  sys.add(random_poly(rng, 3, 8, 2));
  sys.add(random_poly(rng, 3, 5, 3));
  auto sys2 = PolySystem::from_text(sys.to_text());
  REQUIRE(sys2.size() == 2);
  CHECK(sys2[0] == sys[0]);
  CHECK(sys2[1] == sys[1]);
}

TEST_CASE("polysystem eval and jacobian agree with per-polynomial results") {
  std::mt19937 rng(23);
  PolySystem sys(4);
  for (int i = 0; i < 3; ++i) sys.add(random_poly(rng, 4, 10, 3));
  auto x = testutil::random_vector(rng, 4);
  Eigen::VectorXd v = sys.eval(x);
  REQUIRE(v.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(sys[i].eval(x)));
  Eigen::MatrixXd J = sys.jacobian(x);
  Eigen::MatrixXd Jfd = oracle::fd_jacobian(
      [&](const Eigen::VectorXd& z) { return sys.eval(z); }, x);
  CHECK((J - Jfd).cwiseAbs().maxCoeff() <= 1e-6 * (1.0 + J.cwiseAbs().maxCoeff()));
}
