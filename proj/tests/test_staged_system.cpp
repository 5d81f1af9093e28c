#include "gradcont/staged_system.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcont/order_conditions.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using gradcont::AugPoint;
using gradcont::build_benchmark_system;
using gradcont::build_staged_system;
using gradcont::Polynomial;
using gradcont::PolySystem;
using gradcont::StagedLagrangeSystem;

namespace {

// Two-variable toy: initial constraint x + y - 1, released constraint
// x*y - 0.21 (roots x = 0.3 / 0.7).
StagedLagrangeSystem toy_system() {
  PolySystem order(2);
  auto x = Polynomial::variable(2, 0);
  auto y = Polynomial::variable(2, 1);
  order.add(x + y - Polynomial::constant(2, 1.0));
  order.add(x * y - Polynomial::constant(2, 0.21));
  PolySystem sym(2);
  return build_staged_system(order, sym, 1, 4.0, 1.0);
}

Eigen::VectorXd random_z(std::mt19937& rng, const StagedLagrangeSystem& sys) {
  return testutil::random_vector(rng, sys.ell(), -2.0, 2.0);
}

}  // namespace

TEST_CASE("dimensions follow n + m + 3") {
  auto sys31 = build_benchmark_system(31);
  CHECK(sys31.n() == 31);
  CHECK(sys31.m() == 31);
  CHECK(sys31.r() == 11);
  CHECK(sys31.ell() == 65);
  auto sys33 = build_benchmark_system(33);
  CHECK(sys33.m() == 32);
  CHECK(sys33.ell() == 68);
  auto toy = toy_system();
  CHECK(toy.n() == 2);
  CHECK(toy.m() == 2);
  CHECK(toy.ell() == 7);
}

TEST_CASE("sphere row dominates when multipliers vanish") {
  auto toy = toy_system();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(toy.ell());
  z.head(3) << 1.0, 0.5, -0.5;
  Eigen::VectorXd F = toy.eval_F(0, z);
  CHECK(F[0] == doctest::Approx(-1.0));  // -R_lambda^2
}

TEST_CASE("stage maps differ in exactly one component (numeric + symbolic)") {
  std::mt19937 rng(42);
  auto toy = toy_system();
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd z = random_z(rng, toy);
    Eigen::VectorXd d = toy.eval_F(1, z) - toy.eval_F(0, z);
    int nonzero = 0;
    for (int i = 0; i < d.size(); ++i)
      if (std::abs(d[i]) > 1e-14) ++nonzero;
    CHECK(nonzero <= 1);
    CHECK(std::abs(d[toy.swap_row(1)]) >= 0.0);
    for (int i = 0; i < d.size(); ++i)
      if (i != toy.swap_row(1)) CHECK(d[i] == 0.0);
  }

  // Benchmark at a small odd n: verify across all 11 stages numerically.
  auto sys = build_benchmark_system(9);
  for (int k = 1; k <= sys.r(); ++k) {
    Eigen::VectorXd z = random_z(rng, sys);
    Eigen::VectorXd d = sys.eval_F(k, z) - sys.eval_F(k - 1, z);
    for (int i = 0; i < d.size(); ++i)
      if (i != sys.swap_row(k)) CHECK(d[i] == 0.0);
  }
}

TEST_CASE("H and w partition F exactly") {
  std::mt19937 rng(43);
  auto sys = build_benchmark_system(9);
  for (int k = 1; k <= sys.r(); ++k) {
    Eigen::VectorXd z = random_z(rng, sys);
    Eigen::VectorXd F = sys.eval_F(k, z);
    Eigen::VectorXd H = sys.eval_H(k, z);
    const double w = sys.eval_w(k, z);
    // Reinsert w at the swap row and compare exactly.
    Eigen::VectorXd rebuilt(F.size());
    const int s = sys.swap_row(k);
    rebuilt.head(s) = H.head(s);
    rebuilt[s] = w;
    rebuilt.tail(F.size() - s - 1) = H.tail(F.size() - s - 1);
    CHECK((rebuilt - F).cwiseAbs().maxCoeff() == 0.0);
    // H_k is also the common part of F_{k-1}.
    Eigen::VectorXd Fprev = sys.eval_F(k - 1, z);
    Eigen::VectorXd dropped(F.size() - 1);
    dropped.head(s) = Fprev.head(s);
    dropped.tail(F.size() - s - 1) = Fprev.tail(F.size() - s - 1);
    CHECK((dropped - H).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("jacobians match finite differences") {
  std::mt19937 rng(44);
  auto toy = toy_system();
  for (int k = 0; k <= 1; ++k) {
    Eigen::VectorXd z = random_z(rng, toy);
    Eigen::MatrixXd J = toy.jac_F(k, z);
    Eigen::MatrixXd Jfd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& p) { return toy.eval_F(k, p); }, z);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() <=
          1e-6 * std::max(1.0, J.cwiseAbs().maxCoeff()));
  }
  {
    Eigen::VectorXd z = random_z(rng, toy);
    Eigen::MatrixXd J = toy.jac_H(1, z);
    Eigen::MatrixXd Jfd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& p) { return toy.eval_H(1, p); }, z);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() <=
          1e-6 * std::max(1.0, J.cwiseAbs().maxCoeff()));
  }
  // Structured benchmark backend, all stages.
  auto sys = build_benchmark_system(9);
  for (int k = 1; k <= sys.r(); ++k) {
    Eigen::VectorXd z = 0.5 * random_z(rng, sys);
    Eigen::MatrixXd J = sys.jac_H(k, z);
    Eigen::MatrixXd Jfd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& p) { return sys.eval_H(k, p); }, z);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() <=
          2e-6 * std::max(1.0, J.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("structured and generic backends agree on the benchmark") {
  const int n = 9;
  auto fast = build_benchmark_system(n);
  // Build the same system from explicitly expanded polynomials.
  PolySystem conds = gradcont::order_condition_system(n);
  PolySystem order(n), sym(n);
  for (int j = 0; j < n / 2; ++j) sym.add(conds[j]);
  for (int c = 0; c < gradcont::kNumOrderConditions; ++c)
    order.add(conds[n / 2 + c]);
  auto generic = build_staged_system(order, sym, 11, 4.0, 1.0);
  CHECK(fast.ell() == generic.ell());

  std::mt19937 rng(45);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd z = random_z(rng, fast);
    for (int k : {0, 3, 11}) {
      Eigen::VectorXd a = fast.eval_F(k, z);
      Eigen::VectorXd b = generic.eval_F(k, z);
      CHECK((a - b).cwiseAbs().maxCoeff() <=
            1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
      Eigen::MatrixXd Ja = fast.jac_F(k, z);
      Eigen::MatrixXd Jb = generic.jac_F(k, z);
      CHECK((Ja - Jb).cwiseAbs().maxCoeff() <=
            1e-9 * std::max(1.0, Jb.cwiseAbs().maxCoeff()));
    }
  }

  // The materialized constraint stacks are structurally identical.
  const PolySystem& fast_stack = fast.constraints_system();
  const PolySystem& gen_stack = generic.constraints_system();
  REQUIRE(fast_stack.size() == gen_stack.size());
  for (int j = 0; j < fast_stack.size(); ++j)
    CHECK(fast_stack[j] == gen_stack[j]);
}

TEST_CASE("constraint stack shape: sphere exact, others homogeneous") {
  auto sys = build_benchmark_system(9);
  const PolySystem& stack = sys.constraints_system();
  REQUIRE(stack.size() == sys.m() + 1);
  // P_1 = sum gamma_i^2 - R^2 over gamma_1..gamma_n only.
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(10);
  gamma[0] = 123.0;  // must not affect P_1
  gamma.tail(9).setConstant(1.0);
  CHECK(stack[0].eval(gamma) == doctest::Approx(9.0 - 16.0));
  std::mt19937 rng(46);
  for (int j = 1; j < stack.size(); ++j) {
    CHECK(stack[j].is_homogeneous());
    // P(t*gamma) = t^d P(gamma).
    auto g = testutil::random_vector(rng, 10);
    const double t = 1.3;
    const double lhs = stack[j].eval((t * g).eval());
    const double rhs = std::pow(t, stack[j].degree()) * stack[j].eval(g);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("fixture point solves stage-r system with least-squares multipliers") {
  auto sys = build_benchmark_system(31);
  auto x = testutil::read_column(testutil::data_path("coeffs_n31.txt"));
  REQUIRE(x.size() == 31);
  // Rescale to the sphere and recover gamma_0 from the scaling.
  const double scale = 4.0 / x.norm();
  Eigen::VectorXd gamma(32);
  gamma[0] = scale;
  gamma.tail(31) = scale * x;

  // Constraints hold after homogenization.
  Eigen::VectorXd v(sys.m() + 1);
  sys.backend().values(gamma, v);
  CHECK(v.cwiseAbs().maxCoeff() <= 1e-9);

  // Multipliers from least squares on the gradient rows.
  Eigen::MatrixXd J(sys.m() + 1, 32);
  sys.backend().jacobian(gamma, J);
  Eigen::VectorXd gobj(32);
  gobj.setZero();
  gobj[0] = -2.0 * gamma[0];
  // Solve [gobj | J^T] * lambda = 0 with ||lambda|| = R_lambda: null vector.
  Eigen::MatrixXd A(32, sys.m() + 2);
  A.col(0) = gobj;
  A.rightCols(sys.m() + 1) = J.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  Eigen::VectorXd lambda = svd.matrixV().col(sys.m() + 1);
  CHECK((A * lambda).cwiseAbs().maxCoeff() <= 1e-8);
  lambda.normalize();
  Eigen::VectorXd z(sys.ell());
  z << gamma, lambda;
  CHECK(sys.eval_F(sys.r(), z).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("merit equals the De-homogenized euclidean norm on the sphere") {
  auto sys = build_benchmark_system(31);
  auto x = testutil::read_column(testutil::data_path("coeffs_n31.txt"));
  const double scale = 4.0 / x.norm();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(sys.ell());
  z[0] = scale;
  z.segment(1, 31) = scale * x;
  CHECK(sys.merit(z) == doctest::Approx(x.norm()).epsilon(1e-12));
  AugPoint p = AugPoint::from_vector(z, 31);
  CHECK((p.dehomogenized() - x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("stage and size guards throw") {
  auto toy = toy_system();
  std::mt19937 rng(47);
  Eigen::VectorXd z = random_z(rng, toy);
  CHECK_THROWS_AS(toy.eval_F(-1, z), std::invalid_argument);
  CHECK_THROWS_AS(toy.eval_F(2, z), std::invalid_argument);
  CHECK_THROWS_AS(toy.eval_H(0, z), std::invalid_argument);
  CHECK_THROWS_AS(toy.eval_w(0, z), std::invalid_argument);
  CHECK_THROWS_AS(toy.eval_F(0, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  PolySystem bad(3);
  bad.add(Polynomial::variable(3, 0));
  PolySystem sym2(2);
  sym2.add(Polynomial::variable(2, 0));
  CHECK_THROWS_AS(build_staged_system(bad, sym2, 1, 4.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("custom stage order permutes the released tail") {
  PolySystem order(2);
  auto x = Polynomial::variable(2, 0);
  auto y = Polynomial::variable(2, 1);
  order.add(x + y - Polynomial::constant(2, 1.0));
  order.add(x * y - Polynomial::constant(2, 0.21));
  order.add(x - y);
  PolySystem sym(2);
  auto swapped = build_staged_system(order, sym, 2, 4.0, 1.0, {1, 0});
  // Stage 1 activates the *second* released constraint (x - y).
  Eigen::VectorXd z = Eigen::VectorXd::Zero(swapped.ell());
  z.head(3) << 1.0, 0.4, 0.1;
  CHECK(swapped.eval_w(1, z) == doctest::Approx(0.3));            // x - y
  CHECK(swapped.eval_w(2, z) == doctest::Approx(0.04 - 0.21));    // x*y - 0.21
  CHECK_THROWS_AS(build_staged_system(order, sym, 2, 4.0, 1.0, {0, 0}),
                  std::invalid_argument);
}
