#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "gradcont/bench.hpp"
#include "gradcont/order_conditions.hpp"

namespace gradcont {

namespace {

constexpr double kMinComponent = 1e-6;   // sign pattern must be well-defined
constexpr double kFeasTol = 1e-8;        // input feasibility requirement
constexpr double kRestoreTol = 1e-12;    // feasibility after restoration
constexpr double kConstraintTol = 1e-11; // guaranteed on success
constexpr double kReducedGradTol = 1e-8; // stationarity along the manifold
constexpr int kMaxIterations = 100;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// Per-component drift budget: the refinement must preserve at least two
// significant digits of every coefficient.
double budget(double x0i) { return 0.01 * std::max(std::abs(x0i), 0.01); }

struct Fail {
  PolishStatus status;
  std::string message;
};

}  // namespace

PolishResult polish_with_constraints(const Eigen::VectorXd& x0,
                                     const ConstraintCallbacks& c) {
  if (x0.size() == 0)
    throw std::invalid_argument("polish: empty input vector");
  if (!x0.allFinite())
    throw std::invalid_argument("polish: non-finite input component");
  for (Eigen::Index i = 0; i < x0.size(); ++i)
    if (std::abs(x0[i]) <= kMinComponent)
      throw std::invalid_argument(
          "polish: component " + std::to_string(i) +
          " is too close to zero for a well-defined sign pattern");

  const Eigen::VectorXd c0 = c.values(x0);
  if (c0.lpNorm<Eigen::Infinity>() > kFeasTol)
    throw std::invalid_argument(
        "polish: input violates the constraints (|c|_inf = " +
        fmt(c0.lpNorm<Eigen::Infinity>()) +
        "); polish refines near-solutions only");

  const Eigen::Index n = x0.size();
  const Eigen::Index m = c0.size();
  const Eigen::VectorXd s =
      x0.array().sign().matrix();  // 1-norm gradient in this orthant

  // Gauss-Newton pullback onto the constraint set (min-norm update per
  // step). Returns false if feasibility cannot be reached.
  const auto restore = [&](Eigen::VectorXd& x) {
    for (int it = 0; it < 30; ++it) {
      const Eigen::VectorXd cv = c.values(x);
      if (cv.lpNorm<Eigen::Infinity>() <= kRestoreTol) return true;
      const Eigen::MatrixXd J = c.jacobian(x);
      Eigen::BDCSVD<Eigen::MatrixXd> svd(
          J, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::VectorXd dx = svd.solve(-cv);
      if (!dx.allFinite()) return false;
      x += dx;
    }
    return c.values(x).lpNorm<Eigen::Infinity>() <= kRestoreTol;
  };

  const auto finish = [&](const Eigen::VectorXd& x, int iters,
                          PolishStatus status, std::string msg) {
    PolishResult r;
    r.status = status;
    r.gamma = x;
    r.one_norm_before = x0.lpNorm<1>();
    r.one_norm_after = x.lpNorm<1>();
    r.iterations = iters;
    r.message = std::move(msg);
    return r;
  };

  Eigen::VectorXd x = x0;
  if (!restore(x))
    return finish(x, 0, PolishStatus::NoConvergence,
                  "could not reach feasibility from the input point");

  int iter = 0;
  bool stationary = false;
  Fail pending{PolishStatus::NoConvergence, ""};
  bool failed = false;

  for (; iter < kMaxIterations; ++iter) {
    const Eigen::MatrixXd J = c.jacobian(x);
    if (J.rows() != m || J.cols() != n)
      throw std::invalid_argument("polish: jacobian shape mismatch");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        J, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double rank_tol = static_cast<double>(std::max(m, n)) *
                            std::numeric_limits<double>::epsilon() *
                            (sv.size() ? sv[0] : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > rank_tol) ++rank;
    const Eigen::Index k = n - rank;  // dimension of the solution manifold

    if (k == 0) {  // isolated solution: nothing to descend along
      stationary = true;
      break;
    }
    const Eigen::MatrixXd Z = svd.matrixV().rightCols(k);
    const Eigen::VectorXd gz = Z.transpose() * s;  // reduced 1-norm gradient
    if (gz.lpNorm<Eigen::Infinity>() <= kReducedGradTol) {
      stationary = true;
      break;
    }

    // Reduced Newton direction: curvature of the manifold seen by the
    // linear objective is the multiplier-weighted constraint curvature
    // projected onto the tangent space.
    const Eigen::VectorXd mu =
        Eigen::BDCSVD<Eigen::MatrixXd>(J.transpose(), Eigen::ComputeThinU |
                                                          Eigen::ComputeThinV)
            .solve(-s);
    const Eigen::MatrixXd Hred =
        Z.transpose() * c.weighted_hessian(x, mu) * Z;
    Eigen::VectorXd u = Hred.ldlt().solve(-gz);
    // Fall back to steepest descent if the Newton step is unusable or not a
    // descent direction.
    if (!u.allFinite() || gz.dot(u) >= -1e-14 * gz.norm() * u.norm())
      u = -gz;

    const Eigen::VectorXd dir = Z * u;
    double t = 1.0;
    bool accepted = false;
    bool sign_block = false;
    bool budget_block = false;
    const double f_cur = x.lpNorm<1>();
    Eigen::VectorXd x_acc;
    while (t >= 1e-14) {
      Eigen::VectorXd x_try = x + t * dir;

      bool flip = false, over = false;
      for (Eigen::Index i = 0; i < n && !flip && !over; ++i) {
        if (x_try[i] * x0[i] <= 0.0) flip = true;
        if (std::abs(x_try[i] - x0[i]) > budget(x0[i])) over = true;
      }
      if (flip || over) {
        sign_block = sign_block || flip;
        budget_block = budget_block || over;
        t *= 0.5;
        continue;
      }
      if (!restore(x_try)) {
        t *= 0.5;
        continue;
      }
      // Re-check the guards after the pullback moved the point.
      bool bad = false;
      for (Eigen::Index i = 0; i < n && !bad; ++i) {
        if (x_try[i] * x0[i] <= 0.0) {
          sign_block = true;
          bad = true;
        } else if (std::abs(x_try[i] - x0[i]) > budget(x0[i])) {
          budget_block = true;
          bad = true;
        }
      }
      if (bad) {
        t *= 0.5;
        continue;
      }
      if (x_try.lpNorm<1>() <= f_cur - 1e-16) {
        x_acc = std::move(x_try);
        accepted = true;
        break;
      }
      t *= 0.5;
    }

    if (!accepted) {
      failed = true;
      if (sign_block)
        pending = {PolishStatus::SignFlip,
                   "descent requires a coefficient to change sign"};
      else if (budget_block)
        pending = {PolishStatus::NoConvergence,
                   "refinement budget exhausted before stationarity "
                   "(reduced gradient " +
                       fmt(gz.lpNorm<Eigen::Infinity>()) + ")"};
      else
        pending = {PolishStatus::NoConvergence,
                   "descent stalled at reduced gradient " +
                       fmt(gz.lpNorm<Eigen::Infinity>())};
      break;
    }

    const double moved = (x_acc - x).lpNorm<Eigen::Infinity>();
    x = std::move(x_acc);
    // A crawl against one of the guard walls cannot make progress; report
    // the wall rather than looping to the iteration cap.
    if (moved <= 1e-12 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      if (sign_block) {
        failed = true;
        pending = {PolishStatus::SignFlip,
                   "descent requires a coefficient to change sign"};
      } else if (budget_block) {
        failed = true;
        pending = {PolishStatus::NoConvergence,
                   "refinement budget exhausted before stationarity"};
      }
      if (failed) break;
    }
  }

  if (!failed && !stationary)
    return finish(x, iter, PolishStatus::NoConvergence,
                  "did not reach stationarity within the iteration budget");
  if (failed) return finish(x, iter, pending.status, pending.message);

  // Post-conditions of a successful refinement; violations are reported,
  // never silently returned.
  if (c.values(x).lpNorm<Eigen::Infinity>() > kConstraintTol)
    return finish(x, iter, PolishStatus::NoConvergence,
                  "constraints not met after refinement");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x[i] * x0[i] <= 0.0)
      return finish(x, iter, PolishStatus::SignFlip,
                    "sign pattern changed during refinement");
    if (std::abs(x[i] - x0[i]) > budget(x0[i]))
      return finish(x, iter, PolishStatus::NoConvergence,
                    "component " + std::to_string(i) +
                        " moved beyond the refinement budget");
  }
  if (x.lpNorm<1>() > x0.lpNorm<1>() + 1e-12)
    return finish(x, iter, PolishStatus::NoConvergence,
                  "refinement increased the 1-norm");

  return finish(x, iter, PolishStatus::Ok, "");
}

PolishResult polish_one_norm(const Eigen::VectorXd& gamma) {
  const Eigen::Index n = gamma.size();
  const Eigen::Index h = n / 2;
  const Eigen::Index m = h + kNumOrderConditions;

  ConstraintCallbacks cb;
  cb.values = [n, h, m](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd v(m);
    for (Eigen::Index j = 1; j <= h; ++j) v[j - 1] = x[j - 1] - x[n - j];
    v.tail(kNumOrderConditions) = order_condition_values(x);
    return v;
  };
  cb.jacobian = [n, h, m](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, n);
    for (Eigen::Index j = 1; j <= h; ++j) {
      J(j - 1, j - 1) = 1.0;
      J(j - 1, n - j) = -1.0;
    }
    Eigen::VectorXd row(n);
    for (int c = 0; c < kNumOrderConditions; ++c) {
      order_condition_gradient(c, x, row);
      J.row(h + c) = row.transpose();
    }
    return J;
  };
  cb.weighted_hessian = [n, h](const Eigen::VectorXd& x,
                               const Eigen::VectorXd& w) -> Eigen::MatrixXd {
    // Mirror rows are linear; only the order conditions carry curvature.
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    order_condition_weighted_hessian_acc(x, w.tail(kNumOrderConditions), H);
    return H;
  };

  return polish_with_constraints(gamma, cb);
}

}  // namespace gradcont
