#pragma once

// Benchmark-facing utilities for composition-method coefficient sets: residual
// reports against the symmetry + 16 order conditions, coefficient file IO, and
// the sign-fixed 1-norm polish.

#include <array>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "gradcont/order_conditions.hpp"

namespace gradcont {

// Everything verify() computes about one coefficient vector. Pure data.
struct ConditionReport {
  int n = 0;
  // max_j |gamma_j - gamma_{n+1-j}| over j = 1..[n/2]; exactly 0.0 for tables
  // that list mirrored values.
  double sym_max_abs = 0.0;
  // One (label, residual) entry per order condition, in the listing order of
  // order_condition_info().
  std::array<std::pair<std::string, double>, kNumOrderConditions>
      order_residuals{};
  double one_norm = 0.0;
  double euclid_norm = 0.0;
  // max_{1 <= i <= [n/2]} |gamma_1 + ... + gamma_{i-1} + gamma_i/2|.
  double of2_value = 0.0;
  // 0 <= gamma_1 + ... + gamma_i <= 1 for i = 2..n, with the same 1e-12
  // boundary slack as the seed filter (the full sum sits exactly on 1).
  bool cumsum_ok = false;

  double max_order_residual() const {
    double m = 0.0;
    for (const auto& [label, r] : order_residuals)
      m = std::max(m, std::abs(r));
    return m;
  }
};

// Residuals, norms, and filter quantities for one coefficient vector. Pure.
ConditionReport verify(const Eigen::VectorXd& gamma);

// Plain-text coefficient files: one value per line, 17 significant digits
// (lossless for doubles), '#' starts a comment. load throws std::runtime_error
// on unreadable/malformed files; save throws on write failure.
Eigen::VectorXd load_coeff_file(const std::string& path);
void save_coeff_file(const std::string& path, const Eigen::VectorXd& gamma);

enum class PolishStatus {
  Ok,
  SignFlip,       // a component crossed zero (sign pattern not preserved)
  NoConvergence,  // Newton failed, or the result violates the guarantees
};

struct PolishResult {
  PolishStatus status = PolishStatus::NoConvergence;
  Eigen::VectorXd gamma;     // polished point (valid only when status == Ok)
  double one_norm_before = 0.0;
  double one_norm_after = 0.0;
  int iterations = 0;
  std::string message;       // diagnostics on failure
};

// Constraint-system callbacks for the generic polish core. `weighted_hessian`
// returns sum_j w_j * Hessian(c_j)(x).
struct ConstraintCallbacks {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> values;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      weighted_hessian;
};

// Local 1-norm descent with the sign pattern frozen at the input: minimizes
// sum_i sign(x0_i) * x_i subject to c(x) = 0. Works in the null space of the
// constraint Jacobian (rank-revealing SVD): Gauss-Newton pullback onto the
// constraint set, then a reduced Newton step along the tangent space with
// the multiplier-weighted constraint curvature. The reduced dimension is
// tiny here (0..2), which sidesteps the near-singular full Lagrange system.
//
// Preconditions (throw std::invalid_argument): every |x0_i| > 1e-6 so the
// sign pattern is well-defined, and ||c(x0)||_inf <= 1e-8.
// Guarantees on Ok: constraints <= 1e-11, 1-norm <= input 1-norm + 1e-12,
// sign pattern unchanged, and |x_i - x0_i| <= 0.01 * max(|x0_i|, 0.01)
// (violations surface as SignFlip / NoConvergence, never silently).
PolishResult polish_with_constraints(const Eigen::VectorXd& x0,
                                     const ConstraintCallbacks& c);

// The benchmark wrapper: constraints are the [n/2] symmetry rows followed by
// the 16 order conditions for gamma.size() stages.
PolishResult polish_one_norm(const Eigen::VectorXd& gamma);

}  // namespace gradcont
