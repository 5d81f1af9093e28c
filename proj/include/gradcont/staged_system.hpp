#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "gradcont/polynomial.hpp"

namespace gradcont {

// A point z = (gamma_0..gamma_n, lambda_0..lambda_{m+1}) of the augmented
// Lagrange system, stored flat.
struct AugPoint {
  Eigen::VectorXd z;
  int n = 0;  // gamma has n+1 entries; the rest of z is lambda

  AugPoint() = default;
  AugPoint(const Eigen::VectorXd& gamma, const Eigen::VectorXd& lambda);
  static AugPoint from_vector(Eigen::VectorXd v, int n_);

  int ell() const { return static_cast<int>(z.size()); }
  auto gamma() const { return z.head(n + 1); }
  auto lambda() const { return z.tail(z.size() - (n + 1)); }
  bool finite() const { return z.allFinite(); }

  // gamma_{1:n} / gamma_0.
  Eigen::VectorXd dehomogenized() const;
};

// Shared evaluation interface for the constraint stack P_1..P_{m+1} over the
// variables gamma_0..gamma_n.  One implementation wraps an explicit
// PolySystem; a structured implementation evaluates the benchmark constraints
// without materializing their expanded form.
class ConstraintBackend {
 public:
  virtual ~ConstraintBackend() = default;
  virtual int count() const = 0;    // m + 1
  virtual int nvars() const = 0;    // n + 1
  // out[j-1] = P_j(gamma), j = 1..m+1.
  virtual void values(const Eigen::VectorXd& gamma,
                      Eigen::Ref<Eigen::VectorXd> out) const = 0;
  virtual double value_one(int j, const Eigen::VectorXd& gamma) const = 0;
  // out.row(j-1) = grad P_j.
  virtual void jacobian(const Eigen::VectorXd& gamma,
                        Eigen::Ref<Eigen::MatrixXd> out) const = 0;
  // out += sum_j w[j-1] * Hess P_j.
  virtual void weighted_hessian_acc(const Eigen::VectorXd& gamma,
                                    const Eigen::VectorXd& w,
                                    Eigen::Ref<Eigen::MatrixXd> out) const = 0;
  // Explicit polynomial form (may be expensive to materialize).
  virtual PolySystem materialize() const = 0;
};

// The sequence of maps F_0..F_r together with the H_k / w_k extraction.
//
// Component layout of F_k (0-based rows, ell = n + m + 3 total):
//   [0]                 sum_j lambda_j^2 - R_lambda^2
//   [1 .. n+1]          lambda_0 * grad g + sum_{j=1..m+1} lambda_j * grad P_j
//   [n+2 .. n+m-r+k+2]  P_1 .. P_{m-r+k+1}
//   [rest]              lambda_{m-r+k+2} .. lambda_{m+1}
// F_k and F_{k-1} differ exactly in row n+m-r+k+2 (P_{m-r+k+1} vs the
// multiplier lambda_{m-r+k+1}); H_k drops that row, w_k is P_{m-r+k+1}.
class StagedLagrangeSystem {
 public:
  StagedLagrangeSystem(std::shared_ptr<const ConstraintBackend> backend, int n,
                       int r, double R, double R_lambda,
                       std::vector<int> stage_order);

  int n() const { return n_; }
  int m() const { return m_; }
  int r() const { return r_; }
  int ell() const { return n_ + m_ + 3; }
  double R() const { return R_; }
  double R_lambda() const { return R_lambda_; }
  // Entry k-1 is the 0-based index into the originally supplied released
  // tail of the constraint activated at stage k.  The stack itself is
  // reordered at construction, so the activated constraint is always
  // P_{m-r+k+1}.
  const std::vector<int>& stage_order() const { return stage_order_; }

  // Objective g = -gamma_0^2 and its calculus.
  double objective(const Eigen::VectorXd& gamma) const;
  Polynomial objective_poly() const;

  // Row index of the single component where F_k and F_{k-1} differ.
  int swap_row(int k) const;
  // 1-based constraint index activated at stage k.
  int released_constraint(int k) const { return m_ - r_ + k + 1; }

  Eigen::VectorXd eval_F(int k, const Eigen::VectorXd& z) const;
  Eigen::MatrixXd jac_F(int k, const Eigen::VectorXd& z) const;
  Eigen::VectorXd eval_H(int k, const Eigen::VectorXd& z) const;
  double eval_w(int k, const Eigen::VectorXd& z) const;
  Eigen::MatrixXd jac_H(int k, const Eigen::VectorXd& z) const;

  Eigen::VectorXd eval_F(int k, const AugPoint& p) const { return eval_F(k, p.z); }
  Eigen::VectorXd eval_H(int k, const AugPoint& p) const { return eval_H(k, p.z); }
  double eval_w(int k, const AugPoint& p) const { return eval_w(k, p.z); }
  Eigen::MatrixXd jac_H(int k, const AugPoint& p) const { return jac_H(k, p.z); }
  Eigen::MatrixXd jac_F(int k, const AugPoint& p) const { return jac_F(k, p.z); }

  const ConstraintBackend& backend() const { return *backend_; }
  // Explicit P_1..P_{m+1}; materialized on first use and cached.
  const PolySystem& constraints_system() const;

  // Merit of a solution: R / |gamma_0| (the Euclidean norm of the
  // de-homogenized point when the sphere constraint holds).
  double merit(const Eigen::VectorXd& z) const;

 private:
  void check_stage(int k) const;

  std::shared_ptr<const ConstraintBackend> backend_;
  int n_;
  int m_;
  int r_;
  double R_;
  double R_lambda_;
  std::vector<int> stage_order_;
  mutable std::unique_ptr<PolySystem> materialized_;
};

// Assembles the staged system from inhomogeneous constraints in n variables:
// sphere constraint first, then `sym_conds`, then `order_conds` (each
// homogenized with the extra leading variable gamma_0); the final r entries
// of `order_conds` are the released constraints.  `stage_order`, when given,
// lists for each stage k = 1..r which of those r constraints activates
// (0-based index into the released tail); the stack is reordered accordingly
// at construction.
StagedLagrangeSystem build_staged_system(const PolySystem& order_conds,
                                         const PolySystem& sym_conds, int r,
                                         double R, double R_lambda,
                                         std::vector<int> stage_order = {});

// The composition-coefficient benchmark (n odd): [n/2] symmetry relations,
// 16 order conditions, r = 11, structured evaluation backend.
StagedLagrangeSystem build_benchmark_system(int n, double R = 4.0,
                                            double R_lambda = 1.0);

}  // namespace gradcont
