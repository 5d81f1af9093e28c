#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gradcont/staged_system.hpp"

namespace gradcont {

struct TrackerConfig {
  double h0 = 1e-2;     // initial step (arclength units)
  double h_min = 1e-6;
  double h_max = 1.0;
  double newton_tol = 1e-10;
  int target_iters = 4;
  int max_iters = 12;
  int max_consecutive_rejects = 8;
  double L_max = 200.0;  // max pseudo-arclength per direction
  int ell_max = 10;      // max zeros per direction
  double closure_tol = 1e-6;
  double min_closure_arclength = 0.1;  // 10 * default h0

  void validate() const;  // throws std::invalid_argument
};

// A 1-dimensional implicitly defined curve: H : R^ell -> R^{ell-1} with a
// scalar observable w whose sign changes are the objects of interest.
class CurveMap {
 public:
  virtual ~CurveMap() = default;
  virtual int dim() const = 0;  // ell
  virtual Eigen::VectorXd H(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::MatrixXd JH(const Eigen::VectorXd& z) const = 0;
  virtual double w(const Eigen::VectorXd& z) const = 0;
};

// Stage-k curve H_k = 0 of a staged Lagrange system, w = newly activated
// constraint.
class StageCurve final : public CurveMap {
 public:
  StageCurve(const StagedLagrangeSystem& sys, int k) : sys_(&sys), k_(k) {}
  int dim() const override { return sys_->ell(); }
  Eigen::VectorXd H(const Eigen::VectorXd& z) const override {
    return sys_->eval_H(k_, z);
  }
  Eigen::MatrixXd JH(const Eigen::VectorXd& z) const override {
    return sys_->jac_H(k_, z);
  }
  double w(const Eigen::VectorXd& z) const override {
    return sys_->eval_w(k_, z);
  }

 private:
  const StagedLagrangeSystem* sys_;
  int k_;
};

// Test/utility adapter from plain callables.
class FunctionCurve final : public CurveMap {
 public:
  FunctionCurve(int dim, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> h,
                std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jh,
                std::function<double(const Eigen::VectorXd&)> w)
      : dim_(dim), h_(std::move(h)), jh_(std::move(jh)), w_(std::move(w)) {}
  int dim() const override { return dim_; }
  Eigen::VectorXd H(const Eigen::VectorXd& z) const override { return h_(z); }
  Eigen::MatrixXd JH(const Eigen::VectorXd& z) const override { return jh_(z); }
  double w(const Eigen::VectorXd& z) const override { return w_(z); }

 private:
  int dim_;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> h_;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jh_;
  std::function<double(const Eigen::VectorXd&)> w_;
};

class SingularJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TraceKind { ZeroFound, LoopClosure, SingularStop, LengthLimit, CountLimit };

struct TraceEvent {
  TraceKind kind;
  double arclen = 0.0;
  Eigen::VectorXd z;  // populated for ZeroFound
};

// Per-step trace record (CSV sink columns).
struct TraceRecord {
  double arclen;
  double step;
  int corrector_iters;
  double w_value;
  const char* event;
};
using TraceSink = std::function<void(const TraceRecord&)>;

struct FollowResult {
  std::vector<TraceEvent> zeros;  // ZeroFound events in curve order
  TraceEvent termination;         // LoopClosure/SingularStop/LengthLimit/CountLimit
  Eigen::VectorXd final_z;        // last accepted curve point
  Eigen::VectorXd final_tangent;  // unit tangent at final_z (travel direction)
};

// Unit kernel vector of the (ell-1) x ell Jacobian.  With `prev`, the sign is
// chosen so <t, prev> >= 0; otherwise the sign is fixed deterministically
// (largest-magnitude component positive).  Throws SingularJacobian when the
// smallest singular value is below 1e-10 * largest.
Eigen::VectorXd tangent_at(const Eigen::MatrixXd& J,
                           const Eigen::VectorXd* prev = nullptr);

struct CorrectResult {
  Eigen::VectorXd z;
  int iters = 0;
};

// Simplified Newton projection onto the curve within the hyperplane through
// z_pred orthogonal to t; the bordered matrix [JH(z_pred); t^T] is factored
// once.  Empty optional = no convergence.
std::optional<CorrectResult> correct(const CurveMap& curve,
                                     const Eigen::VectorXd& z_pred,
                                     const Eigen::VectorXd& t,
                                     const TrackerConfig& cfg);
std::optional<CorrectResult> correct(const StagedLagrangeSystem& sys, int k,
                                     const Eigen::VectorXd& z_pred,
                                     const Eigen::VectorXd& t,
                                     const TrackerConfig& cfg);

// Full-Newton projection (Jacobian refreshed every iteration) onto the curve
// within the hyperplane through z0 orthogonal to the curve tangent at z0.
// Used to clean up start points whose residual exceeds newton_tol before a
// traversal.  Empty optional = no convergence or singular tangent.
std::optional<CorrectResult> project_to_curve(const CurveMap& curve,
                                              const Eigen::VectorXd& z0,
                                              const TrackerConfig& cfg);

// Bisection on arclength between two on-curve points with w of opposite
// signs, re-projecting each midpoint onto the curve.  Empty optional = the
// bracket was lost (caller shrinks the step and retries).
std::optional<Eigen::VectorXd> locate_zero(const CurveMap& curve,
                                           const Eigen::VectorXd& z_a,
                                           const Eigen::VectorXd& z_b,
                                           const TrackerConfig& cfg);
std::optional<Eigen::VectorXd> locate_zero(const StagedLagrangeSystem& sys,
                                           int k, const Eigen::VectorXd& z_a,
                                           const Eigen::VectorXd& z_b,
                                           const TrackerConfig& cfg);

// Predictor-corrector traversal of the curve through `start` (which must
// satisfy ||H||_inf <= newton_tol).  direction = +1/-1 picks the initial
// orientation relative to the deterministic tangent sign.  Emits every
// located sign change of w as a ZeroFound event and finishes with exactly one
// terminal event.
FollowResult follow(const CurveMap& curve, const Eigen::VectorXd& start,
                    int direction, const TrackerConfig& cfg,
                    const TraceSink& sink = {});
FollowResult follow(const StagedLagrangeSystem& sys, int k,
                    const Eigen::VectorXd& start, int direction,
                    const TrackerConfig& cfg, const TraceSink& sink = {});

}  // namespace gradcont
