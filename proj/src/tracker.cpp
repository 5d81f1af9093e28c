#include "gradcont/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gradcont {

void TrackerConfig::validate() const {
  if (!(0.0 < h_min && h_min <= h0 && h0 <= h_max))
    throw std::invalid_argument("tracker config: need 0 < h_min <= h0 <= h_max");
  if (!(newton_tol > 0.0 && closure_tol > 0.0 && L_max > 0.0 &&
        min_closure_arclength >= 0.0))
    throw std::invalid_argument("tracker config: tolerances must be positive");
  if (target_iters < 1 || max_iters < 1 || max_consecutive_rejects < 1 ||
      ell_max < 1)
    throw std::invalid_argument("tracker config: counts must be >= 1");
}

Eigen::VectorXd tangent_at(const Eigen::MatrixXd& J,
                           const Eigen::VectorXd* prev) {
  const int ell = static_cast<int>(J.cols());
  if (J.rows() != ell - 1)
    throw std::invalid_argument("tangent_at: expected (ell-1) x ell Jacobian");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  if (smax <= 0.0 || smin <= 1e-10 * smax)
    throw SingularJacobian("rank-deficient curve Jacobian");
  Eigen::VectorXd t = svd.matrixV().col(ell - 1);
  if (prev) {
    if (t.dot(*prev) < 0.0) t = -t;
  } else {
    int imax = 0;
    t.cwiseAbs().maxCoeff(&imax);
    if (t[imax] < 0.0) t = -t;
  }
  return t;
}

namespace {

// Simplified Newton for H(u) = 0 on the hyperplane <u - anchor, t> = 0,
// started at z0 with the bordered matrix factored once at z0.
std::optional<CorrectResult> correct_anchored(const CurveMap& curve,
                                              const Eigen::VectorXd& anchor,
                                              const Eigen::VectorXd& z0,
                                              const Eigen::VectorXd& t,
                                              const TrackerConfig& cfg) {
  const int ell = curve.dim();
  Eigen::MatrixXd B(ell, ell);
  B.topRows(ell - 1) = curve.JH(z0);
  B.row(ell - 1) = t.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  qr.setThreshold(1e-12);
  if (qr.rank() < ell) return std::nullopt;

  Eigen::VectorXd z = z0;
  Eigen::VectorXd rhs(ell);
  double prev_res = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    rhs.head(ell - 1) = curve.H(z);
    rhs[ell - 1] = t.dot(z - anchor);
    const double res = rhs.cwiseAbs().maxCoeff();
    if (res <= cfg.newton_tol) return CorrectResult{z, it - 1};
    if (res > prev_res) {
      if (++growth >= 2) return std::nullopt;
    } else {
      growth = 0;
    }
    prev_res = res;
    z -= qr.solve(rhs);
    if (!z.allFinite()) return std::nullopt;
  }
  // One last residual check after the final update.
  rhs.head(ell - 1) = curve.H(z);
  rhs[ell - 1] = t.dot(z - anchor);
  if (rhs.cwiseAbs().maxCoeff() <= cfg.newton_tol)
    return CorrectResult{z, cfg.max_iters};
  return std::nullopt;
}

// Full Newton (Jacobian refreshed every iteration) onto the curve within the
// hyperplane <u - anchor, t> = 0; robust fallback for wide brackets where the
// frozen-Jacobian iteration stalls.
std::optional<CorrectResult> correct_full(const CurveMap& curve,
                                          const Eigen::VectorXd& anchor,
                                          const Eigen::VectorXd& t,
                                          const TrackerConfig& cfg) {
  const int ell = curve.dim();
  Eigen::VectorXd z = anchor;
  Eigen::MatrixXd B(ell, ell);
  Eigen::VectorXd rhs(ell);
  for (int it = 0; it < 40; ++it) {
    rhs.head(ell - 1) = curve.H(z);
    rhs[ell - 1] = t.dot(z - anchor);
    if (rhs.cwiseAbs().maxCoeff() <= cfg.newton_tol)
      return CorrectResult{z, it};
    B.topRows(ell - 1) = curve.JH(z);
    B.row(ell - 1) = t.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    qr.setThreshold(1e-12);
    if (qr.rank() < ell) return std::nullopt;
    z -= qr.solve(rhs);
    if (!z.allFinite()) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

std::optional<CorrectResult> correct(const CurveMap& curve,
                                     const Eigen::VectorXd& z_pred,
                                     const Eigen::VectorXd& t,
                                     const TrackerConfig& cfg) {
  return correct_anchored(curve, z_pred, z_pred, t, cfg);
}

std::optional<CorrectResult> correct(const StagedLagrangeSystem& sys, int k,
                                     const Eigen::VectorXd& z_pred,
                                     const Eigen::VectorXd& t,
                                     const TrackerConfig& cfg) {
  return correct(StageCurve(sys, k), z_pred, t, cfg);
}

std::optional<Eigen::VectorXd> locate_zero(const CurveMap& curve,
                                           const Eigen::VectorXd& z_a,
                                           const Eigen::VectorXd& z_b,
                                           const TrackerConfig& cfg) {
  Eigen::VectorXd za = z_a, zb = z_b;
  double wa = curve.w(za);
  double wb = curve.w(zb);
  if (wa == 0.0) return za;
  if (wb == 0.0) return zb;
  if ((wa < 0.0) == (wb < 0.0)) return std::nullopt;  // not a bracket

  for (int it = 0; it < 80; ++it) {
    Eigen::VectorXd dir = zb - za;
    const double gap = dir.norm();
    if (gap <= 1e-15) break;
    dir /= gap;
    const Eigen::VectorXd chord_mid = 0.5 * (za + zb);
    auto mid = correct(curve, chord_mid, dir, cfg);
    if (!mid) mid = correct_full(curve, chord_mid, dir, cfg);
    if (!mid) return std::nullopt;
    const double wm = curve.w(mid->z);
    if (std::abs(wm) <= cfg.newton_tol) return mid->z;
    if ((wm < 0.0) == (wa < 0.0)) {
      za = mid->z;
      wa = wm;
    } else {
      zb = mid->z;
      wb = wm;
    }
  }
  // Bracket collapsed without reaching the tolerance.
  return std::nullopt;
}

std::optional<Eigen::VectorXd> locate_zero(const StagedLagrangeSystem& sys,
                                           int k, const Eigen::VectorXd& z_a,
                                           const Eigen::VectorXd& z_b,
                                           const TrackerConfig& cfg) {
  return locate_zero(StageCurve(sys, k), z_a, z_b, cfg);
}

std::optional<CorrectResult> project_to_curve(const CurveMap& curve,
                                              const Eigen::VectorXd& z0,
                                              const TrackerConfig& cfg) {
  Eigen::VectorXd t;
  try {
    t = tangent_at(curve.JH(z0));
  } catch (const SingularJacobian&) {
    return std::nullopt;
  }
  return correct_full(curve, z0, t, cfg);
}

namespace {

void emit(const TraceSink& sink, double arclen, double step, int iters,
          double w, const char* event) {
  if (sink) sink(TraceRecord{arclen, step, iters, w, event});
}

}  // namespace

FollowResult follow(const CurveMap& curve, const Eigen::VectorXd& start,
                    int direction, const TrackerConfig& cfg,
                    const TraceSink& sink) {
  cfg.validate();
  if (direction != 1 && direction != -1)
    throw std::invalid_argument("follow: direction must be +1 or -1");
  if (curve.H(start).cwiseAbs().maxCoeff() > cfg.newton_tol)
    throw std::invalid_argument("follow: start point is not on the curve");

  FollowResult out;
  Eigen::VectorXd z = start;
  Eigen::VectorXd t = tangent_at(curve.JH(z)) * double(direction);
  double h = cfg.h0;
  double s = 0.0;
  int rejects = 0;
  double w_prev = curve.w(z);
  emit(sink, 0.0, 0.0, 0, w_prev, "start");

  auto finish = [&](TraceKind kind, double arclen) {
    out.termination = TraceEvent{kind, arclen, {}};
    out.final_z = z;
    out.final_tangent = t;
    return out;
  };

  while (true) {
    const Eigen::VectorXd z_pred = z + h * t;
    std::optional<CorrectResult> step;
    try {
      step = correct(curve, z_pred, t, cfg);
    } catch (const SingularJacobian&) {
      step.reset();
    }
    Eigen::VectorXd t_new;
    if (step) {
      try {
        t_new = tangent_at(curve.JH(step->z), &t);
      } catch (const SingularJacobian&) {
        step.reset();
      }
    }
    if (!step) {
      emit(sink, s, h, 0, w_prev, "reject");
      if (++rejects > cfg.max_consecutive_rejects)
        return finish(TraceKind::SingularStop, s);
      h = std::max(0.5 * h, cfg.h_min);
      continue;
    }

    const Eigen::VectorXd z_new = step->z;
    const double ds = (z_new - z).norm();
    const double w_new = curve.w(z_new);
    const double s_new = s + ds;

    // Sign change on the accepted segment: refine before committing.
    if (w_prev != 0.0 && w_new != 0.0 && (w_prev < 0.0) != (w_new < 0.0)) {
      auto zero = locate_zero(curve, z, z_new, cfg);
      if (!zero) {
        // Bracket lost: treat as a rejected step and retry shorter.
        emit(sink, s, h, step->iters, w_new, "reject");
        if (++rejects > cfg.max_consecutive_rejects)
          return finish(TraceKind::SingularStop, s);
        h = std::max(0.5 * h, cfg.h_min);
        continue;
      }
      const double zero_arc = s + (*zero - z).norm();
      if ((*zero - start).norm() <= cfg.closure_tol &&
          zero_arc >= cfg.min_closure_arclength) {
        // Arrived back at the start point.
        z = *zero;
        emit(sink, zero_arc, h, step->iters, 0.0, "closure");
        return finish(TraceKind::LoopClosure, zero_arc);
      }
      out.zeros.push_back(TraceEvent{TraceKind::ZeroFound, zero_arc, *zero});
      emit(sink, zero_arc, h, step->iters, curve.w(*zero), "zero");
      if (static_cast<int>(out.zeros.size()) >= cfg.ell_max) {
        z = z_new;
        t = t_new;
        return finish(TraceKind::CountLimit, s_new);
      }
    }

    // Loop closure: the accepted segment crosses the hyperplane through
    // start (orthogonal to the travel direction) while within reach of
    // start, and projecting into that hyperplane lands within closure_tol
    // of start. Requiring an actual crossing keeps departure and near
    // passes (which may still carry sign changes ahead) from ending the
    // traversal early.
    if (s_new >= cfg.min_closure_arclength &&
        (z_new - start).norm() <= std::max(2.0 * h, cfg.closure_tol) &&
        t_new.dot(z - start) < 0.0 && t_new.dot(z_new - start) >= 0.0) {
      auto back = correct_anchored(curve, start, z_new, t_new, cfg);
      if (back && (back->z - start).norm() <= cfg.closure_tol) {
        const double arc = s + (back->z - z).norm();
        z = back->z;
        t = t_new;
        emit(sink, arc, ds, back->iters, w_new, "closure");
        return finish(TraceKind::LoopClosure, arc);
      }
    }

    z = z_new;
    t = t_new;
    w_prev = w_new;
    s = s_new;
    rejects = 0;
    emit(sink, s, ds, step->iters, w_new, "step");

    if (s > cfg.L_max) {
      emit(sink, s, ds, step->iters, w_prev, "length");
      return finish(TraceKind::LengthLimit, s);
    }

    const double ratio = double(cfg.target_iters) / double(std::max(step->iters, 1));
    h = std::clamp(h * std::clamp(ratio, 0.5, 2.0), cfg.h_min, cfg.h_max);
  }
}

FollowResult follow(const StagedLagrangeSystem& sys, int k,
                    const Eigen::VectorXd& start, int direction,
                    const TrackerConfig& cfg, const TraceSink& sink) {
  return follow(StageCurve(sys, k), start, direction, cfg, sink);
}

}  // namespace gradcont
