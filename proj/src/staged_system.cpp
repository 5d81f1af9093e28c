#include "gradcont/staged_system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "gradcont/order_conditions.hpp"

namespace gradcont {

AugPoint::AugPoint(const Eigen::VectorXd& gamma, const Eigen::VectorXd& lambda)
    : z(gamma.size() + lambda.size()), n(static_cast<int>(gamma.size()) - 1) {
  z << gamma, lambda;
}

AugPoint AugPoint::from_vector(Eigen::VectorXd v, int n_) {
  if (v.size() < n_ + 2) throw std::invalid_argument("AugPoint: vector too short");
  AugPoint p;
  p.z = std::move(v);
  p.n = n_;
  return p;
}

Eigen::VectorXd AugPoint::dehomogenized() const {
  return z.segment(1, n) / z[0];
}

namespace {

class GenericBackend final : public ConstraintBackend {
 public:
  explicit GenericBackend(PolySystem sys) : sys_(std::move(sys)) {}

  int count() const override { return sys_.size(); }
  int nvars() const override { return sys_.nvars(); }

  void values(const Eigen::VectorXd& gamma,
              Eigen::Ref<Eigen::VectorXd> out) const override {
    for (int j = 0; j < sys_.size(); ++j) out[j] = sys_[j].eval(gamma);
  }

  double value_one(int j, const Eigen::VectorXd& gamma) const override {
    return sys_[j - 1].eval(gamma);
  }

  void jacobian(const Eigen::VectorXd& gamma,
                Eigen::Ref<Eigen::MatrixXd> out) const override {
    out.setZero();
    Eigen::VectorXd row(sys_.nvars());
    for (int j = 0; j < sys_.size(); ++j) {
      row.setZero();
      sys_[j].grad_acc(gamma, 1.0, row);
      out.row(j) = row;
    }
  }

  void weighted_hessian_acc(const Eigen::VectorXd& gamma,
                            const Eigen::VectorXd& w,
                            Eigen::Ref<Eigen::MatrixXd> out) const override {
    for (int j = 0; j < sys_.size(); ++j)
      if (w[j] != 0.0) sys_[j].hess_acc(gamma, w[j], out);
  }

  PolySystem materialize() const override { return sys_; }

 private:
  PolySystem sys_;
};

// Benchmark constraints evaluated from their prefix-sum structure; only the
// linear condition involves gamma_0 (as -gamma_0 in place of the constant).
class BenchmarkBackend final : public ConstraintBackend {
 public:
  BenchmarkBackend(int n, double R) : n_(n), R_(R) {}

  int count() const override { return n_ / 2 + 17; }  // m + 1
  int nvars() const override { return n_ + 1; }

  void values(const Eigen::VectorXd& gamma,
              Eigen::Ref<Eigen::VectorXd> out) const override {
    const auto g = gamma.tail(n_);
    out[0] = g.squaredNorm() - R_ * R_;
    const int h = n_ / 2;
    for (int s = 1; s <= h; ++s) out[s] = gamma[s] - gamma[n_ + 1 - s];
    Eigen::VectorXd vals = order_condition_values(g);
    vals[0] += 1.0 - gamma[0];  // homogenized constant
    out.tail(kNumOrderConditions) = vals;
  }

  double value_one(int j, const Eigen::VectorXd& gamma) const override {
    const int h = n_ / 2;
    if (j == 1) return gamma.tail(n_).squaredNorm() - R_ * R_;
    if (j <= h + 1) return gamma[j - 1] - gamma[n_ + 2 - j];
    const int c = j - h - 2;
    Eigen::VectorXd vals = order_condition_values(gamma.tail(n_));
    return vals[c] + (c == 0 ? 1.0 - gamma[0] : 0.0);
  }

  void jacobian(const Eigen::VectorXd& gamma,
                Eigen::Ref<Eigen::MatrixXd> out) const override {
    out.setZero();
    const int h = n_ / 2;
    out.row(0).tail(n_) = 2.0 * gamma.tail(n_);
    for (int s = 1; s <= h; ++s) {
      out(s, s) = 1.0;
      out(s, n_ + 1 - s) = -1.0;
    }
    Eigen::VectorXd grad(n_);
    for (int c = 0; c < kNumOrderConditions; ++c) {
      order_condition_gradient(c, gamma.tail(n_), grad);
      out.row(h + 1 + c).tail(n_) = grad;
    }
    out(h + 1, 0) = -1.0;
  }

  void weighted_hessian_acc(const Eigen::VectorXd& gamma,
                            const Eigen::VectorXd& w,
                            Eigen::Ref<Eigen::MatrixXd> out) const override {
    if (w[0] != 0.0)
      for (int i = 1; i <= n_; ++i) out(i, i) += 2.0 * w[0];
    const Eigen::VectorXd wc = w.tail(kNumOrderConditions);
    if ((wc.array() != 0.0).any()) {
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n_, n_);
      order_condition_weighted_hessian_acc(gamma.tail(n_), wc, block);
      out.bottomRightCorner(n_, n_) += block;
    }
  }

  PolySystem materialize() const override {
    PolySystem sys(n_ + 1);
    Polynomial sphere(n_ + 1);
    std::vector<int> e(n_ + 1, 0);
    for (int i = 1; i <= n_; ++i) {
      e.assign(n_ + 1, 0);
      e[i] = 2;
      sphere.push_term(e, 1.0);
    }
    e.assign(n_ + 1, 0);
    sphere.push_term(e, -R_ * R_);
    sphere.canonicalize();
    sys.add(std::move(sphere));
    for (int j = 1; j <= n_ / 2; ++j)
      sys.add(symmetry_polynomial(n_, j).homogenized(0));
    PolySystem conds = order_condition_system(n_);
    for (int c = 0; c < kNumOrderConditions; ++c)
      sys.add(conds[n_ / 2 + c].homogenized(0));
    return sys;
  }

 private:
  int n_;
  double R_;
};

}  // namespace

StagedLagrangeSystem::StagedLagrangeSystem(
    std::shared_ptr<const ConstraintBackend> backend, int n, int r, double R,
    double R_lambda, std::vector<int> stage_order)
    : backend_(std::move(backend)),
      n_(n),
      m_(backend_->count() - 1),
      r_(r),
      R_(R),
      R_lambda_(R_lambda),
      stage_order_(std::move(stage_order)) {
  if (backend_->nvars() != n_ + 1)
    throw std::invalid_argument("staged system: backend/nvars mismatch");
  if (r_ < 0 || r_ > m_)
    throw std::invalid_argument("staged system: bad release count");
}

double StagedLagrangeSystem::objective(const Eigen::VectorXd& gamma) const {
  return -gamma[0] * gamma[0];
}

Polynomial StagedLagrangeSystem::objective_poly() const {
  std::vector<int> e(n_ + 1, 0);
  e[0] = 2;
  return Polynomial::monomial(n_ + 1, e, -1.0);
}

int StagedLagrangeSystem::swap_row(int k) const {
  return n_ + m_ - r_ + k + 2;
}

void StagedLagrangeSystem::check_stage(int k) const {
  if (k < 0 || k > r_)
    throw std::invalid_argument("staged system: stage out of range");
}

Eigen::VectorXd StagedLagrangeSystem::eval_F(int k, const Eigen::VectorXd& z) const {
  check_stage(k);
  if (z.size() != ell()) throw std::invalid_argument("eval_F: bad point size");
  const auto gamma = z.head(n_ + 1);
  const auto lambda = z.tail(m_ + 2);
  Eigen::VectorXd F(ell());
  F[0] = lambda.squaredNorm() - R_lambda_ * R_lambda_;

  Eigen::MatrixXd J(m_ + 1, n_ + 1);
  backend_->jacobian(gamma, J);
  Eigen::VectorXd grad_rows = J.transpose() * lambda.tail(m_ + 1);
  grad_rows[0] += lambda[0] * (-2.0 * gamma[0]);
  F.segment(1, n_ + 1) = grad_rows;

  const int na = m_ - r_ + k + 1;
  Eigen::VectorXd v(m_ + 1);
  backend_->values(gamma, v);
  F.segment(n_ + 2, na) = v.head(na);
  int row = n_ + 2 + na;
  for (int j = na + 1; j <= m_ + 1; ++j) F[row++] = lambda[j];
  return F;
}

Eigen::MatrixXd StagedLagrangeSystem::jac_F(int k, const Eigen::VectorXd& z) const {
  check_stage(k);
  if (z.size() != ell()) throw std::invalid_argument("jac_F: bad point size");
  const auto gamma = z.head(n_ + 1);
  const auto lambda = z.tail(m_ + 2);
  const int N = n_ + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ell(), ell());

  for (int j = 0; j <= m_ + 1; ++j) A(0, N + j) = 2.0 * lambda[j];

  Eigen::MatrixXd J(m_ + 1, N);
  backend_->jacobian(gamma, J);
  auto wblock = A.block(1, 0, N, N);
  backend_->weighted_hessian_acc(gamma, lambda.tail(m_ + 1), wblock);
  A(1, 0) += -2.0 * lambda[0];
  A(1, N) = -2.0 * gamma[0];  // d/d lambda_0 of the objective term
  A.block(1, N + 1, N, m_ + 1) = J.transpose();

  const int na = m_ - r_ + k + 1;
  A.block(N + 1, 0, na, N) = J.topRows(na);
  int row = N + 1 + na;
  for (int j = na + 1; j <= m_ + 1; ++j) A(row++, N + j) = 1.0;
  return A;
}

Eigen::VectorXd StagedLagrangeSystem::eval_H(int k, const Eigen::VectorXd& z) const {
  if (k < 1 || k > r_)
    throw std::invalid_argument("staged system: stage out of range");
  if (z.size() != ell()) throw std::invalid_argument("eval_H: bad point size");
  const auto gamma = z.head(n_ + 1);
  const auto lambda = z.tail(m_ + 2);
  Eigen::VectorXd H(ell() - 1);
  H[0] = lambda.squaredNorm() - R_lambda_ * R_lambda_;

  Eigen::MatrixXd J(m_ + 1, n_ + 1);
  backend_->jacobian(gamma, J);
  Eigen::VectorXd grad_rows = J.transpose() * lambda.tail(m_ + 1);
  grad_rows[0] += lambda[0] * (-2.0 * gamma[0]);
  H.segment(1, n_ + 1) = grad_rows;

  const int nc = m_ - r_ + k;  // constraints common to stages k-1 and k
  Eigen::VectorXd v(m_ + 1);
  backend_->values(gamma, v);
  H.segment(n_ + 2, nc) = v.head(nc);
  int row = n_ + 2 + nc;
  for (int j = nc + 2; j <= m_ + 1; ++j) H[row++] = lambda[j];
  return H;
}

double StagedLagrangeSystem::eval_w(int k, const Eigen::VectorXd& z) const {
  if (k < 1 || k > r_)
    throw std::invalid_argument("staged system: stage out of range");
  return backend_->value_one(m_ - r_ + k + 1, z.head(n_ + 1));
}

Eigen::MatrixXd StagedLagrangeSystem::jac_H(int k, const Eigen::VectorXd& z) const {
  if (k < 1 || k > r_)
    throw std::invalid_argument("staged system: stage out of range");
  if (z.size() != ell()) throw std::invalid_argument("jac_H: bad point size");
  const auto gamma = z.head(n_ + 1);
  const auto lambda = z.tail(m_ + 2);
  const int N = n_ + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ell() - 1, ell());

  for (int j = 0; j <= m_ + 1; ++j) A(0, N + j) = 2.0 * lambda[j];

  Eigen::MatrixXd J(m_ + 1, N);
  backend_->jacobian(gamma, J);
  auto wblock = A.block(1, 0, N, N);
  backend_->weighted_hessian_acc(gamma, lambda.tail(m_ + 1), wblock);
  A(1, 0) += -2.0 * lambda[0];
  A(1, N) = -2.0 * gamma[0];
  A.block(1, N + 1, N, m_ + 1) = J.transpose();

  const int nc = m_ - r_ + k;
  A.block(N + 1, 0, nc, N) = J.topRows(nc);
  int row = N + 1 + nc;
  for (int j = nc + 2; j <= m_ + 1; ++j) A(row++, N + j) = 1.0;
  return A;
}

const PolySystem& StagedLagrangeSystem::constraints_system() const {
  if (!materialized_)
    materialized_ = std::make_unique<PolySystem>(backend_->materialize());
  return *materialized_;
}

double StagedLagrangeSystem::merit(const Eigen::VectorXd& z) const {
  return R_ / std::abs(z[0]);
}

StagedLagrangeSystem build_staged_system(const PolySystem& order_conds,
                                         const PolySystem& sym_conds, int r,
                                         double R, double R_lambda,
                                         std::vector<int> stage_order) {
  const int n = order_conds.nvars();
  if (sym_conds.size() > 0 && sym_conds.nvars() != n)
    throw std::invalid_argument("build_staged_system: nvars mismatch");
  if (r < 0 || r > order_conds.size())
    throw std::invalid_argument("build_staged_system: bad release count");
  if (stage_order.empty()) {
    stage_order.resize(r);
    for (int k = 0; k < r; ++k) stage_order[k] = k;
  }
  {
    std::vector<int> sorted = stage_order;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < r; ++k)
      if (sorted[k] != k)
        throw std::invalid_argument("build_staged_system: stage_order must "
                                    "permute the released constraints");
  }

  PolySystem stack(n + 1);
  Polynomial sphere(n + 1);
  std::vector<int> e(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    e.assign(n + 1, 0);
    e[i] = 2;
    sphere.push_term(e, 1.0);
  }
  e.assign(n + 1, 0);
  sphere.push_term(e, -R * R);
  sphere.canonicalize();
  stack.add(std::move(sphere));
  for (int j = 0; j < sym_conds.size(); ++j)
    stack.add(sym_conds[j].homogenized(0));
  const int keep = order_conds.size() - r;
  for (int j = 0; j < keep; ++j) stack.add(order_conds[j].homogenized(0));
  for (int k = 0; k < r; ++k)
    stack.add(order_conds[keep + stage_order[k]].homogenized(0));

  auto backend = std::make_shared<GenericBackend>(std::move(stack));
  return StagedLagrangeSystem(std::move(backend), n, r, R, R_lambda,
                              std::move(stage_order));
}

StagedLagrangeSystem build_benchmark_system(int n, double R, double R_lambda) {
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("build_benchmark_system: n must be odd >= 3");
  auto backend = std::make_shared<BenchmarkBackend>(n, R);
  const int r = 11;
  std::vector<int> stage_order(r);
  for (int k = 0; k < r; ++k) stage_order[k] = k;
  return StagedLagrangeSystem(std::move(backend), n, r, R, R_lambda,
                              std::move(stage_order));
}

}  // namespace gradcont
