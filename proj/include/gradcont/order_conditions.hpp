#pragma once

#include <array>

#include <Eigen/Dense>

#include "gradcont/polynomial.hpp"

namespace gradcont {

// a_1 + ... + a_{k-1} + a_k/2 with 1-based k (the last summation term is
// halved). Throws std::invalid_argument for k outside [1, len(a)].
double primed_partial_sum(const Eigen::VectorXd& a, int k);

// The 16 order conditions for 10th-order time-symmetric compositions, in a
// fixed listing order. Index layout:
//   0      order2            sum g_k - 1                          deg 1
//   1..4   order4_1..4       sum g_k^(2i+1), i = 1..4             deg 3,5,7,9
//   5      order6            sum g_k^3 s1_k^2                     deg 5
//   6..8   order8_1..3       g^5 s1^2; g^3 s1 s3; g^3 s1^4        deg 7
//   9..15  order10_1..7      g^7 s1^2; g^5 s1 s3; g^3 s1 s5;
//                            g^3 s1^2 u; g^5 s1^4; g^3 s1^3 s3;
//                            g^3 s1^6                             deg 9
// where s_q(k) is the primed partial sum of g^q and u(k) the primed partial
// sum of g_m^3 s1(m).
inline constexpr int kNumOrderConditions = 16;

struct OrderConditionInfo {
  const char* label;
  int degree;
};

const std::array<OrderConditionInfo, kNumOrderConditions>&
order_condition_info();

// Values of all 16 conditions at g (x-space coordinates gamma_1..gamma_n).
Eigen::VectorXd order_condition_values(const Eigen::VectorXd& g);

// Exact gradient of condition c at g; out is overwritten (length n).
void order_condition_gradient(int c, const Eigen::VectorXd& g,
                              Eigen::Ref<Eigen::VectorXd> out);

// out += sum_c w[c] * Hessian(condition c) at g; out is n x n.
void order_condition_weighted_hessian_acc(const Eigen::VectorXd& g,
                                          const Eigen::VectorXd& w,
                                          Eigen::Ref<Eigen::MatrixXd> out);

// Sparse expansion of condition c over n variables. Conditions 5..15 expand
// through incrementally maintained primed-prefix-power tables; term counts
// grow steeply with n (millions at n = 31).
Polynomial expanded_order_condition(int c, int n);

// gamma_j - gamma_{n-j+1} over n variables, 1 <= j <= n/2.
Polynomial symmetry_polynomial(int n, int j);

// [n/2] symmetry polynomials followed by the 16 order conditions, expanded.
PolySystem order_condition_system(int n);

}  // namespace gradcont
