#include "gradcont/order_conditions.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace gradcont {

double primed_partial_sum(const Eigen::VectorXd& a, int k) {
  if (k < 1 || k > a.size())
    throw std::invalid_argument("primed_partial_sum: k out of range");
  double s = 0.0;
  for (int l = 0; l < k - 1; ++l) s += a[l];
  return s + 0.5 * a[k - 1];
}

namespace {

// First-order forward-mode scalar; enough to differentiate the hand-written
// gradients once more (Hessian columns).
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design
  Dual(double value, double deriv) : v(value), d(deriv) {}
};
inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.v * b.d + a.d * b.v};
}
inline Dual& operator+=(Dual& a, Dual b) {
  a.v += b.v;
  a.d += b.d;
  return a;
}

template <class T>
T pow_i(T x, int e) {
  T r(1.0);
  while (e > 0) {
    if (e & 1) r = r * x;
    x = x * x;
    e >>= 1;
  }
  return r;
}

// Family parameters: condition = sum_k g_k^p * s1(k)^a * B(k)^b with
// B the primed prefix of g^qb.  Condition 12 (order10_4) carries the nested
// factor u(k) and is handled separately.
struct Family {
  int p;
  int a;
  int b;
  int qb;
};

constexpr int kNested = 12;

const Family kFamily[kNumOrderConditions] = {
    {1, 0, 0, 0},  // order2 (affine; value handled specially)
    {3, 0, 0, 0},  {5, 0, 0, 0}, {7, 0, 0, 0}, {9, 0, 0, 0},
    {3, 2, 0, 0},                                            // order6
    {5, 2, 0, 0},  {3, 1, 1, 3}, {3, 4, 0, 0},               // order8
    {7, 2, 0, 0},  {5, 1, 1, 3}, {3, 1, 1, 5}, {3, 2, 0, 0}, // order10_1..4
    {5, 4, 0, 0},  {3, 3, 1, 3}, {3, 6, 0, 0},               // order10_5..7
};

// Primed prefixes of g, g^3, g^5 and of g^3*s1.
template <class T>
void primed_prefixes(const T* g, int n, std::vector<T>& s1, std::vector<T>& s3,
                     std::vector<T>& s5, std::vector<T>& u) {
  s1.assign(n, T(0.0));
  s3.assign(n, T(0.0));
  s5.assign(n, T(0.0));
  u.assign(n, T(0.0));
  T c1(0.0), c3(0.0), c5(0.0), cu(0.0);
  for (int k = 0; k < n; ++k) {
    const T gk = g[k];
    const T g3 = gk * gk * gk;
    const T g5 = g3 * gk * gk;
    s1[k] = c1 + 0.5 * gk;
    s3[k] = c3 + 0.5 * g3;
    s5[k] = c5 + 0.5 * g5;
    const T tu = g3 * s1[k];
    u[k] = cu + 0.5 * tu;
    c1 += gk;
    c3 += g3;
    c5 += g5;
    cu += tu;
  }
}

inline Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }

// out[i] += sum_c w[c] * d(condition c)/d(g_i).  Exact.
template <class T>
void weighted_gradient_acc(const double* w, const T* g, int n, T* out) {
  static thread_local std::vector<T> s1, s3, s5, u, ra, rb, q1, q2, rt;
  primed_prefixes(g, n, s1, s3, s5, u);

  for (int c = 0; c < kNumOrderConditions; ++c) {
    const double wc = w[c];
    if (wc == 0.0) continue;
    if (c == 0) {
      for (int i = 0; i < n; ++i) out[i] += T(wc);
      continue;
    }
    if (c == kNested) {
      // c = sum_k g^3 s1^2 u.
      rt.assign(n, T(0.0));
      q1.assign(n, T(0.0));
      q2.assign(n, T(0.0));
      T accT(0.0), accQ1(0.0), accQ2(0.0);
      for (int i = n - 1; i >= 0; --i) {
        const T g3 = g[i] * g[i] * g[i];
        const T base = g3 * s1[i] * s1[i];
        const T tt = g3 * s1[i] * u[i];
        rt[i] = accT + 0.5 * tt;
        accT += tt;
        q1[i] = accQ1;
        accQ1 += base;
        q2[i] = accQ2;
        accQ2 += base * s3[i];
      }
      for (int i = 0; i < n; ++i) {
        const T g2 = g[i] * g[i];
        const T g3 = g2 * g[i];
        const T val = 3.0 * (g2 * s1[i] * s1[i] * u[i]) + 2.0 * rt[i] +
                      (3.0 * (g2 * s1[i]) - s3[i]) * q1[i] + q2[i] +
                      g3 * s1[i] * s1[i] * (1.5 * (g2 * s1[i]) + 0.25 * g3);
        out[i] += wc * val;
      }
      continue;
    }
    const Family f = kFamily[c];
    const std::vector<T>* B = nullptr;
    if (f.b) B = (f.qb == 3) ? &s3 : &s5;
    if (f.a == 0 && f.b == 0) {
      for (int i = 0; i < n; ++i)
        out[i] += wc * (double(f.p) * pow_i(g[i], f.p - 1));
      continue;
    }
    // Primed suffixes of T_A = g^p s1^(a-1) B^b and T_B = g^p s1^a.
    if (f.a) ra.assign(n, T(0.0));
    if (f.b) rb.assign(n, T(0.0));
    T accA(0.0), accB(0.0);
    for (int i = n - 1; i >= 0; --i) {
      const T gp = pow_i(g[i], f.p);
      if (f.a) {
        T ta = gp * pow_i(s1[i], f.a - 1);
        if (f.b) ta = ta * (*B)[i];
        ra[i] = accA + 0.5 * ta;
        accA += ta;
      }
      if (f.b) {
        const T tb = gp * pow_i(s1[i], f.a);
        rb[i] = accB + 0.5 * tb;
        accB += tb;
      }
    }
    for (int i = 0; i < n; ++i) {
      T val = double(f.p) * pow_i(g[i], f.p - 1) * pow_i(s1[i], f.a);
      if (f.b) val = val * (*B)[i];
      if (f.a) val += double(f.a) * ra[i];
      if (f.b)
        val += double(f.b * f.qb) * pow_i(g[i], f.qb - 1) * rb[i];
      out[i] += wc * val;
    }
  }
}

}  // namespace

const std::array<OrderConditionInfo, kNumOrderConditions>&
order_condition_info() {
  static const std::array<OrderConditionInfo, kNumOrderConditions> info = {{
      {"order2", 1},
      {"order4_1", 3},
      {"order4_2", 5},
      {"order4_3", 7},
      {"order4_4", 9},
      {"order6", 5},
      {"order8_1", 7},
      {"order8_2", 7},
      {"order8_3", 7},
      {"order10_1", 9},
      {"order10_2", 9},
      {"order10_3", 9},
      {"order10_4", 9},
      {"order10_5", 9},
      {"order10_6", 9},
      {"order10_7", 9},
  }};
  return info;
}

Eigen::VectorXd order_condition_values(const Eigen::VectorXd& g) {
  const int n = static_cast<int>(g.size());
  static thread_local std::vector<double> s1, s3, s5, u;
  primed_prefixes(g.data(), n, s1, s3, s5, u);
  Eigen::VectorXd out(kNumOrderConditions);
  for (int c = 0; c < kNumOrderConditions; ++c) {
    long double acc = 0.0L;
    if (c == 0) {
      for (int k = 0; k < n; ++k) acc += g[k];
      out[c] = static_cast<double>(acc - 1.0L);
      continue;
    }
    if (c == kNested) {
      for (int k = 0; k < n; ++k)
        acc += static_cast<long double>(g[k] * g[k] * g[k]) * s1[k] * s1[k] *
               u[k];
      out[c] = static_cast<double>(acc);
      continue;
    }
    const Family f = kFamily[c];
    for (int k = 0; k < n; ++k) {
      long double term = pow_i(static_cast<long double>(g[k]), f.p);
      if (f.a) term *= pow_i(static_cast<long double>(s1[k]), f.a);
      if (f.b) term *= (f.qb == 3) ? s3[k] : s5[k];
      acc += term;
    }
    out[c] = static_cast<double>(acc);
  }
  return out;
}

void order_condition_gradient(int c, const Eigen::VectorXd& g,
                              Eigen::Ref<Eigen::VectorXd> out) {
  if (c < 0 || c >= kNumOrderConditions)
    throw std::invalid_argument("order_condition_gradient: bad index");
  const int n = static_cast<int>(g.size());
  double w[kNumOrderConditions] = {};
  w[c] = 1.0;
  out.setZero();
  static thread_local std::vector<double> buf;
  buf.assign(n, 0.0);
  weighted_gradient_acc(w, g.data(), n, buf.data());
  for (int i = 0; i < n; ++i) out[i] = buf[i];
}

void order_condition_weighted_hessian_acc(const Eigen::VectorXd& g,
                                          const Eigen::VectorXd& w,
                                          Eigen::Ref<Eigen::MatrixXd> out) {
  if (w.size() != kNumOrderConditions)
    throw std::invalid_argument("weighted_hessian: weight length");
  const int n = static_cast<int>(g.size());
  bool any = false;
  for (int c = 0; c < kNumOrderConditions; ++c) any |= (w[c] != 0.0);
  if (!any) return;
  static thread_local std::vector<Dual> gd, od;
  gd.assign(n, Dual(0.0));
  for (int i = 0; i < n; ++i) gd[i].v = g[i];
  for (int j = 0; j < n; ++j) {
    gd[j].d = 1.0;
    od.assign(n, Dual(0.0));
    weighted_gradient_acc(w.data(), gd.data(), n, od.data());
    for (int i = 0; i < n; ++i) out(i, j) += od[i].d;
    gd[j].d = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Sparse expansion.
//
// Monomials are tracked as sorted byte strings of variable indices (degree
// <= 9, 0xFF padding); primed-prefix powers are maintained incrementally in
// hash tables while k sweeps 1..n. The leading g_k^p factor makes the per-k
// blocks disjoint in the final polynomial.
// ---------------------------------------------------------------------------

namespace {

constexpr int kKeyCap = 16;
using Key = std::array<std::uint8_t, kKeyCap>;

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t a, b;
    std::memcpy(&a, k.data(), 8);
    std::memcpy(&b, k.data() + 8, 8);
    a ^= b * 0x9e3779b97f4a7c15ULL;
    a ^= a >> 33;
    a *= 0xff51afd7ed558ccdULL;
    a ^= a >> 33;
    return static_cast<std::size_t>(a);
  }
};

using Table = std::unordered_map<Key, double, KeyHash>;

Key key_one() {
  Key k;
  k.fill(0xFF);
  return k;
}

int key_len(const Key& k) {
  int l = 0;
  while (l < kKeyCap && k[l] != 0xFF) ++l;
  return l;
}

// k * var^cnt, keeping bytes sorted ascending.
Key key_mul_var(const Key& k, std::uint8_t var, int cnt) {
  Key r = k;
  for (int c = 0; c < cnt; ++c) {
    int len = key_len(r);
    if (len >= kKeyCap) throw std::overflow_error("monomial degree overflow");
    int pos = len;
    while (pos > 0 && r[pos - 1] > var) {
      r[pos] = r[pos - 1];
      --pos;
    }
    r[pos] = var;
  }
  return r;
}

Key key_mul(const Key& a, const Key& b) {
  Key r = key_one();
  const int la = key_len(a), lb = key_len(b);
  if (la + lb > kKeyCap) throw std::overflow_error("monomial degree overflow");
  std::merge(a.begin(), a.begin() + la, b.begin(), b.begin() + lb, r.begin());
  return r;
}

void table_axpy(Table& dst, const Table& src, double scale) {
  for (const auto& [k, c] : src) dst[k] += scale * c;
}

Table table_mul(const Table& a, const Table& b) {
  Table r;
  r.reserve(a.size() * 2);
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) r[key_mul(ka, kb)] += ca * cb;
  return r;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Streams the expanded form of every condition selected by `want` into `out`
// (out[c] untouched when !want[c]).
void build_expansions(int n, const std::array<bool, kNumOrderConditions>& want,
                      std::array<Polynomial, kNumOrderConditions>& out) {
  for (int c = 0; c < kNumOrderConditions; ++c)
    if (want[c]) out[c] = Polynomial(n);

  // Affine / pure-power conditions are written directly.
  {
    std::vector<int> e(n, 0);
    if (want[0]) {
      for (int i = 0; i < n; ++i) {
        e.assign(n, 0);
        e[i] = 1;
        out[0].push_term(e, 1.0);
      }
      e.assign(n, 0);
      out[0].push_term(e, -1.0);
      out[0].canonicalize();
    }
    for (int c = 1; c <= 4; ++c) {
      if (!want[c]) continue;
      for (int i = 0; i < n; ++i) {
        e.assign(n, 0);
        e[i] = 2 * c + 1;
        out[c].push_term(e, 1.0);
      }
      out[c].canonicalize();
    }
  }

  bool any_structured = false;
  for (int c = 5; c < kNumOrderConditions; ++c) any_structured |= want[c];
  if (!any_structured) return;

  int amax = 0;
  bool need3 = false, need5 = false, needU = false;
  for (int c = 5; c < kNumOrderConditions; ++c) {
    if (!want[c]) continue;
    amax = std::max(amax, kFamily[c].a);
    if (c == kNested) needU = true;
    if (kFamily[c].b) ((kFamily[c].qb == 3) ? need3 : need5) = true;
  }
  if (needU) amax = std::max(amax, 2);

  std::vector<Table> s1p(amax + 1);
  s1p[0][key_one()] = 1.0;
  Table s3, s5, u;

  std::vector<std::uint8_t> row(n);
  auto emit = [&](int c, const Table& block, std::uint8_t var, int p) {
    Polynomial& poly = out[c];
    poly.reserve(poly.nterms() + static_cast<int>(block.size()));
    for (const auto& [k, coef] : block) {
      std::fill(row.begin(), row.end(), 0);
      for (int i = 0; i < kKeyCap && k[i] != 0xFF; ++i) row[k[i]] += 1;
      row[var] += p;
      poly.push_term(row.data(), coef);
    }
  };

  for (int k = 1; k <= n; ++k) {
    const std::uint8_t v = static_cast<std::uint8_t>(k - 1);
    // delta = s1(k) - s1(k-1) = (g_{k-1} + g_k)/2  (just g_k/2 at k = 1).
    std::vector<std::pair<std::uint8_t, double>> delta;
    if (k > 1) delta.push_back({static_cast<std::uint8_t>(k - 2), 0.5});
    delta.push_back({v, 0.5});

    // Powers of delta: dp[t], t = 1..amax.
    std::vector<Table> dp(amax + 1);
    dp[0][key_one()] = 1.0;
    for (int t = 1; t <= amax; ++t) {
      for (const auto& [kk, cc] : dp[t - 1])
        for (const auto& [dv, dc] : delta) dp[t][key_mul_var(kk, dv, 1)] += cc * dc;
    }

    Table s1_prev = s1p[1];
    for (int j = amax; j >= 1; --j) {
      Table nj = s1p[j];
      for (int t = 1; t <= j; ++t) {
        const double bc = binom(j, t);
        for (const auto& [kk, cc] : s1p[j - t])
          for (const auto& [dk, dc] : dp[t]) nj[key_mul(kk, dk)] += bc * cc * dc;
      }
      s1p[j] = std::move(nj);
    }
    if (need3) {
      Table inc;
      if (k > 1) inc[key_mul_var(key_one(), static_cast<std::uint8_t>(k - 2), 3)] = 0.5;
      inc[key_mul_var(key_one(), v, 3)] += 0.5;
      table_axpy(s3, inc, 1.0);
    }
    if (need5) {
      Table inc;
      if (k > 1) inc[key_mul_var(key_one(), static_cast<std::uint8_t>(k - 2), 5)] = 0.5;
      inc[key_mul_var(key_one(), v, 5)] += 0.5;
      table_axpy(s5, inc, 1.0);
    }
    if (needU) {
      // u(k) = u(k-1) + (g_{k-1}^3 s1(k-1) + g_k^3 s1(k)) / 2.
      if (k > 1)
        for (const auto& [kk, cc] : s1_prev)
          u[key_mul_var(kk, static_cast<std::uint8_t>(k - 2), 3)] += 0.5 * cc;
      for (const auto& [kk, cc] : s1p[1])
        u[key_mul_var(kk, v, 3)] += 0.5 * cc;
    }

    for (int c = 5; c < kNumOrderConditions; ++c) {
      if (!want[c]) continue;
      const Family f = kFamily[c];
      if (c == kNested) {
        emit(c, table_mul(s1p[2], u), v, 3);
      } else if (f.b) {
        emit(c, table_mul(s1p[f.a], (f.qb == 3) ? s3 : s5), v, f.p);
      } else {
        emit(c, s1p[f.a], v, f.p);
      }
    }
  }

  for (int c = 5; c < kNumOrderConditions; ++c)
    if (want[c]) out[c].canonicalize();
}

}  // namespace

Polynomial expanded_order_condition(int c, int n) {
  if (c < 0 || c >= kNumOrderConditions)
    throw std::invalid_argument("expanded_order_condition: bad index");
  std::array<bool, kNumOrderConditions> want{};
  want[c] = true;
  std::array<Polynomial, kNumOrderConditions> out;
  build_expansions(n, want, out);
  return std::move(out[c]);
}

Polynomial symmetry_polynomial(int n, int j) {
  if (j < 1 || j > n / 2)
    throw std::invalid_argument("symmetry_polynomial: index out of range");
  Polynomial p(n);
  std::vector<int> e(n, 0);
  e[j - 1] = 1;
  p.push_term(e, 1.0);
  e[j - 1] = 0;
  e[n - j] = 1;
  p.push_term(e, -1.0);
  p.canonicalize();
  return p;
}

PolySystem order_condition_system(int n) {
  if (n < 3 || n % 2 == 0)
    throw std::invalid_argument("order_condition_system: n must be odd >= 3");
  PolySystem sys(n);
  for (int j = 1; j <= n / 2; ++j) sys.add(symmetry_polynomial(n, j));
  std::array<bool, kNumOrderConditions> want;
  want.fill(true);
  std::array<Polynomial, kNumOrderConditions> out;
  build_expansions(n, want, out);
  for (int c = 0; c < kNumOrderConditions; ++c) sys.add(std::move(out[c]));
  return sys;
}

}  // namespace gradcont
