#include "gradcont/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gradcont {

namespace {

constexpr double kDropTol = 0.0;  // exact zero only; callers control rounding

template <class T>
T pow_u8(T x, std::uint8_t e) {
  T r = 1.0;
  while (e) {
    if (e & 1) r *= x;
    x *= x;
    e >>= 1;
  }
  return r;
}

}  // namespace

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
  if (nvars < 0 || nvars > 255)
    throw std::invalid_argument("Polynomial: nvars out of range");
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  if (c != 0.0) {
    std::vector<std::uint8_t> e(nvars, 0);
    p.push_term(e.data(), c);
  }
  return p;
}

Polynomial Polynomial::variable(int nvars, int var) {
  if (var < 0 || var >= nvars)
    throw std::invalid_argument("Polynomial::variable: index out of range");
  Polynomial p(nvars);
  std::vector<std::uint8_t> e(nvars, 0);
  e[var] = 1;
  p.push_term(e.data(), 1.0);
  return p;
}

Polynomial Polynomial::monomial(int nvars, const std::vector<int>& expo,
                                double c) {
  if (static_cast<int>(expo.size()) != nvars)
    throw std::invalid_argument("Polynomial::monomial: exponent length");
  Polynomial p(nvars);
  p.push_term(expo, c);
  p.canonicalize();
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    int s = std::accumulate(row, row + nvars_, 0);
    d = std::max(d, s);
  }
  return d;
}

bool Polynomial::is_homogeneous() const {
  if (is_zero()) return true;
  const int d = degree();
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    if (std::accumulate(row, row + nvars_, 0) != d) return false;
  }
  return true;
}

void Polynomial::reserve(int nterms) {
  coeff_.reserve(nterms);
  expo_.reserve(static_cast<std::size_t>(nterms) * nvars_);
}

void Polynomial::push_term(const std::uint8_t* expo, double c) {
  coeff_.push_back(c);
  expo_.insert(expo_.end(), expo, expo + nvars_);
}

void Polynomial::push_term(const std::vector<int>& expo, double c) {
  if (static_cast<int>(expo.size()) != nvars_)
    throw std::invalid_argument("Polynomial::push_term: exponent length");
  std::vector<std::uint8_t> e(nvars_);
  for (int i = 0; i < nvars_; ++i) {
    if (expo[i] < 0 || expo[i] > 255)
      throw std::invalid_argument("Polynomial::push_term: exponent range");
    e[i] = static_cast<std::uint8_t>(expo[i]);
  }
  push_term(e.data(), c);
}

void Polynomial::canonicalize() {
  const int nt = nterms();
  if (nt == 0) return;
  std::vector<int> order(nt);
  std::iota(order.begin(), order.end(), 0);
  const std::uint8_t* base = expo_.data();
  const int nv = nvars_;
  std::sort(order.begin(), order.end(), [base, nv](int a, int b) {
    return std::memcmp(base + static_cast<std::size_t>(a) * nv,
                       base + static_cast<std::size_t>(b) * nv, nv) < 0;
  });
  std::vector<double> nc;
  std::vector<std::uint8_t> ne;
  nc.reserve(nt);
  ne.reserve(expo_.size());
  for (int idx = 0; idx < nt;) {
    const int t = order[idx];
    const std::uint8_t* row = base + static_cast<std::size_t>(t) * nv;
    double c = coeff_[t];
    int j = idx + 1;
    while (j < nt &&
           std::memcmp(base + static_cast<std::size_t>(order[j]) * nv, row,
                       nv) == 0) {
      c += coeff_[order[j]];
      ++j;
    }
    idx = j;
    if (std::abs(c) > kDropTol) {
      nc.push_back(c);
      ne.insert(ne.end(), row, row + nv);
    }
  }
  coeff_ = std::move(nc);
  expo_ = std::move(ne);
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  // Extended-precision products plus Neumaier accumulation: expanded forms
  // can have millions of terms whose magnitudes dwarf the final value, and a
  // plain double sum loses several digits there.
  long double acc = 0.0L;
  long double comp = 0.0L;
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    long double m = coeff_[t];
    for (int i = 0; i < nvars_; ++i)
      if (row[i]) m *= pow_u8(static_cast<long double>(x[i]), row[i]);
    const long double s = acc + m;
    if (std::fabs(acc) >= std::fabs(m))
      comp += (acc - s) + m;
    else
      comp += (m - s) + acc;
    acc = s;
  }
  return static_cast<double>(acc + comp);
}

void Polynomial::grad_acc(const Eigen::VectorXd& x, double w,
                          Eigen::Ref<Eigen::VectorXd> out) const {
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    for (int i = 0; i < nvars_; ++i) {
      if (!row[i]) continue;
      double m = w * coeff_[t] * row[i] * pow_u8(x[i], row[i] - 1);
      for (int j = 0; j < nvars_; ++j)
        if (row[j] && j != i) m *= pow_u8(x[j], row[j]);
      out[i] += m;
    }
  }
}

void Polynomial::hess_acc(const Eigen::VectorXd& x, double w,
                          Eigen::Ref<Eigen::MatrixXd> out) const {
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    for (int i = 0; i < nvars_; ++i) {
      if (!row[i]) continue;
      for (int j = i; j < nvars_; ++j) {
        double m;
        if (i == j) {
          if (row[i] < 2) continue;
          m = w * coeff_[t] * row[i] * (row[i] - 1) * pow_u8(x[i], row[i] - 2);
          for (int q = 0; q < nvars_; ++q)
            if (row[q] && q != i) m *= pow_u8(x[q], row[q]);
          out(i, i) += m;
        } else {
          if (!row[j]) continue;
          m = w * coeff_[t] * row[i] * row[j] * pow_u8(x[i], row[i] - 1) *
              pow_u8(x[j], row[j] - 1);
          for (int q = 0; q < nvars_; ++q)
            if (row[q] && q != i && q != j) m *= pow_u8(x[q], row[q]);
          out(i, j) += m;
          out(j, i) += m;
        }
      }
    }
  }
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= nvars_)
    throw std::invalid_argument("Polynomial::derivative: index out of range");
  Polynomial d(nvars_);
  std::vector<std::uint8_t> e(nvars_);
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    if (!row[var]) continue;
    std::memcpy(e.data(), row, nvars_);
    e[var] -= 1;
    d.push_term(e.data(), coeff_[t] * row[var]);
  }
  d.canonicalize();
  return d;
}

Polynomial Polynomial::homogenized(int extra_var_index) const {
  if (extra_var_index < 0 || extra_var_index > nvars_)
    throw std::invalid_argument("Polynomial::homogenized: index out of range");
  const int d = degree();
  Polynomial h(nvars_ + 1);
  h.reserve(nterms());
  std::vector<std::uint8_t> e(nvars_ + 1);
  for (int t = 0; t < nterms(); ++t) {
    const std::uint8_t* row = expo_row(t);
    int s = std::accumulate(row, row + nvars_, 0);
    std::memcpy(e.data(), row, extra_var_index);
    e[extra_var_index] = static_cast<std::uint8_t>(d - s);
    std::memcpy(e.data() + extra_var_index + 1, row + extra_var_index,
                nvars_ - extra_var_index);
    h.push_term(e.data(), coeff_[t]);
  }
  h.canonicalize();
  return h;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.is_zero()) return *this;
  if (is_zero() && nvars_ == 0) nvars_ = o.nvars_;
  if (nvars_ != o.nvars_)
    throw std::invalid_argument("Polynomial: mixed variable counts");
  coeff_.insert(coeff_.end(), o.coeff_.begin(), o.coeff_.end());
  expo_.insert(expo_.end(), o.expo_.begin(), o.expo_.end());
  canonicalize();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  Polynomial neg = o;
  neg *= -1.0;
  return *this += neg;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    coeff_.clear();
    expo_.clear();
    return *this;
  }
  for (double& c : coeff_) c *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.nvars_ != b.nvars_)
    throw std::invalid_argument("Polynomial: mixed variable counts");
  const int nv = a.nvars_;
  Polynomial r(nv);
  r.reserve(a.nterms() * b.nterms());
  std::vector<std::uint8_t> e(nv);
  for (int s = 0; s < a.nterms(); ++s) {
    const std::uint8_t* ra = a.expo_row(s);
    for (int t = 0; t < b.nterms(); ++t) {
      const std::uint8_t* rb = b.expo_row(t);
      for (int i = 0; i < nv; ++i) {
        const int sum = ra[i] + rb[i];
        if (sum > 255)
          throw std::overflow_error("Polynomial: exponent overflow");
        e[i] = static_cast<std::uint8_t>(sum);
      }
      r.push_term(e.data(), a.coeff_[s] * b.coeff_[t]);
    }
  }
  r.canonicalize();
  return r;
}

bool Polynomial::operator==(const Polynomial& o) const {
  return nvars_ == o.nvars_ && coeff_ == o.coeff_ && expo_ == o.expo_;
}

std::string Polynomial::to_text() const {
  std::ostringstream os;
  os.precision(17);
  for (int t = 0; t < nterms(); ++t) {
    os << coeff_[t];
    const std::uint8_t* row = expo_row(t);
    for (int i = 0; i < nvars_; ++i) os << ' ' << static_cast<int>(row[i]);
    os << '\n';
  }
  return os.str();
}

Polynomial Polynomial::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> coeffs;
  std::vector<std::vector<int>> rows;
  int nv = -1;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double c;
    if (!(ls >> c))
      throw std::invalid_argument("Polynomial::from_text: bad coefficient");
    std::vector<int> e;
    int v;
    while (ls >> v) e.push_back(v);
    if (nv < 0)
      nv = static_cast<int>(e.size());
    else if (nv != static_cast<int>(e.size()))
      throw std::invalid_argument("Polynomial::from_text: ragged exponents");
    coeffs.push_back(c);
    rows.push_back(std::move(e));
  }
  if (nv < 0) throw std::invalid_argument("Polynomial::from_text: empty");
  Polynomial p(nv);
  for (std::size_t t = 0; t < coeffs.size(); ++t)
    p.push_term(rows[t], coeffs[t]);
  p.canonicalize();
  return p;
}

void PolySystem::add(Polynomial p) {
  if (size() == 0 && nvars_ == 0) nvars_ = p.nvars();
  if (p.nvars() != nvars_)
    throw std::invalid_argument("PolySystem::add: mixed variable counts");
  polys_.push_back(std::move(p));
}

Eigen::VectorXd PolySystem::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r(size());
  for (int i = 0; i < size(); ++i) r[i] = polys_[i].eval(x);
  return r;
}

Eigen::MatrixXd PolySystem::jacobian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(size(), nvars_);
  Eigen::VectorXd row(nvars_);
  for (int i = 0; i < size(); ++i) {
    row.setZero();
    polys_[i].grad_acc(x, 1.0, row);
    J.row(i) = row;
  }
  return J;
}

std::string PolySystem::to_text() const {
  std::string out;
  for (int i = 0; i < size(); ++i) {
    out += polys_[i].to_text();
    if (i + 1 < size()) out += "---\n";
  }
  return out;
}

PolySystem PolySystem::from_text(const std::string& text) {
  PolySystem sys;
  std::string block;
  std::istringstream is(text);
  std::string line;
  auto flush = [&]() {
    if (block.find_first_not_of(" \t\r\n") != std::string::npos)
      sys.add(Polynomial::from_text(block));
    block.clear();
  };
  while (std::getline(is, line)) {
    if (line.rfind("---", 0) == 0) {
      flush();
    } else {
      block += line;
      block += '\n';
    }
  }
  flush();
  return sys;
}

}  // namespace gradcont
