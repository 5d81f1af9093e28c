#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gradcont {

// Sparse multivariate polynomial with real coefficients.
//
// Terms live in a single arena: coeff_[t] scales the monomial whose exponent
// vector is the t-th row of expo_ (nterms x nvars, row-major, uint8 entries).
// Canonical form: rows in ascending lexicographic order, no duplicate rows,
// no zero coefficients. Equality is structural on the canonical form.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars);

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int var);
  static Polynomial monomial(int nvars, const std::vector<int>& expo, double c);

  int nvars() const { return nvars_; }
  int nterms() const { return static_cast<int>(coeff_.size()); }
  bool is_zero() const { return coeff_.empty(); }

  // Max total degree over terms; 0 for the zero polynomial.
  int degree() const;
  bool is_homogeneous() const;

  double coeff(int t) const { return coeff_[t]; }
  const std::uint8_t* expo_row(int t) const {
    return expo_.data() + static_cast<std::size_t>(t) * nvars_;
  }

  void reserve(int nterms);
  // Appends a term; canonicalize() must run before the polynomial is used.
  void push_term(const std::uint8_t* expo, double c);
  void push_term(const std::vector<int>& expo, double c);
  void canonicalize();

  double eval(const Eigen::VectorXd& x) const;
  // out += w * gradient(x) / w * hessian(x).  out must be pre-sized.
  void grad_acc(const Eigen::VectorXd& x, double w,
                Eigen::Ref<Eigen::VectorXd> out) const;
  void hess_acc(const Eigen::VectorXd& x, double w,
                Eigen::Ref<Eigen::MatrixXd> out) const;

  Polynomial derivative(int var) const;

  // Inserts a fresh variable at extra_var_index and multiplies each term by
  // that variable raised to (degree() - term degree). The result is
  // homogeneous of degree degree() over nvars()+1 variables.
  Polynomial homogenized(int extra_var_index) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) {
    a += b;
    return a;
  }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    a -= b;
    return a;
  }
  friend Polynomial operator*(double s, Polynomial a) { return std::move(a) * s; }
  friend Polynomial operator*(Polynomial a, double s) {
    a *= s;
    return a;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  bool operator==(const Polynomial& o) const;

  // One term per line: "coeff e0 e1 ... e{nvars-1}".
  std::string to_text() const;
  static Polynomial from_text(const std::string& text);

 private:
  int nvars_ = 0;
  std::vector<double> coeff_;
  std::vector<std::uint8_t> expo_;
};

// Ordered list of polynomials over a shared variable count.
class PolySystem {
 public:
  PolySystem() = default;
  explicit PolySystem(int nvars) : nvars_(nvars) {}

  int nvars() const { return nvars_; }
  int size() const { return static_cast<int>(polys_.size()); }
  const Polynomial& operator[](int i) const { return polys_[i]; }
  const std::vector<Polynomial>& polys() const { return polys_; }

  void add(Polynomial p);

  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  // Blocks in polynomial text format separated by "---" lines.
  std::string to_text() const;
  static PolySystem from_text(const std::string& text);

 private:
  int nvars_ = 0;
  std::vector<Polynomial> polys_;
};

}  // namespace gradcont
