#pragma once

// Exact arithmetic over Q(i): Gaussian rationals, univariate polynomials and
// reduced rational functions in z.

#include <algorithm>
#include <complex>
#include <limits>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "exwkb/errors.hpp"

namespace exwkb {

class gauss_rational {
 public:
  gauss_rational() = default;
  gauss_rational(long re) : re_(re), im_(0) {}  // NOLINT(implicit)
  gauss_rational(mpq_class re, mpq_class im = 0) : re_(std::move(re)), im_(std::move(im)) {
    re_.canonicalize();
    im_.canonicalize();
  }
  static gauss_rational i() { return {0, 1}; }
  static gauss_rational parse(const std::string& re, const std::string& im = "0") {
    try {
      return {mpq_class(re), mpq_class(im)};
    } catch (const std::invalid_argument&) {
      throw input_error("malformed rational literal: " + re + " / " + im);
    }
  }
  /// Exact conversion of a binary double.
  static gauss_rational from_double(double re, double im = 0.0) { return {mpq_class(re), mpq_class(im)}; }

  const mpq_class& re() const { return re_; }
  const mpq_class& im() const { return im_; }
  bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
  std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }
  gauss_rational conj() const { return {re_, -im_}; }
  mpq_class norm() const { return re_ * re_ + im_ * im_; }

  friend gauss_rational operator+(const gauss_rational& a, const gauss_rational& b) {
    return {a.re_ + b.re_, a.im_ + b.im_};
  }
  friend gauss_rational operator-(const gauss_rational& a, const gauss_rational& b) {
    return {a.re_ - b.re_, a.im_ - b.im_};
  }
  friend gauss_rational operator-(const gauss_rational& a) { return {-a.re_, -a.im_}; }
  friend gauss_rational operator*(const gauss_rational& a, const gauss_rational& b) {
    return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
  }
  friend gauss_rational operator/(const gauss_rational& a, const gauss_rational& b) {
    const mpq_class n = b.norm();
    if (sgn(n) == 0) throw numeric_error("gauss_rational: division by zero");
    const gauss_rational num = a * b.conj();
    return {num.re_ / n, num.im_ / n};
  }
  friend bool operator==(const gauss_rational& a, const gauss_rational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }

  std::string str() const {
    if (sgn(im_) == 0) return re_.get_str();
    return "(" + re_.get_str() + (sgn(im_) < 0 ? "" : "+") + im_.get_str() + "i)";
  }

 private:
  mpq_class re_{0};
  mpq_class im_{0};
};

/// Dense polynomial in z, coefficients low-to-high, no trailing zeros.
class polynomial {
 public:
  polynomial() = default;
  explicit polynomial(std::vector<gauss_rational> c) : c_(std::move(c)) { trim(); }
  static polynomial constant(gauss_rational v) { return polynomial({std::move(v)}); }
  static polynomial z() { return polynomial({0, 1}); }
  /// (z - root)
  static polynomial linear(const gauss_rational& root) { return polynomial({-root, 1}); }

  bool is_zero() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<gauss_rational>& coeffs() const { return c_; }
  gauss_rational coeff(std::size_t k) const { return k < c_.size() ? c_[k] : gauss_rational{}; }
  gauss_rational leading() const { return c_.empty() ? gauss_rational{} : c_.back(); }

  std::complex<double> operator()(std::complex<double> z) const {
    std::complex<double> acc{};
    for (std::size_t k = c_.size(); k-- > 0;) acc = acc * z + c_[k].to_complex();
    return acc;
  }
  gauss_rational eval_exact(const gauss_rational& z) const {
    gauss_rational acc;
    for (std::size_t k = c_.size(); k-- > 0;) acc = acc * z + c_[k];
    return acc;
  }
  std::vector<std::complex<double>> to_complex() const {
    std::vector<std::complex<double>> r;
    r.reserve(c_.size());
    for (const auto& v : c_) r.push_back(v.to_complex());
    return r;
  }

  polynomial derivative() const {
    std::vector<gauss_rational> r;
    for (std::size_t k = 1; k < c_.size(); ++k) r.push_back(c_[k] * gauss_rational(static_cast<long>(k)));
    return polynomial(std::move(r));
  }
  polynomial monic() const {
    if (is_zero()) return *this;
    const gauss_rational lc = leading();
    std::vector<gauss_rational> r;
    for (const auto& v : c_) r.push_back(v / lc);
    return polynomial(std::move(r));
  }

  friend polynomial operator+(const polynomial& a, const polynomial& b) {
    std::vector<gauss_rational> r(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a.coeff(k) + b.coeff(k);
    return polynomial(std::move(r));
  }
  friend polynomial operator-(const polynomial& a) {
    std::vector<gauss_rational> r;
    for (const auto& v : a.c_) r.push_back(-v);
    return polynomial(std::move(r));
  }
  friend polynomial operator-(const polynomial& a, const polynomial& b) { return a + (-b); }
  friend polynomial operator*(const polynomial& a, const polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<gauss_rational> r(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] = r[i + j] + a.c_[i] * b.c_[j];
    return polynomial(std::move(r));
  }
  friend bool operator==(const polynomial& a, const polynomial& b) { return a.c_ == b.c_; }

  /// Euclidean division: a = q*b + r, deg r < deg b.
  static std::pair<polynomial, polynomial> divmod(const polynomial& a, const polynomial& b) {
    if (b.is_zero()) throw numeric_error("polynomial: division by zero");
    std::vector<gauss_rational> rem = a.c_;
    const int db = b.degree();
    if (a.degree() < db) return {polynomial{}, a};
    std::vector<gauss_rational> q(static_cast<std::size_t>(a.degree() - db + 1));
    const gauss_rational lb = b.leading();
    for (int k = a.degree() - db; k >= 0; --k) {
      const gauss_rational f = rem[static_cast<std::size_t>(k + db)] / lb;
      q[static_cast<std::size_t>(k)] = f;
      if (f.is_zero()) continue;
      for (int j = 0; j <= db; ++j)
        rem[static_cast<std::size_t>(k + j)] = rem[static_cast<std::size_t>(k + j)] - f * b.c_[static_cast<std::size_t>(j)];
    }
    rem.resize(static_cast<std::size_t>(db));
    return {polynomial(std::move(q)), polynomial(std::move(rem))};
  }

  /// Monic gcd (zero if both are zero).
  static polynomial gcd(polynomial a, polynomial b) {
    while (!b.is_zero()) {
      auto r = divmod(a, b).second;
      a = std::move(b);
      b = std::move(r);
    }
    return a.monic();
  }

  /// Yun's square-free decomposition: returns f_1, f_2, ... with
  /// monic(p) = prod f_k^k, each f_k square-free and pairwise coprime.
  std::vector<polynomial> square_free_factors() const {
    std::vector<polynomial> out;
    if (degree() < 1) return out;
    const polynomial f = monic();
    const polynomial fp = f.derivative();
    polynomial a = gcd(f, fp);
    polynomial b = divmod(f, a).first;
    polynomial c = divmod(fp, a).first;
    polynomial d = c - b.derivative();
    while (b.degree() >= 1) {
      const polynomial g = gcd(b, d);
      out.push_back(g);
      b = divmod(b, g).first;
      c = divmod(d, g).first;
      d = c - b.derivative();
    }
    return out;
  }

  std::string str() const {
    if (c_.empty()) return "0";
    std::string s;
    for (std::size_t k = 0; k < c_.size(); ++k) {
      if (c_[k].is_zero()) continue;
      if (!s.empty()) s += " + ";
      s += c_[k].str();
      if (k > 0) s += "*z^" + std::to_string(k);
    }
    return s;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
  }
  std::vector<gauss_rational> c_;
};

/// Double-precision snapshot of a rational function for repeated evaluation;
/// the denominator is kept as a product of powers of square-free factors.
struct compiled_rational {
  std::vector<std::complex<double>> num;
  std::vector<std::pair<std::vector<std::complex<double>>, int>> den;
  std::complex<double> lead{1.0, 0.0};
  std::complex<double> operator()(std::complex<double> z) const {
    std::complex<double> n{};
    for (std::size_t k = num.size(); k-- > 0;) n = n * z + num[k];
    std::complex<double> d = lead;
    for (const auto& [f, e] : den) {
      std::complex<double> v{};
      for (std::size_t k = f.size(); k-- > 0;) v = v * z + f[k];
      d *= std::pow(v, e);
    }
    return n / d;
  }
};

/// num/den in lowest terms with monic denominator.
class rational_function {
 public:
  rational_function() : num_(), den_(polynomial::constant(1)) {}
  rational_function(polynomial num) : num_(std::move(num)), den_(polynomial::constant(1)) {}  // NOLINT
  rational_function(gauss_rational c) : rational_function(polynomial::constant(std::move(c))) {}  // NOLINT
  rational_function(long c) : rational_function(gauss_rational(c)) {}  // NOLINT
  rational_function(polynomial num, polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw numeric_error("rational_function: zero denominator");
    reduce();
  }
  static rational_function z() { return rational_function(polynomial::z()); }

  const polynomial& num() const { return num_; }
  const polynomial& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }

  std::complex<double> operator()(std::complex<double> z) const { return num_(z) / den_(z); }
  compiled_rational compile() const {
    compiled_rational c;
    c.num = num_.to_complex();
    const auto f = den_.square_free_factors();
    for (std::size_t k = 0; k < f.size(); ++k)
      if (f[k].degree() > 0) c.den.emplace_back(f[k].to_complex(), static_cast<int>(k + 1));
    return c;
  }

  rational_function derivative() const {
    return {num_.derivative() * den_ - num_ * den_.derivative(), den_ * den_};
  }

  friend rational_function operator+(const rational_function& a, const rational_function& b) {
    if (a.den_ == b.den_) return {a.num_ + b.num_, a.den_};
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend rational_function operator-(const rational_function& a) { return {-a.num_, a.den_}; }
  friend rational_function operator-(const rational_function& a, const rational_function& b) {
    return a + (-b);
  }
  friend rational_function operator*(const rational_function& a, const rational_function& b) {
    if (a.is_zero() || b.is_zero()) return {};
    return {a.num_ * b.num_, a.den_ * b.den_};
  }
  friend rational_function operator/(const rational_function& a, const rational_function& b) {
    if (b.is_zero()) throw numeric_error("rational_function: division by zero");
    return {a.num_ * b.den_, a.den_ * b.num_};
  }
  friend bool operator==(const rational_function& a, const rational_function& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  /// deg(num) - deg(den); -infinity is represented by INT_MIN for zero.
  int degree() const { return is_zero() ? std::numeric_limits<int>::min() : num_.degree() - den_.degree(); }

  std::string str() const { return "(" + num_.str() + ")/(" + den_.str() + ")"; }

 private:
  void reduce() {
    if (num_.is_zero()) {
      den_ = polynomial::constant(1);
      return;
    }
    const polynomial g = polynomial::gcd(num_, den_);
    if (g.degree() > 0) {
      num_ = polynomial::divmod(num_, g).first;
      den_ = polynomial::divmod(den_, g).first;
    }
    const gauss_rational lc = den_.leading();
    if (!(lc == gauss_rational(1))) {
      std::vector<gauss_rational> n;
      for (const auto& v : num_.coeffs()) n.push_back(v / lc);
      num_ = polynomial(std::move(n));
      den_ = den_.monic();
    }
  }

  polynomial num_;
  polynomial den_;
};

}  // namespace exwkb
