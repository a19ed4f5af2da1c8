#pragma once

// Truncated Novikov series  sum_c a_c T^c  with real exponents c >= 0 and a
// pluggable coefficient ring, plus square matrices over them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "exwkb/errors.hpp"

namespace exwkb {

using cplx = std::complex<double>;

inline constexpr double unbounded = std::numeric_limits<double>::infinity();

/// Relative merge tolerance for exponents: |a-b| <= exponent_merge_tol * max(1,|a|).
inline constexpr double exponent_merge_tol = 1e-9;

inline bool exponents_equal(double a, double b) {
  return std::abs(a - b) <= exponent_merge_tol * std::max(1.0, std::abs(a));
}

/// Polynomial in hbar truncated at a declared order N (terms c_0..c_N).
/// The zero polynomial has an empty term list.  A constant built without an
/// order is untruncated and acts as a unit for any order.
class hbar_poly {
 public:
  static constexpr int untruncated = std::numeric_limits<int>::max();

  hbar_poly() = default;
  hbar_poly(std::vector<cplx> terms, int order) : c_(std::move(terms)), order_(order) {
    if (order_ < 0) throw config_error("hbar_poly: negative truncation order");
    if (order_ != untruncated && c_.size() > static_cast<std::size_t>(order_) + 1)
      c_.resize(static_cast<std::size_t>(order_) + 1);
    trim();
  }
  static hbar_poly constant(cplx v, int order = untruncated) { return hbar_poly({v}, order); }

  int order() const { return order_; }
  const std::vector<cplx>& terms() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  cplx coeff(std::size_t k) const { return k < c_.size() ? c_[k] : cplx{}; }

  cplx evaluate(cplx hbar) const {
    cplx acc{};
    for (std::size_t k = c_.size(); k-- > 0;) acc = acc * hbar + c_[k];
    return acc;
  }
  double magnitude() const {
    double m = 0.0;
    for (const auto& v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  friend hbar_poly operator+(const hbar_poly& a, const hbar_poly& b) {
    const int ord = std::min(a.order_, b.order_);
    std::vector<cplx> r(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a.coeff(k) + b.coeff(k);
    return hbar_poly(std::move(r), ord);
  }
  friend hbar_poly operator-(const hbar_poly& a) {
    std::vector<cplx> r(a.c_);
    for (auto& v : r) v = -v;
    return hbar_poly(std::move(r), a.order_);
  }
  friend hbar_poly operator-(const hbar_poly& a, const hbar_poly& b) { return a + (-b); }
  friend hbar_poly operator*(const hbar_poly& a, const hbar_poly& b) {
    const int ord = std::min(a.order_, b.order_);
    if (a.is_zero() || b.is_zero()) return hbar_poly({}, ord);
    std::size_t len = a.c_.size() + b.c_.size() - 1;
    if (ord != untruncated) len = std::min(len, static_cast<std::size_t>(ord) + 1);
    std::vector<cplx> r(len);
    for (std::size_t i = 0; i < a.c_.size() && i < len; ++i)
      for (std::size_t j = 0; j < b.c_.size() && i + j < len; ++j) r[i + j] += a.c_[i] * b.c_[j];
    return hbar_poly(std::move(r), ord);
  }
  friend hbar_poly operator*(cplx s, const hbar_poly& a) { return hbar_poly::constant(s) * a; }
  friend bool operator==(const hbar_poly&, const hbar_poly&) = default;

  /// Drop coefficients of modulus <= tol.
  hbar_poly pruned(double tol) const {
    std::vector<cplx> r(c_);
    for (auto& v : r)
      if (std::abs(v) <= tol) v = cplx{};
    return hbar_poly(std::move(r), order_);
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == cplx{}) c_.pop_back();
  }

  std::vector<cplx> c_;
  int order_ = untruncated;
};

/// Coefficient ring interface used by novikov_series.
template <class C>
struct coeff_traits;

template <>
struct coeff_traits<cplx> {
  static cplx one() { return {1.0, 0.0}; }
  static cplx from_scalar(cplx v) { return v; }
  static bool is_zero(const cplx& c) { return c == cplx{}; }
  static double magnitude(const cplx& c) { return std::abs(c); }
  static cplx evaluate(const cplx& c, cplx) { return c; }
  static cplx pruned(const cplx& c, double tol) { return std::abs(c) <= tol ? cplx{} : c; }
  static nlohmann::json to_json(const cplx& c) { return {c.real(), c.imag()}; }
  static cplx from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>()};
  }
};

template <>
struct coeff_traits<hbar_poly> {
  static hbar_poly one() { return hbar_poly::constant(1.0); }
  static hbar_poly from_scalar(cplx v) { return hbar_poly::constant(v); }
  static bool is_zero(const hbar_poly& c) { return c.is_zero(); }
  static double magnitude(const hbar_poly& c) { return c.magnitude(); }
  static cplx evaluate(const hbar_poly& c, cplx hbar) { return c.evaluate(hbar); }
  static hbar_poly pruned(const hbar_poly& c, double tol) { return c.pruned(tol); }
  static nlohmann::json to_json(const hbar_poly& c) {
    auto arr = nlohmann::json::array();
    for (const auto& v : c.terms()) arr.push_back({v.real(), v.imag()});
    return arr;
  }
  static hbar_poly from_json(const nlohmann::json& j) {
    std::vector<cplx> t;
    for (const auto& e : j) t.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    return hbar_poly(std::move(t), static_cast<int>(std::max<std::size_t>(t.size(), 1)) - 1);
  }
};

template <class C>
concept novikov_coefficient = requires(const C& a, const C& b, cplx h, double tol) {
  { a + b } -> std::convertible_to<C>;
  { a * b } -> std::convertible_to<C>;
  { -a } -> std::convertible_to<C>;
  { coeff_traits<C>::one() } -> std::convertible_to<C>;
  { coeff_traits<C>::from_scalar(h) } -> std::convertible_to<C>;
  { coeff_traits<C>::is_zero(a) } -> std::convertible_to<bool>;
  { coeff_traits<C>::magnitude(a) } -> std::convertible_to<double>;
  { coeff_traits<C>::evaluate(a, h) } -> std::convertible_to<cplx>;
  { coeff_traits<C>::pruned(a, tol) } -> std::convertible_to<C>;
};

/// Finite sum of a_c T^c, exponents strictly increasing, all below the cutoff.
template <novikov_coefficient C>
class novikov_series {
 public:
  using coefficient_type = C;
  struct term {
    double exp;
    C coeff;
  };

  explicit novikov_series(double cutoff = unbounded) : cutoff_(cutoff) {
    if (!(cutoff > 0.0)) throw config_error("novikov_series: cutoff must be positive");
  }
  novikov_series(std::vector<term> terms, double cutoff = unbounded) : novikov_series(cutoff) {
    terms_ = std::move(terms);
    normalize();
  }

  static novikov_series monomial(C c, double exp, double cutoff = unbounded) {
    return novikov_series({term{exp, std::move(c)}}, cutoff);
  }
  static novikov_series constant(C c, double cutoff = unbounded) {
    return monomial(std::move(c), 0.0, cutoff);
  }
  static novikov_series one(double cutoff = unbounded) {
    return constant(coeff_traits<C>::one(), cutoff);
  }

  double cutoff() const { return cutoff_; }
  const std::vector<term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  /// Smallest stored exponent, +inf for the zero series.
  double valuation() const { return terms_.empty() ? unbounded : terms_.front().exp; }

  /// Substitutes T^c = e^{-c} (and hbar into hbar-polynomial coefficients).
  cplx evaluate_at(cplx hbar_value = {1.0, 0.0}) const {
    cplx acc{};
    for (const auto& t : terms_) acc += coeff_traits<C>::evaluate(t.coeff, hbar_value) * std::exp(-t.exp);
    return acc;
  }

  /// Coefficient of T^e (zero if absent).
  C coefficient(double e) const {
    for (const auto& t : terms_)
      if (exponents_equal(t.exp, e)) return t.coeff;
    return C{};
  }

  novikov_series truncated(double w) const {
    novikov_series r(std::min(w, cutoff_));
    for (const auto& t : terms_)
      if (t.exp < r.cutoff_ && !exponents_equal(t.exp, r.cutoff_)) r.terms_.push_back(t);
    return r;
  }
  novikov_series with_cutoff(double w) const {
    novikov_series r(terms_, w);
    return r;
  }
  novikov_series pruned(double tol) const {
    std::vector<term> t;
    for (const auto& x : terms_) t.push_back({x.exp, coeff_traits<C>::pruned(x.coeff, tol)});
    return novikov_series(std::move(t), cutoff_);
  }
  /// Multiplies by T^s, s >= 0.
  novikov_series shifted(double s) const {
    std::vector<term> t;
    for (const auto& x : terms_) t.push_back({x.exp + s, x.coeff});
    return novikov_series(std::move(t), cutoff_);
  }
  novikov_series scaled(const C& c) const {
    std::vector<term> t;
    for (const auto& x : terms_) t.push_back({x.exp, c * x.coeff});
    return novikov_series(std::move(t), cutoff_);
  }

  friend novikov_series operator+(const novikov_series& a, const novikov_series& b) {
    check_cutoffs(a, b);
    std::vector<term> t(a.terms_);
    t.insert(t.end(), b.terms_.begin(), b.terms_.end());
    return novikov_series(std::move(t), a.cutoff_);
  }
  friend novikov_series operator-(const novikov_series& a) {
    std::vector<term> t;
    for (const auto& x : a.terms_) t.push_back({x.exp, -x.coeff});
    return novikov_series(std::move(t), a.cutoff_);
  }
  friend novikov_series operator-(const novikov_series& a, const novikov_series& b) {
    return a + (-b);
  }
  friend novikov_series operator*(const novikov_series& a, const novikov_series& b) {
    check_cutoffs(a, b);
    std::vector<term> t;
    t.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_) {
        const double e = x.exp + y.exp;
        if (e >= a.cutoff_ || exponents_equal(e, a.cutoff_)) continue;
        t.push_back({e, x.coeff * y.coeff});
      }
    return novikov_series(std::move(t), a.cutoff_);
  }

  /// Termwise comparison: same exponents (within merge tolerance) and
  /// coefficients within tol in magnitude.
  bool approx_equal(const novikov_series& o, double tol) const {
    const auto diff = (*this - o.with_cutoff(cutoff_)).pruned(tol);
    return diff.is_zero();
  }

 private:
  static void check_cutoffs(const novikov_series& a, const novikov_series& b) {
    if (a.cutoff_ != b.cutoff_) throw config_error("novikov_series: mismatched cutoffs");
  }

  void normalize() {
    std::stable_sort(terms_.begin(), terms_.end(),
                     [](const term& x, const term& y) { return x.exp < y.exp; });
    std::vector<term> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!std::isfinite(t.exp)) throw config_error("novikov_series: non-finite exponent");
      if (t.exp < -exponent_merge_tol) throw config_error("novikov_series: negative exponent");
      if (t.exp < 0.0) t.exp = 0.0;
      if (!out.empty() && exponents_equal(out.back().exp, t.exp)) {
        out.back().coeff = out.back().coeff + t.coeff;
      } else {
        out.push_back(std::move(t));
      }
    }
    std::vector<term> kept;
    kept.reserve(out.size());
    for (auto& t : out) {
      if (coeff_traits<C>::is_zero(t.coeff)) continue;
      if (t.exp >= cutoff_ || exponents_equal(t.exp, cutoff_)) continue;
      kept.push_back(std::move(t));
    }
    terms_ = std::move(kept);
  }

  std::vector<term> terms_;
  double cutoff_;
};

using series = novikov_series<cplx>;
using hbar_series = novikov_series<hbar_poly>;

template <novikov_coefficient C>
double valuation(const novikov_series<C>& a) {
  return a.valuation();
}

template <novikov_coefficient C>
cplx evaluate_at(const novikov_series<C>& a, cplx hbar_value) {
  return a.evaluate_at(hbar_value);
}

template <novikov_coefficient C>
novikov_series<C> multiply(const novikov_series<C>& a, const novikov_series<C>& b) {
  return a * b;
}

/// n x n matrix of series sharing one cutoff, row-major.
template <novikov_coefficient C>
class novikov_matrix {
 public:
  using series_type = novikov_series<C>;

  novikov_matrix(std::size_t n, double cutoff)
      : n_(n), cutoff_(cutoff), e_(n * n, series_type(cutoff)) {}

  static novikov_matrix identity(std::size_t n, double cutoff) {
    novikov_matrix m(n, cutoff);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, series_type::one(cutoff));
    return m;
  }
  static novikov_matrix diagonal(const std::vector<cplx>& d, double cutoff) {
    novikov_matrix m(d.size(), cutoff);
    for (std::size_t i = 0; i < d.size(); ++i)
      m.set(i, i, series_type::constant(coeff_traits<C>::from_scalar(d[i]), cutoff));
    return m;
  }
  /// I + s E_{ij} (zero-based indices).
  static novikov_matrix elementary(std::size_t n, std::size_t i, std::size_t j, const series_type& s) {
    novikov_matrix m = identity(n, s.cutoff());
    m.set(i, j, m(i, j) + s);
    return m;
  }

  std::size_t dim() const { return n_; }
  double cutoff() const { return cutoff_; }
  const series_type& operator()(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, series_type s) {
    if (s.cutoff() != cutoff_) s = s.with_cutoff(cutoff_);
    e_[i * n_ + j] = std::move(s);
  }

  friend novikov_matrix operator*(const novikov_matrix& a, const novikov_matrix& b) {
    if (a.n_ != b.n_) throw config_error("novikov_matrix: dimension mismatch");
    if (a.cutoff_ != b.cutoff_) throw config_error("novikov_matrix: mismatched cutoffs");
    novikov_matrix r(a.n_, a.cutoff_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t j = 0; j < a.n_; ++j) {
        series_type acc(a.cutoff_);
        for (std::size_t k = 0; k < a.n_; ++k) {
          const auto& x = a(i, k);
          const auto& y = b(k, j);
          if (x.is_zero() || y.is_zero()) continue;
          acc = acc + x * y;
        }
        r.e_[i * a.n_ + j] = std::move(acc);
      }
    return r;
  }
  friend novikov_matrix operator+(const novikov_matrix& a, const novikov_matrix& b) {
    novikov_matrix r(a.n_, a.cutoff_);
    for (std::size_t k = 0; k < a.e_.size(); ++k) r.e_[k] = a.e_[k] + b.e_[k];
    return r;
  }
  friend novikov_matrix operator-(const novikov_matrix& a, const novikov_matrix& b) {
    novikov_matrix r(a.n_, a.cutoff_);
    for (std::size_t k = 0; k < a.e_.size(); ++k) r.e_[k] = a.e_[k] - b.e_[k];
    return r;
  }

  novikov_matrix pruned(double tol) const {
    novikov_matrix r(*this);
    for (auto& s : r.e_) s = s.pruned(tol);
    return r;
  }
  novikov_matrix with_cutoff(double w) const {
    novikov_matrix r(n_, w);
    for (std::size_t k = 0; k < e_.size(); ++k) r.e_[k] = e_[k].with_cutoff(w);
    return r;
  }

  Eigen::MatrixXcd evaluate_at(cplx hbar_value = {1.0, 0.0}) const {
    Eigen::MatrixXcd m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j).evaluate_at(hbar_value);
    return m;
  }

 private:
  std::size_t n_;
  double cutoff_;
  std::vector<series_type> e_;
};

using matrix = novikov_matrix<cplx>;
using hbar_matrix = novikov_matrix<hbar_poly>;

template <novikov_coefficient C>
struct deviation_entry {
  std::size_t row;
  std::size_t col;
  novikov_series<C> value;
};

/// Nonzero entries of M - I, in row-major order.  Callers compare the
/// reported valuations against w to decide consistency modulo T^w.
template <novikov_coefficient C>
std::vector<deviation_entry<C>> matrix_deviation(const novikov_matrix<C>& m, double /*w*/ = unbounded,
                                                 double prune_tol = 0.0) {
  std::vector<deviation_entry<C>> out;
  const auto dev = (m - novikov_matrix<C>::identity(m.dim(), m.cutoff())).pruned(prune_tol);
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j)
      if (!dev(i, j).is_zero()) out.push_back({i, j, dev(i, j)});
  return out;
}

template <novikov_coefficient C>
double deviation_valuation(const novikov_matrix<C>& m, double prune_tol = 0.0) {
  double v = unbounded;
  for (const auto& d : matrix_deviation(m, unbounded, prune_tol)) v = std::min(v, d.value.valuation());
  return v;
}

// JSON

template <novikov_coefficient C>
nlohmann::json to_json_value(const novikov_series<C>& s) {
  auto arr = nlohmann::json::array();
  for (const auto& t : s.terms()) arr.push_back({{"exp", t.exp}, {"coeff", coeff_traits<C>::to_json(t.coeff)}});
  return arr;
}

template <novikov_coefficient C>
novikov_series<C> series_from_json(const nlohmann::json& j, double cutoff = unbounded) {
  std::vector<typename novikov_series<C>::term> t;
  for (const auto& e : j) t.push_back({e.at("exp").get<double>(), coeff_traits<C>::from_json(e.at("coeff"))});
  return novikov_series<C>(std::move(t), cutoff);
}

template <novikov_coefficient C>
nlohmann::json to_json_value(const novikov_matrix<C>& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(to_json_value(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace exwkb
