#pragma once

// WKB recursion for ((hbar d)^2 - Q(z, hbar)) psi = 0 on the double cover
// sqrt(Q_0), odd/even splitting and Voros symbols by contour quadrature.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/rational.hpp"
#include "exwkb/roots.hpp"
#include "exwkb/spectral.hpp"

namespace exwkb {

/// a + b sqrt(Q_0)
struct sqrtq {
  rational_function a;
  rational_function b;

  bool is_zero() const { return a.is_zero() && b.is_zero(); }
  sqrtq flipped() const { return {a, -b}; }
  sqrtq odd() const { return {rational_function{}, b}; }
  sqrtq even() const { return {a, rational_function{}}; }
  friend bool operator==(const sqrtq& x, const sqrtq& y) { return x.a == y.a && x.b == y.b; }
  friend sqrtq operator+(const sqrtq& x, const sqrtq& y) { return {x.a + y.a, x.b + y.b}; }
  friend sqrtq operator-(const sqrtq& x, const sqrtq& y) { return {x.a - y.a, x.b - y.b}; }
  friend sqrtq operator-(const sqrtq& x) { return {-x.a, -x.b}; }
};

/// Arithmetic in Q(z)[sqrt(Q_0)].
class sqrtq_algebra {
 public:
  explicit sqrtq_algebra(rational_function q0) : q0_(std::move(q0)) {
    if (q0_.is_zero()) throw degenerate_error("Q_0 vanishes identically");
    half_log_q0_ = q0_.derivative() / (q0_ * rational_function(2));
  }

  const rational_function& q0() const { return q0_; }
  sqrtq root() const { return {rational_function{}, rational_function(1)}; }

  sqrtq mul(const sqrtq& x, const sqrtq& y) const {
    return {x.a * y.a + x.b * y.b * q0_, x.a * y.b + x.b * y.a};
  }
  sqrtq scale(const rational_function& f, const sqrtq& x) const { return {f * x.a, f * x.b}; }
  sqrtq derivative(const sqrtq& x) const { return {x.a.derivative(), x.b.derivative() + x.b * half_log_q0_}; }
  /// x / (2 sqrt(Q_0))
  sqrtq div_two_root(const sqrtq& x) const {
    const rational_function half(gauss_rational(mpq_class(1, 2)));
    return {x.b * half, x.a * half / q0_};
  }
  sqrtq inverse(const sqrtq& x) const {
    const rational_function n = x.a * x.a - x.b * x.b * q0_;
    if (n.is_zero()) throw numeric_error("sqrtq: zero divisor");
    return {x.a / n, -x.b / n};
  }

 private:
  rational_function q0_;
  rational_function half_log_q0_;
};

/// P_{-1}, P_0, ..., P_N of S = sum_m hbar^m P_m with hbar^2 (S' + S^2) = Q.
class wkb_series {
 public:
  static wkb_series compute(const spectral_data& s, int order) {
    if (!s.is_schrodinger()) throw input_error("WKB recursion needs Schrodinger form");
    if (order < -1) throw config_error("WKB order must be >= -1");
    wkb_series w(s.schrodinger_q(), order);
    w.solve();
    return w;
  }

  int order() const { return order_; }
  const sqrtq_algebra& algebra() const { return alg_; }
  /// P_m for -1 <= m <= order.
  const sqrtq& term(int m) const { return p_.at(static_cast<std::size_t>(m + 1)); }
  const rational_function& q(int k) const {
    static const rational_function zero;
    return k < static_cast<int>(q_.size()) ? q_[static_cast<std::size_t>(k)] : zero;
  }

  /// Coefficient of hbar^k in hbar^2 (S' + S^2) - Q for k = 0 .. order+1.
  std::vector<sqrtq> residual() const {
    std::vector<sqrtq> r;
    for (int k = 0; k <= order_ + 1; ++k) {
      sqrtq acc{};
      for (int m1 = -1; m1 <= k - 1; ++m1) {
        const int m2 = k - 2 - m1;
        if (m2 < -1 || m1 > order_ || m2 > order_) continue;
        acc = acc + alg_.mul(term(m1), term(m2));
      }
      if (k - 2 >= -1 && k - 2 <= order_) acc = acc + alg_.derivative(term(k - 2));
      acc.a = acc.a - q(k);
      r.push_back(std::move(acc));
    }
    return r;
  }

  /// Sheet-odd part of each P_m, indexed like term().
  std::vector<sqrtq> p_odd() const {
    std::vector<sqrtq> r;
    for (const auto& p : p_) r.push_back(p.odd());
    return r;
  }
  std::vector<sqrtq> p_even() const {
    std::vector<sqrtq> r;
    for (const auto& p : p_) r.push_back(p.even());
    return r;
  }

  /// hbar^k coefficients (k = 0..order) of -1/2 P_od' / P_od.
  std::vector<sqrtq> log_derivative_of_odd() const {
    const auto u = p_odd();
    const std::size_t n = u.size();
    std::vector<sqrtq> v(n);
    v[0] = alg_.inverse(u[0]);
    for (std::size_t j = 1; j < n; ++j) {
      sqrtq acc{};
      for (std::size_t i = 1; i <= j; ++i) acc = acc + alg_.mul(u[i], v[j - i]);
      v[j] = -alg_.mul(v[0], acc);
    }
    std::vector<sqrtq> e;
    const rational_function minus_half(gauss_rational(mpq_class(-1, 2)));
    for (std::size_t k = 0; k + 1 < n; ++k) {
      sqrtq acc{};
      for (std::size_t i = 0; i <= k; ++i) acc = acc + alg_.mul(alg_.derivative(u[i]), v[k - i]);
      e.push_back(alg_.scale(minus_half, acc));
    }
    return e;
  }

 private:
  wkb_series(std::vector<rational_function> q, int order) : alg_(q.at(0)), q_(std::move(q)), order_(order) {}

  void solve() {
    p_.clear();
    p_.push_back(alg_.root());
    for (int m = 0; m <= order_; ++m) {
      // 2 P_{-1} P_m = Q_{m+1} - sum_{m1+m2=m-1, m1,m2>=0} P_{m1} P_{m2} - P'_{m-1}
      sqrtq rhs{q(m + 1), rational_function{}};
      for (int m1 = 0; m1 <= m - 1; ++m1) rhs = rhs - alg_.mul(term(m1), term(m - 1 - m1));
      rhs = rhs - alg_.derivative(term(m - 1));
      p_.push_back(alg_.div_two_root(rhs));
    }
  }

  sqrtq_algebra alg_;
  std::vector<rational_function> q_;
  int order_;
  std::vector<sqrtq> p_;
};

/// A closed polyline on the base with a chosen value of sqrt(Q_0) at its start.
struct cycle {
  enum class kind { pull_back, voros_edge, other };
  std::string id;
  std::vector<cplx> path;
  cplx sqrt_start;
  kind type = kind::other;

  cycle reversed() const {
    cycle c = *this;
    std::reverse(c.path.begin(), c.path.end());
    return c;
  }
};

struct order_value {
  int order;
  cplx value;
};

inline std::vector<cplx> circle_path(cplx center, double radius, int n = 128, double start = 0.0) {
  std::vector<cplx> p;
  p.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k < n; ++k) p.push_back(center + std::polar(radius, start + 2.0 * M_PI * k / n));
  p.push_back(p.front());
  return p;
}

/// Numerical integration of a + b sqrt(Q_0) along polylines, continuing the
/// branch of sqrt(Q_0) by proximity on pieces shorter than a quarter of the
/// distance to the nearest singular point.
class contour_integrator {
 public:
  contour_integrator(const rational_function& q0, std::vector<cplx> singular, double tol = 1e-12)
      : q0_(q0.compile()), singular_(std::move(singular)), tol_(tol) {}

  static std::vector<cplx> singular_points_of(const std::vector<rational_function>& fs) {
    std::vector<cplx> pts;
    for (const auto& f : fs) {
      if (f.is_zero()) continue;
      for (const auto& p : {f.num(), f.den()})
        if (p.degree() > 0)
          for (auto r : polynomial_roots(p.to_complex())) pts.push_back(r);
    }
    return pts;
  }

  /// Integral along path; returns value and the continued sqrt(Q_0) at the end.
  std::pair<cplx, cplx> integrate(const sqrtq& x, const std::vector<cplx>& path, cplx sqrt_start) const {
    const auto a = x.a.compile();
    const auto b = x.b.compile();
    const bool has_a = !x.a.is_zero(), has_b = !x.b.is_zero();
    cplx total{};
    cplx root = sqrt_start;
    check_branch(path.front(), root);
    for (std::size_t s = 1; s < path.size(); ++s) {
      const cplx z0 = path[s - 1], z1 = path[s];
      double t = 0.0;
      const double len = std::abs(z1 - z0);
      if (len == 0.0) continue;
      while (t < 1.0) {
        const cplx here = z0 + t * (z1 - z0);
        const double d = distance(here);
        if (d < 1e-12 * std::max(1.0, std::abs(here))) throw geometry_error("contour passes through a singular point");
        const double dt = std::min(1.0 - t, 0.25 * d / len);
        const cplx p0 = here, p1 = z0 + (t + dt) * (z1 - z0);
        const cplx mid_root = branch_near(0.5 * (p0 + p1), root);
        auto f = [&](double u) {
          const cplx z = p0 + u * (p1 - p0);
          cplx v{};
          if (has_a) v += a(z);
          if (has_b) v += b(z) * branch_near(z, mid_root);
          return v * (p1 - p0);
        };
        double err = 0.0;
        const cplx piece = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, tol_, &err);
        if (!(err <= 1e-8 * std::max(1.0, std::abs(piece)))) throw numeric_error("contour quadrature did not converge");
        total += piece;
        root = branch_near(p1, mid_root);
        t += dt;
      }
    }
    return {total, root};
  }

  cplx branch_near(cplx z, cplx ref) const {
    const cplx r = std::sqrt(q0_(z));
    return std::abs(r - ref) <= std::abs(r + ref) ? r : -r;
  }

 private:
  double distance(cplx z) const {
    double d = std::numeric_limits<double>::infinity();
    for (auto p : singular_) d = std::min(d, std::abs(z - p));
    return d;
  }
  void check_branch(cplx z, cplx root) const {
    const cplx q = q0_(z);
    if (std::abs(root * root - q) > 1e-8 * std::max(1.0, std::abs(q)))
      throw input_error("cycle start value is not a square root of Q_0");
  }

  compiled_rational q0_;
  std::vector<cplx> singular_;
  double tol_;
};

inline contour_integrator make_integrator(const wkb_series& w) {
  std::vector<rational_function> fs{w.algebra().q0()};
  for (int m = -1; m <= w.order(); ++m) {
    fs.push_back(w.term(m).a);
    fs.push_back(w.term(m).b);
  }
  return contour_integrator(w.algebra().q0(), contour_integrator::singular_points_of(fs));
}

/// Per-order contour integrals of the odd part of P_m along the cycle
/// (orders with identically vanishing odd part are skipped, except -1).
inline std::vector<order_value> voros_symbol(const wkb_series& w, const cycle& gamma, int order) {
  if (order > w.order()) throw config_error("voros_symbol: order exceeds WKB series order");
  if (gamma.path.size() < 2 || std::abs(gamma.path.front() - gamma.path.back()) > 1e-12 * std::max(1.0, std::abs(gamma.path.front())))
    throw input_error("voros_symbol: cycle must be a closed polyline");
  const auto integ = make_integrator(w);
  std::vector<order_value> out;
  for (int m = -1; m <= order; ++m) {
    const sqrtq od = w.term(m).odd();
    if (od.is_zero() && m != -1) continue;
    out.push_back({m, integ.integrate(od, gamma.path, gamma.sqrt_start).first});
  }
  return out;
}

inline cplx voros_sum(const std::vector<order_value>& v, cplx hbar) {
  cplx s{};
  for (const auto& t : v) s += t.value * std::pow(hbar, t.order);
  return s;
}

/// Loop around the segment [v1, v2] on the double cover, starting on the branch
/// sqrt(Q_0) ~ sign * principal sqrt at the start point.
inline cycle edge_cycle(const spectral_data& s, cplx v1, cplx v2, int sign = 1, int n = 256) {
  const cplx mid = 0.5 * (v1 + v2);
  const double h = 0.5 * std::abs(v2 - v1);
  const cplx dir = (v2 - v1) / std::abs(v2 - v1);
  double clear = h;
  for (auto p : s.singular_points()) {
    if (std::abs(p - v1) < 1e-12 || std::abs(p - v2) < 1e-12) continue;
    const double t = std::clamp(std::real((p - v1) * std::conj(v2 - v1)) / (4.0 * h * h), 0.0, 1.0);
    clear = std::min(clear, 0.5 * std::abs(v1 + t * (v2 - v1) - p));
  }
  std::vector<cplx> path;
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    path.push_back(mid + dir * cplx((h + clear) * std::cos(th), clear * std::sin(th)));
  }
  path.push_back(path.front());
  const cplx root = std::sqrt(s.schrodinger_q().at(0)(path.front()));
  return {"edge", std::move(path), sign >= 0 ? root : -root, cycle::kind::voros_edge};
}

/// Minimal counterclockwise loop around the turning point v starting and ending at z.
inline std::vector<cplx> turning_point_loop(const spectral_data& s, cplx v, cplx z, int n = 128) {
  double r = std::numeric_limits<double>::infinity();
  for (auto p : s.singular_points())
    if (std::abs(p - v) > 1e-12) r = std::min(r, 0.5 * std::abs(p - v));
  if (!std::isfinite(r)) r = std::max(1.0, std::abs(z - v));
  const double dz = std::abs(z - v);
  if (dz == 0.0) throw geometry_error("turning_point_loop: z coincides with the turning point");
  const double start = std::arg(z - v);
  if (dz <= r) return circle_path(v, dz, n, start);
  std::vector<cplx> path{z};
  for (auto p : circle_path(v, r, n, start)) path.push_back(p);
  path.push_back(z);
  return path;
}

/// Regularized integral from the turning point v to z of P_od, order by order,
/// evaluated as a half loop integral.  The counterclockwise loop from z equals
/// -2 times the integral from v to z on the starting sheet.
inline std::vector<order_value> turning_point_normalization(const wkb_series& w, const spectral_data& s, cplx v, cplx z,
                                                           cplx sqrt_at_z, int order) {
  const auto loop = turning_point_loop(s, v, z);
  const auto integ = make_integrator(w);
  std::vector<order_value> out;
  for (int m = -1; m <= order; ++m) {
    const sqrtq od = w.term(m).odd();
    if (od.is_zero() && m != -1) continue;
    out.push_back({m, -0.5 * integ.integrate(od, loop, sqrt_at_z).first});
  }
  return out;
}

inline nlohmann::json to_json_value(const std::string& id, const std::vector<order_value>& v) {
  nlohmann::json orders = nlohmann::json::array();
  for (const auto& t : v) orders.push_back({t.order, t.value.real(), t.value.imag()});
  return {{"cycle", id}, {"orders", orders}};
}

}  // namespace exwkb
