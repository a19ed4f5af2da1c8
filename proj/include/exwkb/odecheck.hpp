#pragma once

// Direct integration of ((hbar d)^2 - Q) psi = 0 at a numeric hbar, framings
// at poles from recessive solutions, cross-ratios and the Voros comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/spectral.hpp"
#include "exwkb/wkb.hpp"

namespace exwkb {

struct ode_options {
  double rel_tol = 1e-12;
  double abs_tol = 1e-14;
  long max_steps = 2000000;
};

/// Q(z, hbar) for a Schrodinger operator, evaluated in double precision.
class potential {
 public:
  explicit potential(const spectral_data& s) {
    if (!s.is_schrodinger()) throw input_error("odecheck needs Schrodinger form");
    for (const auto& q : s.schrodinger_q()) {
      q_.push_back(q.compile());
      dq_.push_back(q.derivative().compile());
    }
  }
  cplx operator()(cplx z, cplx hbar) const {
    cplx acc{};
    for (std::size_t k = q_.size(); k-- > 0;) acc = acc * hbar + q_[k](z);
    return acc;
  }
  cplx q0(cplx z) const { return q_[0](z); }
  cplx dq0(cplx z) const { return dq_[0](z); }

 private:
  std::vector<compiled_rational> q_, dq_;
};

/// Transfer matrix of Y = (psi, hbar psi') along a polyline:
/// Y' = [[0, 1/hbar], [Q/hbar, 0]] Y.
namespace detail {

/// Error relative to the size of each fundamental column rather than each
/// real component, so near-zero components of a growing solution do not stall.
struct column_error_checker {
  using value_type = double;
  using algebra_type = boost::numeric::odeint::array_algebra;
  double eps_abs = 1e-14, eps_rel = 1e-12;

  template <class State, class Deriv, class Err, class Time>
  double error(algebra_type&, const State& x, const Deriv&, Err& err, Time) const {
    double e = 0.0;
    for (int c = 0; c < 2; ++c) {
      double size = 0.0, worst = 0.0;
      for (int k = 0; k < 4; ++k) {
        size = std::max(size, std::abs(x[4 * c + k]));
        worst = std::max(worst, std::abs(err[4 * c + k]));
      }
      e = std::max(e, worst / (eps_abs + eps_rel * size));
    }
    return e;
  }
};

}  // namespace detail

inline Eigen::Matrix2cd integrate_schrodinger(const potential& q, const std::vector<cplx>& path, cplx hbar,
                                              ode_options opt = {}) {
  namespace ode = boost::numeric::odeint;
  using state = std::array<double, 8>;
  if (hbar == cplx{}) throw config_error("hbar must be nonzero");
  Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
  using base = ode::runge_kutta_fehlberg78<state>;
  ode::controlled_runge_kutta<base, detail::column_error_checker> stepper(detail::column_error_checker{opt.abs_tol, opt.rel_tol});
  for (std::size_t s = 1; s < path.size(); ++s) {
    const cplx z0 = path[s - 1], dz = path[s] - path[s - 1];
    if (dz == cplx{}) continue;
    auto rhs = [&](const state& x, state& dx, double t) {
      const cplx z = z0 + t * dz;
      const cplx qv = q(z, hbar);
      for (int c = 0; c < 2; ++c) {
        const cplx p(x[4 * c], x[4 * c + 1]), d(x[4 * c + 2], x[4 * c + 3]);
        const cplx dp = d / hbar * dz, dd = qv / hbar * p * dz;
        dx[4 * c] = dp.real();
        dx[4 * c + 1] = dp.imag();
        dx[4 * c + 2] = dd.real();
        dx[4 * c + 3] = dd.imag();
      }
    };
    state x{1, 0, 0, 0, 0, 0, 1, 0};
    double t = 0.0, dt = std::min(1.0, 0.01 * std::abs(hbar) / std::max(1e-300, std::abs(dz)));
    long steps = 0;
    while (t < 1.0) {
      if (t + dt > 1.0) dt = 1.0 - t;
      if (stepper.try_step(rhs, x, t, dt) == ode::fail) {
        if (dt < 1e-15) throw numeric_error("ODE step size collapsed");
      }
      if (++steps > opt.max_steps) throw numeric_error("ODE step budget exhausted");
    }
    Eigen::Matrix2cd m;
    m << cplx(x[0], x[1]), cplx(x[4], x[5]), cplx(x[2], x[3]), cplx(x[6], x[7]);
    total = m * total;
  }
  return total;
}

inline Eigen::Matrix2cd integrate_schrodinger(const spectral_data& s, const std::vector<cplx>& path, cplx hbar,
                                              ode_options opt = {}) {
  return integrate_schrodinger(potential(s), path, hbar, opt);
}

struct framing {
  /// Index into spectral_data::poles().
  int pole = 0;
  /// Approach direction (angle) into the pole.
  double direction = 0.0;
  /// Recessive solution (psi, hbar psi') at the common point, unit norm.
  Eigen::Vector2cd vector;
  /// Re of the WKB exponent between the start and the deep point.
  double depth = 0.0;
};

struct framing_options {
  /// Required Re int sqrt(Q_0)/hbar between the moderate and the deep point.
  double depth = 40.0;
  ode_options ode;
};

namespace detail {

inline cplx ray_point(const pole_info& p, double dir, double t) {
  return p.at_infinity ? std::polar(t, dir) : p.z + std::polar(1.0 / t, dir);
}

}  // namespace detail

/// Recessive solution at a pole approached along direction dir, transported to
/// the common point.  The deep start point is pushed out until the WKB exponent
/// exceeds opt.depth; the initial value is the leading WKB solution there.
inline framing framing_at_pole(const spectral_data& s, int pole, double dir, cplx hbar, cplx common,
                               framing_options opt = {}) {
  const auto& p = s.poles().at(static_cast<std::size_t>(pole));
  if (p.order < 3) throw input_error("framing needs a pole of order >= 3");
  const potential q(s);
  const double scale = s.configuration_scale();
  double t0 = p.at_infinity ? 2.0 * scale : 2.0 / std::max(1e-3, s.distance_to_singularities(p.z) > 0 ? s.distance_to_singularities(p.z) : 1.0);
  if (!p.at_infinity) {
    double near = std::numeric_limits<double>::infinity();
    for (auto x : s.singular_points())
      if (std::abs(x - p.z) > 1e-12) near = std::min(near, std::abs(x - p.z));
    t0 = std::isfinite(near) ? 2.0 / near : 1.0;
  }
  // Ray parameter of the common point's distance; the deep point lies beyond it.
  const double dc = p.at_infinity ? std::abs(common) : std::abs(common - p.z);
  const double tc = p.at_infinity ? std::max(dc, 1e-3) : 1.0 / std::max(dc, 1e-12);
  t0 = std::max(t0, tc);
  const cplx a = detail::ray_point(p, dir, t0);
  const auto sq = [&](cplx z, cplx ref) {
    const cplx r = std::sqrt(q.q0(z));
    return std::abs(r - ref) <= std::abs(r + ref) ? r : -r;
  };
  cplx root = std::sqrt(q.q0(a));
  cplx exponent{};
  double t = t0;
  for (int it = 0; it < 200 && std::abs(exponent.real()) < opt.depth; ++it) {
    const double t1 = t * 1.25;
    const int n = 32;
    for (int k = 0; k < n; ++k) {
      const cplx z0 = detail::ray_point(p, dir, t + (t1 - t) * k / n), z1 = detail::ray_point(p, dir, t + (t1 - t) * (k + 1) / n);
      const cplx mid = sq(0.5 * (z0 + z1), root);
      auto f = [&](double u) { return sq(z0 + u * (z1 - z0), mid) * (z1 - z0) / hbar; };
      exponent += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, 0.0, 1.0, 5, 1e-13);
      root = sq(z1, mid);
    }
    t = t1;
  }
  if (std::abs(exponent.real()) < opt.depth) throw numeric_error("framing: WKB exponent does not grow along the ray");
  // psi ~ Q^{-1/4} exp(-int s / hbar) decays toward the pole iff Re int s/hbar grows.
  const cplx s_here = exponent.real() > 0 ? root : -root;
  const cplx zd = detail::ray_point(p, dir, t);
  const cplx q0 = q.q0(zd);
  Eigen::Vector2cd y(1.0, -s_here - hbar * q.dq0(zd) / (4.0 * q0));
  const auto m = integrate_schrodinger(q, {zd, detail::ray_point(p, dir, tc), common}, hbar, opt.ode);
  Eigen::Vector2cd v = m * y;
  v /= v.norm();
  // Fix the phase so that the first nonzero component is real positive.
  const cplx lead = std::abs(v(0)) > 1e-3 ? v(0) : v(1);
  v *= std::conj(lead) / std::abs(lead);
  return {pole, dir, v, std::abs(exponent.real())};
}

inline cplx det2(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) { return a(0) * b(1) - a(1) * b(0); }

/// det(v1 v2) det(v3 v4) / (det(v2 v3) det(v1 v4)), vectors counterclockwise.
inline cplx fg_edge_coordinate(const Eigen::Vector2cd& v1, const Eigen::Vector2cd& v2, const Eigen::Vector2cd& v3,
                               const Eigen::Vector2cd& v4) {
  const cplx num = det2(v1, v2) * det2(v3, v4), den = det2(v2, v3) * det2(v1, v4);
  const double size = v1.norm() * v2.norm() * v3.norm() * v4.norm();
  if (std::abs(den) <= 1e-14 * size || std::abs(num) <= 1e-14 * size) throw numeric_error("degenerate framing pair");
  return num / den;
}

/// Asymptotic directions of Stokes curves into a pole at infinity: the k + 2
/// angles where int sqrt(Q_0) dz / hbar is real, Q_0 ~ a z^k.
inline std::vector<double> marked_directions_at_infinity(const spectral_data& s) {
  if (!s.is_schrodinger()) throw input_error("marked directions need Schrodinger form");
  const auto& q0 = s.schrodinger_q().at(0);
  const int k = q0.num().degree() - q0.den().degree();
  if (k < -1) throw input_error("no irregular pole at infinity");
  const cplx a = q0.num().to_complex().back() / q0.den().to_complex().back();
  const double e = 0.5 * k + 1.0;
  std::vector<double> out;
  for (int m = 0; m < k + 2; ++m) {
    double d = (m * M_PI - std::arg(std::sqrt(a)) + std::arg(s.hbar())) / e;
    d = std::fmod(d, 2.0 * M_PI);
    if (d < 0) d += 2.0 * M_PI;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct fg_sample {
  double hbar;
  cplx x_fg;
  cplx log_minus_x;
  cplx voros;
  double residual;
};

struct fg_report {
  std::vector<fg_sample> samples;
  std::vector<double> ratios;
  /// Expected per-halving ratio 2^{N+1} and the accepted band.
  double expected = 0.0;
  double band_low = 0.0, band_high = 0.0;
  bool decreasing = false;
  bool in_band = false;
  nlohmann::json to_json() const;
};

inline nlohmann::json fg_report::to_json() const {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& s : samples)
    arr.push_back({{"hbar", s.hbar},
                   {"x_fg", {s.x_fg.real(), s.x_fg.imag()}},
                   {"log_minus_x", {s.log_minus_x.real(), s.log_minus_x.imag()}},
                   {"voros", {s.voros.real(), s.voros.imag()}},
                   {"residual", s.residual}});
  j["samples"] = arr;
  j["ratios"] = ratios;
  j["expected_ratio"] = expected;
  j["band"] = {band_low, band_high};
  j["decreasing"] = decreasing;
  j["in_band"] = in_band;
  return j;
}

/// Compares log(-X_FG) of the quadrilateral formed by four directions into the
/// pole at infinity with the truncated Voros sum of gamma at each hbar (real
/// multiples of the phase of s.hbar()).  quad holds the four directions in
/// counterclockwise order, starting at an end of the strip crossed by gamma.
inline fg_report compare_voros_fg(const spectral_data& s, const cycle& gamma, const std::vector<double>& quad,
                                  const std::vector<double>& hbar_moduli, int order, framing_options opt = {},
                                  cplx common = 0.0) {
  if (quad.size() != 4) throw input_error("quadrilateral needs four directions");
  int inf = -1;
  for (std::size_t k = 0; k < s.poles().size(); ++k)
    if (s.poles()[k].at_infinity) inf = static_cast<int>(k);
  if (inf < 0) throw input_error("no pole at infinity");
  const auto w = wkb_series::compute(s, std::max(order, 0));
  const auto v = voros_symbol(w, gamma, order);
  const double phase = std::arg(s.hbar());
  fg_report rep;
  rep.expected = std::pow(2.0, order + 1);
  rep.band_low = rep.expected / 4.0;
  rep.band_high = 4.0 * rep.expected;
  for (double h : hbar_moduli) {
    const cplx hb = std::polar(h, phase);
    std::array<Eigen::Vector2cd, 4> f;
    for (std::size_t k = 0; k < 4; ++k) f[k] = framing_at_pole(s, inf, quad[k], hb, common, opt).vector;
    // X_FG is the cross-ratio times -1.
    const cplx x = -fg_edge_coordinate(f[0], f[1], f[2], f[3]);
    const cplx vs = voros_sum(v, hb);
    cplx lg = std::log(-x);
    const double turns = std::round((vs.imag() - lg.imag()) / (2.0 * M_PI));
    lg += cplx(0.0, 2.0 * M_PI * turns);
    rep.samples.push_back({h, x, lg, vs, std::abs(lg - vs)});
  }
  rep.decreasing = true;
  rep.in_band = true;
  for (std::size_t k = 1; k < rep.samples.size(); ++k) {
    const double r = rep.samples[k - 1].residual / rep.samples[k].residual;
    rep.ratios.push_back(r);
    if (!(rep.samples[k].residual < rep.samples[k - 1].residual)) rep.decreasing = false;
    if (!(r >= rep.band_low && r <= rep.band_high)) rep.in_band = false;
  }
  return rep;
}

}  // namespace exwkb
