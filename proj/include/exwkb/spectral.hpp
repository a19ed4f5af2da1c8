#pragma once

// Spectral data of an hbar-connection given by its characteristic polynomial
//   xi^n + B_1 xi^{n-1} + ... + B_n,   B_k = sum_i B_{k,i} hbar^i,
// on the Riemann sphere: turning points, poles, sheets and their continuation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/rational.hpp"
#include "exwkb/roots.hpp"

namespace exwkb {

struct root_with_multiplicity {
  cplx z;
  int multiplicity;
};

/// Numeric roots of an exact polynomial together with exact multiplicities
/// (from the square-free decomposition).
inline std::vector<root_with_multiplicity> roots_with_multiplicity(const polynomial& p) {
  std::vector<root_with_multiplicity> out;
  const auto factors = p.square_free_factors();
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (factors[k].degree() < 1) continue;
    for (const auto& r : polynomial_roots(factors[k].to_complex()))
      out.push_back({r, static_cast<int>(k + 1)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
    return a.z.imag() < b.z.imag();
  });
  return out;
}

/// Order of vanishing (>0) or pole (<0) of f at a numeric point p.
inline int order_at(const rational_function& f, cplx p, double tol = 1e-8) {
  if (f.is_zero()) return std::numeric_limits<int>::max();
  auto mult = [&](const polynomial& q) {
    for (const auto& r : roots_with_multiplicity(q))
      if (std::abs(r.z - p) <= tol * std::max(1.0, std::abs(p))) return r.multiplicity;
    return 0;
  };
  return mult(f.num()) - mult(f.den());
}

/// Order at infinity of the k-differential f (dz)^k: negative means a pole.
/// Under w = 1/z, f(z) dz^k = f(1/w) (-1)^k w^{-2k} dw^k.
inline int differential_order_at_infinity(const rational_function& f, int k) {
  if (f.is_zero()) return std::numeric_limits<int>::max();
  return -(f.degree() + 2 * k);
}

struct pole_info {
  cplx z;
  bool at_infinity = false;
  int order = 0;
};

struct turning_point_info {
  cplx z;
  /// Multiplicity of z as a zero of the discriminant.
  int disc_multiplicity = 1;
  /// Number of sheets meeting at z.
  int colliding_sheets = 2;
  bool simple() const { return disc_multiplicity == 1 && colliding_sheets == 2; }
};

struct sheet_labeling {
  cplx base;
  std::vector<cplx> values;
};

class continuation_error : public numeric_error {
 public:
  explicit continuation_error(const std::string& w) : numeric_error(w) {}
};

class spectral_data {
 public:
  /// Schrodinger form ((hbar d)^2 - Q) psi = 0 with Q = sum_i q[i] hbar^i.
  static spectral_data schrodinger(std::vector<rational_function> q, cplx hbar = 1.0) {
    if (q.empty()) q.emplace_back();
    spectral_data s;
    s.rank_ = 2;
    s.q_ = q;
    s.b_.resize(2);
    s.b_[0] = {rational_function{}};
    for (const auto& qi : q) s.b_[1].push_back(-qi);
    s.hbar_ = hbar;
    s.finish();
    return s;
  }

  /// General monic characteristic polynomial; b[k-1][i] = B_{k,i}.
  static spectral_data from_charpoly(int rank, std::vector<std::vector<rational_function>> b, cplx hbar = 1.0) {
    if (rank < 1) throw input_error("rank must be positive");
    b.resize(static_cast<std::size_t>(rank));
    for (auto& bk : b)
      if (bk.empty()) bk.emplace_back();
    spectral_data s;
    s.rank_ = rank;
    s.b_ = std::move(b);
    s.hbar_ = hbar;
    // Rank 2 with B_1 = 0 is Schrodinger form with Q = -B_2.
    if (rank == 2 && std::all_of(s.b_[0].begin(), s.b_[0].end(), [](const auto& f) { return f.is_zero(); })) {
      for (const auto& f : s.b_[1]) s.q_.push_back(-f);
    }
    s.finish();
    return s;
  }

  static spectral_data from_json(const nlohmann::json& j);

  spectral_data with_hbar(cplx hbar) const {
    spectral_data s(*this);
    s.hbar_ = hbar;
    return s;
  }

  int rank() const { return rank_; }
  cplx hbar() const { return hbar_; }
  bool is_schrodinger() const { return !q_.empty(); }
  /// Q_0, Q_1, ... of the Schrodinger form (empty otherwise).
  const std::vector<rational_function>& schrodinger_q() const { return q_; }
  const rational_function& leading(int k) const { return b_[static_cast<std::size_t>(k - 1)][0]; }
  const std::vector<std::vector<rational_function>>& coefficients() const { return b_; }

  const rational_function& discriminant() const { return disc_; }
  const std::vector<turning_point_info>& turning_points() const { return tps_; }
  const std::vector<pole_info>& poles() const { return poles_; }

  /// Turning-point / pole exclusion radius.
  double exclusion_radius() const { return delta_tp_; }
  void set_exclusion_radius(double r) { delta_tp_ = r; }

  /// Coefficients in xi, low-to-high, of the leading-order charpoly at z.
  std::vector<cplx> charpoly_at(cplx z) const {
    std::vector<cplx> c(static_cast<std::size_t>(rank_) + 1);
    c[static_cast<std::size_t>(rank_)] = 1.0;
    for (int k = 1; k <= rank_; ++k) c[static_cast<std::size_t>(rank_ - k)] = fast_[static_cast<std::size_t>(k - 1)](z);
    return c;
  }

  /// Unordered sheet values xi_i(z).
  std::vector<cplx> sheet_values(cplx z) const { return polynomial_roots(charpoly_at(z)); }

  /// Finite points to keep away from: turning points and finite poles.
  std::vector<cplx> singular_points() const {
    std::vector<cplx> pts;
    for (const auto& t : tps_) pts.push_back(t.z);
    for (const auto& p : poles_)
      if (!p.at_infinity) pts.push_back(p.z);
    return pts;
  }

  double distance_to_singularities(cplx z) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : singular_points()) d = std::min(d, std::abs(z - p));
    return d;
  }

  /// Scale of the finite configuration, max(|turning points|, |finite poles|, 1).
  double configuration_scale() const {
    double s = 1.0;
    for (const auto& p : singular_points()) s = std::max(s, std::abs(p));
    return s;
  }

  /// Sheets at base point, ordered by (real, imag).
  sheet_labeling labeling_at(cplx base) const {
    auto v = sheet_values(base);
    if (min_separation(v) <= 1e-10 * std::max(1.0, max_abs(v)))
      throw continuation_error("labeling base point is a branch point");
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
      if (std::abs(a.real() - b.real()) > 1e-12 * std::max(1.0, std::abs(a.real()))) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    return {base, std::move(v)};
  }

  /// Continue the given sheet values from path.front() along the polyline.
  std::vector<cplx> continue_values(std::vector<cplx> values, const std::vector<cplx>& path,
                                    int max_depth = 40) const {
    for (std::size_t s = 1; s < path.size(); ++s) values = continue_segment(std::move(values), path[s - 1], path[s], max_depth);
    return values;
  }

  /// Sheet values at z ordered consistently with the labeling (straight-segment continuation).
  std::vector<cplx> sheets_at(const sheet_labeling& lab, cplx z) const {
    return continue_values(lab.values, {lab.base, z});
  }

  /// Permutation induced by continuation along the path: perm[k] is the
  /// label at the endpoint of the sheet that started with label k.
  std::vector<int> continue_sheets(const sheet_labeling& lab, const std::vector<cplx>& path) const {
    if (path.empty()) throw input_error("continue_sheets: empty path");
    const auto start = path.front() == lab.base ? lab.values : sheets_at(lab, path.front());
    const auto end = continue_values(start, path);
    const auto ref = path.back() == lab.base ? lab.values : sheets_at(lab, path.back());
    return match_labels(end, ref);
  }

  /// Index of the value in `ref` nearest to each entry of `v`; must be a bijection.
  static std::vector<int> match_labels(const std::vector<cplx>& v, const std::vector<cplx>& ref) {
    std::vector<int> perm(v.size(), -1);
    std::vector<bool> used(ref.size(), false);
    for (std::size_t k = 0; k < v.size(); ++k) {
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        const double d = std::abs(v[k] - ref[j]);
        if (d < best) {
          best = d;
          arg = static_cast<int>(j);
        }
      }
      if (arg < 0 || used[static_cast<std::size_t>(arg)]) throw continuation_error("ambiguous sheet matching");
      used[static_cast<std::size_t>(arg)] = true;
      perm[k] = arg;
    }
    return perm;
  }

 private:
  static double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (auto x : v) m = std::max(m, std::abs(x));
    return m;
  }

  std::vector<cplx> continue_segment(std::vector<cplx> values, cplx a, cplx b, int max_depth) const {
    const double len = std::abs(b - a);
    if (len == 0.0) return values;
    // Reject segments passing through an exclusion disk.
    for (const auto& p : singular_points()) {
      const double t = std::clamp(std::real((p - a) * std::conj(b - a)) / (len * len), 0.0, 1.0);
      if (std::abs(a + t * (b - a) - p) < delta_tp_)
        throw continuation_error("continuation path passes within the exclusion radius of a singular point");
    }
    double t = 0.0;
    double h = 0.125;
    int halvings = 0;
    while (t < 1.0) {
      const double step = std::min(h, 1.0 - t);
      const cplx z = a + (t + step) * (b - a);
      auto next = polish_roots(charpoly_at(z), values);
      const double sep = min_separation(values);
      bool ok = true;
      double drift = 0.0;
      try {
        const auto perm = match_labels(values, next);
        std::vector<cplx> ordered(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
          ordered[k] = next[static_cast<std::size_t>(perm[k])];
          drift = std::max(drift, std::abs(ordered[k] - values[k]));
        }
        if (3.0 * drift > sep) ok = false;
        if (ok) next = std::move(ordered);
      } catch (const continuation_error&) {
        ok = false;
      }
      if (!ok) {
        h = step / 2.0;
        if (++halvings > max_depth) throw continuation_error("sheet continuation: step refinement failed");
        continue;
      }
      values = std::move(next);
      t += step;
      halvings = 0;
      if (3.0 * drift < 0.25 * sep) h = std::min(0.25, step * 2.0);
    }
    return values;
  }

  void finish();

  int rank_ = 0;
  std::vector<std::vector<rational_function>> b_;
  std::vector<rational_function> q_;
  cplx hbar_{1.0, 0.0};
  std::vector<compiled_rational> fast_;
  rational_function disc_;
  std::vector<turning_point_info> tps_;
  std::vector<pole_info> poles_;
  double delta_tp_ = 1e-3;
};

/// Discriminant in xi of a monic polynomial with rational-function coefficients
/// (coeffs low-to-high, last one equal to 1): (-1)^{n(n-1)/2} Res(P, P').
inline rational_function discriminant_of(const std::vector<rational_function>& p) {
  const int n = static_cast<int>(p.size()) - 1;
  if (n < 1) return rational_function(1);
  if (n == 1) return rational_function(1);
  std::vector<rational_function> dp;
  for (int k = 1; k <= n; ++k) dp.push_back(p[static_cast<std::size_t>(k)] * rational_function(static_cast<long>(k)));
  // Sylvester matrix of P (degree n) and P' (degree n-1), size 2n-1.
  const int m = 2 * n - 1;
  std::vector<std::vector<rational_function>> a(static_cast<std::size_t>(m), std::vector<rational_function>(static_cast<std::size_t>(m)));
  for (int r = 0; r < n - 1; ++r)
    for (int k = 0; k <= n; ++k) a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r + k)] = p[static_cast<std::size_t>(n - k)];
  for (int r = 0; r < n; ++r)
    for (int k = 0; k <= n - 1; ++k)
      a[static_cast<std::size_t>(n - 1 + r)][static_cast<std::size_t>(r + k)] = dp[static_cast<std::size_t>(n - 1 - k)];
  rational_function det(1);
  for (int c = 0; c < m; ++c) {
    int piv = -1;
    for (int r = c; r < m; ++r)
      if (!a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].is_zero()) {
        piv = r;
        break;
      }
    if (piv < 0) return rational_function{};
    if (piv != c) {
      std::swap(a[static_cast<std::size_t>(piv)], a[static_cast<std::size_t>(c)]);
      det = -det;
    }
    const auto pv = a[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    det = det * pv;
    for (int r = c + 1; r < m; ++r) {
      const auto& arc = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (arc.is_zero()) continue;
      const auto f = arc / pv;
      for (int k = c; k < m; ++k)
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] =
            a[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] - f * a[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
    }
  }
  if ((n * (n - 1) / 2) % 2 == 1) det = -det;
  return det;
}

inline void spectral_data::finish() {
  fast_.clear();
  for (int k = 1; k <= rank_; ++k) fast_.push_back(leading(k).compile());
  std::vector<rational_function> p(static_cast<std::size_t>(rank_) + 1);
  p[static_cast<std::size_t>(rank_)] = rational_function(1);
  for (int k = 1; k <= rank_; ++k) p[static_cast<std::size_t>(rank_ - k)] = leading(k);
  disc_ = rank_ >= 2 ? discriminant_of(p) : rational_function(1);
  if (rank_ >= 2 && disc_.is_zero()) throw degenerate_error("discriminant vanishes identically");

  tps_.clear();
  if (rank_ >= 2) {
    for (const auto& r : roots_with_multiplicity(disc_.num())) {
      turning_point_info t;
      t.z = r.z;
      t.disc_multiplicity = r.multiplicity;
      const auto roots = polynomial_roots(charpoly_at(r.z));
      double scale = 1.0;
      for (auto x : roots) scale = std::max(scale, std::abs(x));
      int colliding = 0;
      for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = 0; j < roots.size(); ++j)
          if (i != j && std::abs(roots[i] - roots[j]) <= 1e-5 * scale) {
            ++colliding;
            break;
          }
      t.colliding_sheets = colliding;
      tps_.push_back(t);
    }
  }

  poles_.clear();
  std::vector<root_with_multiplicity> finite;
  for (int k = 1; k <= rank_; ++k)
    for (const auto& r : roots_with_multiplicity(leading(k).den())) {
      bool merged = false;
      for (auto& f : finite)
        if (std::abs(f.z - r.z) <= 1e-9 * std::max(1.0, std::abs(r.z))) {
          f.multiplicity = std::max(f.multiplicity, r.multiplicity);
          merged = true;
        }
      if (!merged) finite.push_back(r);
    }
  for (const auto& f : finite) poles_.push_back({f.z, false, f.multiplicity});
  int inf_order = 0;
  for (int k = 1; k <= rank_; ++k) {
    const auto& f = leading(k);
    if (f.is_zero()) continue;
    inf_order = std::max(inf_order, -differential_order_at_infinity(f, k));
  }
  if (inf_order > 0) poles_.push_back({cplx{}, true, inf_order});

  const auto pts = singular_points();
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
  delta_tp_ = 1e-3 * (std::isfinite(dmin) ? dmin : configuration_scale());
}

namespace detail {

inline gauss_rational parse_scalar(const nlohmann::json& v) {
  auto one = [](const nlohmann::json& x) -> mpq_class {
    if (x.is_string()) {
      try {
        return mpq_class(x.get<std::string>());
      } catch (const std::invalid_argument&) {
        throw input_error("malformed rational literal: " + x.get<std::string>());
      }
    }
    if (x.is_number_integer()) return mpq_class(x.get<long>());
    if (x.is_number()) return mpq_class(x.get<double>());
    throw input_error("expected a number or rational string");
  };
  if (v.is_array()) {
    if (v.size() != 2) throw input_error("complex coefficient must be [re, im]");
    return {one(v[0]), one(v[1])};
  }
  return {one(v), 0};
}

inline polynomial parse_poly(const nlohmann::json& arr) {
  if (!arr.is_array()) throw input_error("polynomial must be an array of coefficients (low-to-high)");
  std::vector<gauss_rational> c;
  for (const auto& v : arr) c.push_back(parse_scalar(v));
  return polynomial(std::move(c));
}

}  // namespace detail

/// {"rank": n, "coeffs": [{"index": k, "hbar_order": i, "num": [...], "den": [...]}, ...], "hbar": [re, im]}.
/// For rank 2 an entry without "index" is a Schrodinger Q_i term.
inline spectral_data spectral_data::from_json(const nlohmann::json& j) {
  try {
    const int rank = j.at("rank").get<int>();
    if (rank < 1) throw input_error("rank must be positive");
    cplx hbar{1.0, 0.0};
    if (j.contains("hbar")) hbar = detail::parse_scalar(j.at("hbar")).to_complex();
    if (hbar == cplx{}) throw input_error("hbar must be nonzero");
    std::vector<rational_function> q;
    std::vector<std::vector<rational_function>> b(static_cast<std::size_t>(rank));
    bool q_form = false;
    for (const auto& e : j.at("coeffs")) {
      const int order = e.value("hbar_order", 0);
      if (order < 0) throw input_error("negative hbar_order not supported");
      const polynomial num = detail::parse_poly(e.at("num"));
      const polynomial den = e.contains("den") ? detail::parse_poly(e.at("den")) : polynomial::constant(1);
      if (den.is_zero()) throw input_error("zero denominator");
      rational_function f(num, den);
      auto put = [&](std::vector<rational_function>& v) {
        if (v.size() <= static_cast<std::size_t>(order)) v.resize(static_cast<std::size_t>(order) + 1);
        v[static_cast<std::size_t>(order)] = v[static_cast<std::size_t>(order)] + f;
      };
      if (e.contains("index")) {
        const int k = e.at("index").get<int>();
        if (k < 1 || k > rank) throw input_error("coefficient index out of range");
        put(b[static_cast<std::size_t>(k - 1)]);
      } else {
        if (rank != 2) throw input_error("coefficient entries need an \"index\" unless rank is 2");
        q_form = true;
        put(q);
      }
    }
    spectral_data s = q_form ? spectral_data::schrodinger(q, hbar) : from_charpoly(rank, std::move(b), hbar);
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw input_error(std::string("spectral data JSON: ") + ex.what());
  }
}

struct check_report {
  bool ok = true;
  std::vector<std::string> diagnostics;
};

namespace detail {

/// Pole/zero data of the quadratic differential q dz^2 on the sphere:
/// (point, order) pairs, order < 0 for poles.
inline std::vector<std::pair<pole_info, int>> quadratic_divisor(const rational_function& q) {
  std::vector<std::pair<pole_info, int>> out;
  for (const auto& r : roots_with_multiplicity(q.num())) out.push_back({{r.z, false, 0}, r.multiplicity});
  for (const auto& r : roots_with_multiplicity(q.den())) out.push_back({{r.z, false, r.multiplicity}, -r.multiplicity});
  const int inf = differential_order_at_infinity(q, 2);
  if (inf != 0) out.push_back({{cplx{}, true, inf < 0 ? -inf : 0}, inf});
  return out;
}

inline std::string point_name(const pole_info& p) {
  if (p.at_infinity) return "infinity";
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.6g%+.6gi)", p.z.real(), p.z.imag());
  return buf;
}

/// Leading Laurent coefficient of f at a finite point p where f has a pole of order m,
/// or at infinity for the quadratic differential f dz^2.
inline cplx leading_laurent(const rational_function& f, const pole_info& p, int m) {
  if (p.at_infinity) {
    const auto n = f.num().leading().to_complex();
    const auto d = f.den().leading().to_complex();
    return n / d;
  }
  polynomial d = f.den();
  double fact = 1.0;
  for (int k = 0; k < m; ++k) {
    d = d.derivative();
    fact *= (k + 1);
  }
  return f.num()(p.z) / (d(p.z) / fact);
}

}  // namespace detail

/// Pole/zero conditions on the quadratic differential of a rank-2 curve:
/// all poles of order >= 2, at least one pole, at least one branch point.
inline check_report check_weakly_gmn(const spectral_data& s) {
  if (s.rank() != 2) throw input_error("check_weakly_gmn: rank 2 only");
  const auto b1 = s.leading(1);
  const rational_function q = b1 * b1 * rational_function(gauss_rational(mpq_class(1, 4))) - s.leading(2);
  check_report rep;
  bool has_pole = false, has_branch = false;
  for (const auto& [pt, ord] : detail::quadratic_divisor(q)) {
    if (ord < 0) {
      if (-ord < 2) {
        rep.ok = false;
        rep.diagnostics.push_back("pole of order " + std::to_string(-ord) + " at " + detail::point_name(pt) +
                                  " violates the order >= 2 clause");
      } else {
        has_pole = true;
      }
    }
    if (ord % 2 != 0) has_branch = true;
  }
  if (!has_pole) {
    rep.ok = false;
    rep.diagnostics.push_back("no pole of order >= 2");
  }
  if (!has_branch) {
    rep.ok = false;
    rep.diagnostics.push_back("no branch point");
  }
  return rep;
}

/// Pole-order conditions on the higher hbar corrections of a Schrodinger potential.
inline check_report check_wkb_regular(const spectral_data& s) {
  if (!s.is_schrodinger()) throw input_error("check_wkb_regular: Schrodinger form required");
  const auto& q = s.schrodinger_q();
  check_report rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.diagnostics.push_back(std::move(msg));
  };
  auto pole_order = [](const rational_function& f, const pole_info& p) {
    if (f.is_zero()) return 0;
    if (p.at_infinity) return std::max(0, -differential_order_at_infinity(f, 2));
    return std::max(0, -order_at(f, p.z));
  };
  std::vector<pole_info> q0_poles;
  for (const auto& [pt, ord] : detail::quadratic_divisor(q[0]))
    if (ord < 0) q0_poles.push_back({pt.z, pt.at_infinity, -ord});
  for (std::size_t i = 1; i < q.size(); ++i) {
    for (const auto& [pt, ord] : detail::quadratic_divisor(q[i])) {
      if (ord >= 0) continue;
      const bool known = std::any_of(q0_poles.begin(), q0_poles.end(), [&](const pole_info& p) {
        return p.at_infinity == pt.at_infinity && (p.at_infinity || std::abs(p.z - pt.z) <= 1e-8 * std::max(1.0, std::abs(p.z)));
      });
      if (!known) fail("Q_" + std::to_string(i) + " has a pole at " + detail::point_name(pt) + " which is not a pole of Q_0");
    }
  }
  for (const auto& p : q0_poles) {
    const int m = p.order;
    for (std::size_t i = 1; i < q.size(); ++i) {
      const int oi = pole_order(q[i], p);
      if (m >= 3) {
        if (2 * oi >= 2 + m)
          fail("Q_" + std::to_string(i) + " has pole order " + std::to_string(oi) + " >= 1 + m/2 at " +
               detail::point_name(p) + " (m = " + std::to_string(m) + ")");
      } else if (m == 2) {
        if (i == 2) {
          if (oi != 2) {
            fail("Q_2 must have a double pole at " + detail::point_name(p));
          } else {
            const cplx lead = detail::leading_laurent(q[2], p, 2);
            if (std::abs(lead + 0.25) > 1e-10)
              fail("Q_2 leading coefficient at " + detail::point_name(p) + " is not -1/4");
          }
        } else if (oi > 1) {
          fail("Q_" + std::to_string(i) + " has more than a simple pole at " + detail::point_name(p));
        }
      }
    }
    if (m == 2 && q.size() < 3) fail("Q_2 must have a double pole at " + detail::point_name(p));
  }
  return rep;
}

}  // namespace exwkb
