#pragma once

// Stokes curves Im int (zeta_i - zeta_j) dz = 0 traced in the mass parameter
// s = Re int (zeta_i - zeta_j) dz, i.e. dz/ds = hbar / (xi_i - xi_j).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/roots.hpp"
#include "exwkb/spectral.hpp"

namespace exwkb {

class unsupported_turning_point : public degenerate_error {
 public:
  explicit unsupported_turning_point(const std::string& w) : degenerate_error(w) {}
};

struct curve_sample {
  cplx z;
  double mass;
  /// All sheet values, in the curve's own continued order.
  std::vector<cplx> sheets;
};

enum class terminus { none, pole, mass_cap, turning_point_hit, window, step_collapse };

inline const char* terminus_name(terminus t) {
  switch (t) {
    case terminus::pole: return "pole";
    case terminus::mass_cap: return "mass-cap";
    case terminus::turning_point_hit: return "turning-point-hit";
    case terminus::window: return "window";
    case terminus::step_collapse: return "step-collapse";
    default: return "none";
  }
}

struct vertex_ref {
  enum class kind { turning_point, collision };
  kind type = kind::turning_point;
  int index = 0;
  cplx z;
};

struct curve_germ {
  vertex_ref source;
  cplx start;
  double start_mass = 0.0;
  std::vector<cplx> sheets;
  int i = 0;
  int j = 1;
};

struct stokes_curve {
  int id = 0;
  /// Indices into samples[k].sheets: the curve is of type (i, j).
  int i = 0;
  int j = 1;
  vertex_ref source;
  std::vector<curve_sample> samples;
  terminus end = terminus::none;
  int end_vertex = -1;
  std::string diagnostic;

  double mass_begin() const { return samples.front().mass; }
  double mass_end() const { return samples.back().mass; }
  cplx diff(std::size_t k) const { return samples[k].sheets[static_cast<std::size_t>(i)] - samples[k].sheets[static_cast<std::size_t>(j)]; }
};

struct tracer_options {
  double tol = 1e-12;
  /// Upper bound for |dz| per step as a fraction of the configuration scale.
  double max_step_fraction = 0.05;
  /// Germ start radius as a multiple of the exclusion radius.
  double start_radius_factor = 10.0;
  double max_radius = 1e6;
  int max_steps = 200000;
};

/// Ordering helper used everywhere a deterministic sheet order is needed.
inline bool lex_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

class stokes_tracer {
 public:
  explicit stokes_tracer(const spectral_data& s, tracer_options opt = {}) : s_(s), opt_(opt) {
    scale_ = s_.configuration_scale();
    if (!(opt_.max_radius > 0.0)) opt_.max_radius = 1e6;
  }

  const spectral_data& spectral() const { return s_; }
  cplx hbar() const { return s_.hbar(); }
  const tracer_options& options() const { return opt_; }
  double scale() const { return scale_; }

  /// Sheet values at z matched to the reference values (same order).
  std::vector<cplx> match_sheets(cplx z, const std::vector<cplx>& ref) const {
    auto roots = s_.rank() <= 2 ? s_.sheet_values(z) : polish_roots(s_.charpoly_at(z), ref, 12);
    if (s_.rank() > 2 && !roots_ok(z, roots)) roots = s_.sheet_values(z);
    const auto perm = spectral_data::match_labels(ref, roots);
    std::vector<cplx> out(ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) out[k] = roots[static_cast<std::size_t>(perm[k])];
    return out;
  }

  /// The three germs at a simple turning point.
  std::vector<curve_germ> initial_rays(int tp_index) const {
    const auto& tp = s_.turning_points().at(static_cast<std::size_t>(tp_index));
    if (!tp.simple()) throw unsupported_turning_point("turning point is not a simple double branch");
    const cplx v = tp.z;
    const double r0 = opt_.start_radius_factor * s_.exclusion_radius();
    const cplx g1 = local_coefficient(v, 0.1 * r0);
    std::vector<curve_germ> out;
    for (int k = 0; k < 3; ++k) {
      double alpha = (-std::arg(g1) + 2.0 * M_PI * k) / 3.0;
      alpha = refine_direction(v, g1, r0, alpha);
      const cplx z0 = v + std::polar(r0, alpha);
      const cplx m = germ_mass(v, g1, r0, alpha);
      auto roots = s_.sheet_values(z0);
      std::sort(roots.begin(), roots.end(), lex_less);
      const auto [p, q] = closest_pair(roots);
      const cplx d = germ_diff(v, g1, r0, alpha);
      curve_germ g;
      g.source = {vertex_ref::kind::turning_point, tp_index, v};
      g.start = z0;
      g.start_mass = m.real();
      g.sheets = roots;
      if (std::abs(roots[static_cast<std::size_t>(p)] - roots[static_cast<std::size_t>(q)] - d) <=
          std::abs(roots[static_cast<std::size_t>(q)] - roots[static_cast<std::size_t>(p)] - d)) {
        g.i = p;
        g.j = q;
      } else {
        g.i = q;
        g.j = p;
      }
      out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end(), [&](const curve_germ& a, const curve_germ& b) {
      return normalized_angle(a.start - v) < normalized_angle(b.start - v);
    });
    return out;
  }

  /// Germ of a new wall of type (i, j) born at a regular point c.
  curve_germ collision_germ(int collision_index, cplx c, std::vector<cplx> sheets, int i, int j) const {
    curve_germ g;
    g.source = {vertex_ref::kind::collision, collision_index, c};
    g.start = c;
    g.start_mass = 0.0;
    g.sheets = std::move(sheets);
    g.i = i;
    g.j = j;
    return g;
  }

  stokes_curve trace(const curve_germ& germ, double mass_cap) const {
    if (!(mass_cap > 0.0)) throw config_error("mass cap must be positive");
    stokes_curve c;
    c.i = germ.i;
    c.j = germ.j;
    c.source = germ.source;
    c.samples.push_back({germ.start, germ.start_mass, germ.sheets});
    if (germ.start_mass >= mass_cap) {
      c.end = terminus::mass_cap;
      return c;
    }
    namespace ode = boost::numeric::odeint;
    using state = std::array<double, 2>;
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<state>>(opt_.tol, opt_.tol);
    std::vector<cplx> ref = germ.sheets;
    const cplx hb = s_.hbar();
    auto rhs = [&](const state& x, state& dxdt, double) {
      const cplx z(x[0], x[1]);
      const auto sh = match_sheets(z, ref);
      const cplx v = hb / (sh[static_cast<std::size_t>(c.i)] - sh[static_cast<std::size_t>(c.j)]);
      dxdt = {v.real(), v.imag()};
    };
    state x{germ.start.real(), germ.start.imag()};
    double s = germ.start_mass;
    double ds = initial_ds(germ.start, ref, c.i, c.j);
    const double max_dz = opt_.max_step_fraction * scale_;
    for (int step = 0; step < opt_.max_steps; ++step) {
      const cplx z(x[0], x[1]);
      if (auto hit = stop_reason(z, c); hit.first != terminus::none && step > 0) {
        c.end = hit.first;
        c.end_vertex = hit.second;
        return c;
      }
      const double speed = std::abs(hb / (ref[static_cast<std::size_t>(c.i)] - ref[static_cast<std::size_t>(c.j)]));
      const double dist = std::min(s_.distance_to_singularities(z), max_dz / 0.2);
      const double ds_max = 0.2 * dist / speed;
      ds = std::min({ds, ds_max, mass_cap - s});
      if (ds < 1e-15 * std::max(1.0, std::abs(s))) {
        c.end = terminus::step_collapse;
        c.diagnostic = "step size collapsed at mass " + std::to_string(s);
        return c;
      }
      state xn = x;
      double sn = s;
      double dt = ds;
      ode::controlled_step_result res;
      try {
        res = stepper.try_step(rhs, xn, sn, dt);
      } catch (const continuation_error&) {
        ds *= 0.5;
        continue;
      }
      if (res == ode::fail) {
        ds = dt;
        continue;
      }
      const cplx zn(xn[0], xn[1]);
      std::vector<cplx> next;
      try {
        next = match_sheets(zn, ref);
      } catch (const continuation_error&) {
        ds *= 0.5;
        continue;
      }
      double drift = 0.0;
      for (std::size_t k = 0; k < ref.size(); ++k) drift = std::max(drift, std::abs(next[k] - ref[k]));
      if (3.0 * drift > min_separation(ref)) {
        ds = 0.5 * (sn - s);
        continue;
      }
      x = xn;
      const bool at_cap = std::abs(sn - mass_cap) <= 1e-12 * std::max(1.0, mass_cap);
      s = at_cap ? mass_cap : sn;
      ref = next;
      c.samples.push_back({zn, s, ref});
      if (at_cap) {
        c.end = terminus::mass_cap;
        return c;
      }
      ds = dt;
    }
    c.end = terminus::step_collapse;
    c.diagnostic = "step limit reached";
    return c;
  }

  /// Re-integrates from the nearest preceding sample up to mass s.
  curve_sample point_at(const stokes_curve& c, double s) const {
    if (s < c.mass_begin() - 1e-12 || s > c.mass_end() + 1e-12) throw geometry_error("point_at: mass outside traced extent");
    auto it = std::upper_bound(c.samples.begin(), c.samples.end(), s, [](double v, const curve_sample& p) { return v < p.mass; });
    const curve_sample& from = it == c.samples.begin() ? *it : *std::prev(it);
    if (std::abs(from.mass - s) < 1e-15) return from;
    namespace ode = boost::numeric::odeint;
    using state = std::array<double, 2>;
    std::vector<cplx> ref = from.sheets;
    const cplx hb = s_.hbar();
    auto rhs = [&](const state& x, state& dxdt, double) {
      const cplx z(x[0], x[1]);
      const auto sh = match_sheets(z, ref);
      const cplx v = hb / (sh[static_cast<std::size_t>(c.i)] - sh[static_cast<std::size_t>(c.j)]);
      dxdt = {v.real(), v.imag()};
    };
    state x{from.z.real(), from.z.imag()};
    const double len = s - from.mass;
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<state>>(opt_.tol * 0.1, opt_.tol * 0.1), rhs, x,
                            from.mass, s, len / 4.0);
    const cplx z(x[0], x[1]);
    return {z, s, match_sheets(z, ref)};
  }

  /// dz/ds at a sample.
  cplx tangent(const stokes_curve& c, const curve_sample& p) const {
    return s_.hbar() / (p.sheets[static_cast<std::size_t>(c.i)] - p.sheets[static_cast<std::size_t>(c.j)]);
  }

 private:
  bool roots_ok(cplx z, const std::vector<cplx>& r) const {
    const auto c = s_.charpoly_at(z);
    for (auto x : r) {
      cplx acc{};
      double mag = 0.0, xp = 1.0;
      for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
      for (std::size_t k = 0; k < c.size(); ++k, xp *= std::abs(x)) mag += std::abs(c[k]) * xp;
      if (!(std::abs(acc) <= 1e-10 * mag)) return false;
    }
    return min_separation(r) > 0.0;
  }

  static double normalized_angle(cplx d) {
    double a = std::arg(d);
    return a < 0 ? a + 2.0 * M_PI : a;
  }

  static std::pair<int, int> closest_pair(const std::vector<cplx>& r) {
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> out{0, 1};
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = a + 1; b < r.size(); ++b)
        if (std::abs(r[a] - r[b]) < best) {
          best = std::abs(r[a] - r[b]);
          out = {static_cast<int>(a), static_cast<int>(b)};
        }
    return out;
  }

  /// g(z) = (xi_a - xi_b)^2 / hbar^2 ~ g1 (z - v) for the colliding pair.
  cplx local_coefficient(cplx v, double rho) const {
    const int n = 8;
    cplx acc{};
    for (int k = 0; k < n; ++k) {
      const cplx dz = std::polar(rho, 2.0 * M_PI * (k + 0.5) / n);
      const auto r = s_.sheet_values(v + dz);
      const auto [p, q] = closest_pair(r);
      const cplx d = (r[static_cast<std::size_t>(p)] - r[static_cast<std::size_t>(q)]) / s_.hbar();
      acc += d * d / dz;
    }
    return acc / static_cast<double>(n);
  }

  /// Pair difference at v + t^2 e^{i alpha}, sign fixed by the Puiseux leading term.
  cplx germ_diff(cplx v, cplx g1, double r, double alpha) const {
    const cplx e = std::polar(1.0, alpha);
    const cplx lead = std::sqrt(g1 * r * e) * s_.hbar();
    const cplx lead_signed = std::real(lead * e / s_.hbar()) >= 0 ? lead : -lead;
    const auto roots = s_.sheet_values(v + r * e);
    const auto [p, q] = closest_pair(roots);
    const cplx d = roots[static_cast<std::size_t>(p)] - roots[static_cast<std::size_t>(q)];
    return std::abs(d - lead_signed) <= std::abs(d + lead_signed) ? d : -d;
  }

  /// int_v^{v + r e^{i alpha}} (xi_i - xi_j)/hbar dz with z = v + t^2 e^{i alpha}.
  cplx germ_mass(cplx v, cplx g1, double r, double alpha) const {
    const cplx e = std::polar(1.0, alpha);
    auto f = [&](double t) {
      if (t == 0.0) return cplx{};
      return germ_diff(v, g1, t * t, alpha) / s_.hbar() * 2.0 * t * e;
    };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, std::sqrt(r), 4, 1e-12, &err);
  }

  double refine_direction(cplx v, cplx g1, double r, double alpha) const {
    auto f = [&](double a) { return germ_mass(v, g1, r, a).imag(); };
    double a0 = alpha, a1 = alpha + 1e-4;
    double f0 = f(a0), f1 = f(a1);
    for (int it = 0; it < 40 && std::abs(f1) > 1e-16 * std::max(1.0, r); ++it) {
      if (f1 == f0) break;
      const double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
      a0 = a1;
      f0 = f1;
      a1 = a2;
      f1 = f(a1);
    }
    if (std::abs(a1 - alpha) > 0.5) throw geometry_error("germ direction refinement diverged");
    return a1;
  }

  double initial_ds(cplx z, const std::vector<cplx>& sh, int i, int j) const {
    const double speed = std::abs(s_.hbar() / (sh[static_cast<std::size_t>(i)] - sh[static_cast<std::size_t>(j)]));
    return 0.01 * std::min(s_.distance_to_singularities(z), scale_) / speed;
  }

  std::pair<terminus, int> stop_reason(cplx z, const stokes_curve& c) const {
    const double dtp = s_.exclusion_radius();
    const auto& tps = s_.turning_points();
    for (std::size_t k = 0; k < tps.size(); ++k) {
      if (c.source.type == vertex_ref::kind::turning_point && static_cast<int>(k) == c.source.index) {
        if (std::abs(z - tps[k].z) < 0.5 * opt_.start_radius_factor * dtp) return {terminus::turning_point_hit, static_cast<int>(k)};
        continue;
      }
      if (std::abs(z - tps[k].z) < dtp) return {terminus::turning_point_hit, static_cast<int>(k)};
    }
    const auto& poles = s_.poles();
    for (std::size_t k = 0; k < poles.size(); ++k)
      if (!poles[k].at_infinity && std::abs(z - poles[k].z) < dtp) return {terminus::pole, static_cast<int>(k)};
    if (std::abs(z) > opt_.max_radius * scale_) return {terminus::pole, -1};
    return {terminus::none, -1};
  }

  const spectral_data& s_;
  tracer_options opt_;
  double scale_ = 1.0;
};

struct incident_wall {
  int curve = 0;
  double mass = 0.0;
  /// Sheet values at the collision point in the curve's own order.
  std::vector<cplx> sheets;
  /// Indices of the curve's (i, j) in the collision's local sheet order.
  int li = 0;
  int lj = 1;
  cplx tangent;
  /// Born at this point (outgoing only).
  bool born = false;
};

struct collision {
  cplx point;
  /// Sheet values at the point, lexicographically ordered; the local labelling.
  std::vector<cplx> sheets;
  std::vector<incident_wall> walls;
  bool ordered = false;
  bool cyclic = false;
  bool transverse = true;
};

struct collision_options {
  double tol_x = 1e-12;
  /// Intersections closer than this to a shared source are ignored.
  double source_guard = 0.0;
  double merge_radius = 1e-6;
};

namespace detail {

inline std::optional<std::pair<double, double>> segment_intersection(cplx a0, cplx a1, cplx b0, cplx b1) {
  const cplx da = a1 - a0, db = b1 - b0, w = b0 - a0;
  const double den = da.real() * db.imag() - da.imag() * db.real();
  const double scale = std::abs(da) * std::abs(db);
  if (std::abs(den) <= 1e-14 * scale) return std::nullopt;
  const double t = (w.real() * db.imag() - w.imag() * db.real()) / den;
  const double u = (w.real() * da.imag() - w.imag() * da.real()) / den;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return std::make_pair(t, u);
}

inline std::vector<int> local_indices(const std::vector<cplx>& local, const std::vector<cplx>& values) {
  return spectral_data::match_labels(values, local);
}

}  // namespace detail

/// Classify the walls meeting at a point: ordered iff some pair chains (i,j),(j,k),
/// cyclic iff the types close up into a directed cycle, e.g. (i,j),(j,i) or
/// (1,2),(2,3),(3,1).
inline void classify_collision(collision& c) {
  c.ordered = false;
  c.cyclic = false;
  int n = 0;
  for (const auto& w : c.walls) n = std::max({n, w.li + 1, w.lj + 1});
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (std::size_t a = 0; a < c.walls.size(); ++a) {
    const auto& x = c.walls[a];
    adj[static_cast<std::size_t>(x.li)].push_back(x.lj);
    for (std::size_t b = a + 1; b < c.walls.size(); ++b) {
      const auto& y = c.walls[b];
      if (x.lj == y.li || y.lj == x.li) c.ordered = true;
    }
  }
  // 0 unvisited, 1 on stack, 2 done
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  std::function<bool(int)> dfs = [&](int u) {
    state[static_cast<std::size_t>(u)] = 1;
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (state[static_cast<std::size_t>(v)] == 1) return true;
      if (state[static_cast<std::size_t>(v)] == 0 && dfs(v)) return true;
    }
    state[static_cast<std::size_t>(u)] = 2;
    return false;
  };
  for (int u = 0; u < n && !c.cyclic; ++u)
    if (state[static_cast<std::size_t>(u)] == 0) c.cyclic = dfs(u);
}

/// Newton refinement of the crossing of two traced curves near masses (sa, sb).
inline std::optional<std::pair<curve_sample, curve_sample>> refine_crossing(const stokes_tracer& tr, const stokes_curve& a,
                                                                            const stokes_curve& b, double sa, double sb,
                                                                            double tol_x) {
  curve_sample pa = tr.point_at(a, sa), pb = tr.point_at(b, sb);
  for (int it = 0; it < 30; ++it) {
    const cplx f = pa.z - pb.z;
    if (std::abs(f) <= tol_x) return std::make_pair(pa, pb);
    const cplx ta = tr.tangent(a, pa), tb = tr.tangent(b, pb);
    // f + ta dsa - tb dsb = 0 in R^2
    const double det = ta.real() * (-tb.imag()) - ta.imag() * (-tb.real());
    if (std::abs(det) < 1e-300) return std::nullopt;
    const double dsa = (-f.real() * (-tb.imag()) + f.imag() * (-tb.real())) / det;
    const double dsb = (ta.real() * (-f.imag()) - ta.imag() * (-f.real())) / det;
    sa = std::clamp(sa + dsa, a.mass_begin(), a.mass_end());
    sb = std::clamp(sb + dsb, b.mass_begin(), b.mass_end());
    pa = tr.point_at(a, sa);
    pb = tr.point_at(b, sb);
  }
  if (std::abs(pa.z - pb.z) <= 1e3 * tol_x) return std::make_pair(pa, pb);
  return std::nullopt;
}

/// Pairwise crossings of curves (spatial hashing over polyline segments),
/// refined and merged into collisions.  Only pairs with at least one curve
/// index >= first_new are examined (all pairs when first_new == 0).
inline std::vector<collision> detect_collisions(const stokes_tracer& tr, const std::vector<stokes_curve>& curves,
                                                collision_options opt = {}, std::size_t first_new = 0) {
  const double scale = tr.scale();
  const double tol_x = opt.tol_x * scale;
  const double guard = opt.source_guard > 0.0 ? opt.source_guard : 2.0 * tr.options().start_radius_factor * tr.spectral().exclusion_radius();
  struct seg {
    int curve;
    std::size_t k;
  };
  double cell = 0.0;
  std::size_t nseg = 0;
  for (const auto& c : curves)
    for (std::size_t k = 1; k < c.samples.size(); ++k) {
      cell += std::abs(c.samples[k].z - c.samples[k - 1].z);
      ++nseg;
    }
  cell = nseg ? std::max(4.0 * cell / static_cast<double>(nseg), 1e-6 * scale) : scale;
  std::map<std::pair<long, long>, std::vector<seg>> grid;
  auto key = [&](double v) { return static_cast<long>(std::floor(v / cell)); };
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    for (std::size_t k = 1; k < c.samples.size(); ++k) {
      const cplx a = c.samples[k - 1].z, b = c.samples[k].z;
      for (long x = key(std::min(a.real(), b.real())); x <= key(std::max(a.real(), b.real())); ++x)
        for (long y = key(std::min(a.imag(), b.imag())); y <= key(std::max(a.imag(), b.imag())); ++y)
          grid[{x, y}].push_back({static_cast<int>(ci), k});
    }
  }
  struct raw {
    int a, b;
    double sa, sb;
  };
  std::vector<raw> hits;
  std::map<std::tuple<int, int, std::size_t, std::size_t>, bool> seen;
  for (const auto& [cellkey, segs] : grid) {
    for (std::size_t x = 0; x < segs.size(); ++x)
      for (std::size_t y = x + 1; y < segs.size(); ++y) {
        seg p = segs[x], q = segs[y];
        if (p.curve == q.curve) continue;
        if (p.curve > q.curve) std::swap(p, q);
        if (static_cast<std::size_t>(q.curve) < first_new) continue;
        const auto tag = std::make_tuple(p.curve, q.curve, p.k, q.k);
        if (seen.count(tag)) continue;
        seen[tag] = true;
        const auto& ca = curves[static_cast<std::size_t>(p.curve)];
        const auto& cb = curves[static_cast<std::size_t>(q.curve)];
        const auto tu = detail::segment_intersection(ca.samples[p.k - 1].z, ca.samples[p.k].z, cb.samples[q.k - 1].z, cb.samples[q.k].z);
        if (!tu) continue;
        const cplx pt = ca.samples[p.k - 1].z + tu->first * (ca.samples[p.k].z - ca.samples[p.k - 1].z);
        if (std::abs(pt - ca.source.z) < guard || std::abs(pt - cb.source.z) < guard) continue;
        const double sa = ca.samples[p.k - 1].mass + tu->first * (ca.samples[p.k].mass - ca.samples[p.k - 1].mass);
        const double sb = cb.samples[q.k - 1].mass + tu->second * (cb.samples[q.k].mass - cb.samples[q.k - 1].mass);
        hits.push_back({p.curve, q.curve, sa, sb});
      }
  }
  std::sort(hits.begin(), hits.end(), [](const raw& x, const raw& y) {
    return std::tie(x.a, x.b, x.sa, x.sb) < std::tie(y.a, y.b, y.sa, y.sb);
  });
  std::vector<collision> out;
  const auto& sd = tr.spectral();
  for (const auto& h : hits) {
    const auto& ca = curves[static_cast<std::size_t>(h.a)];
    const auto& cb = curves[static_cast<std::size_t>(h.b)];
    const auto ref = refine_crossing(tr, ca, cb, h.sa, h.sb, tol_x);
    if (!ref) continue;
    const cplx pt = ref->first.z;
    collision* target = nullptr;
    for (auto& c : out)
      if (std::abs(c.point - pt) <= opt.merge_radius * scale) target = &c;
    if (!target) {
      collision c;
      c.point = pt;
      c.sheets = sd.sheet_values(pt);
      std::sort(c.sheets.begin(), c.sheets.end(), lex_less);
      out.push_back(std::move(c));
      target = &out.back();
    }
    auto add = [&](int id, const stokes_curve& cv, const curve_sample& p) {
      for (const auto& w : target->walls)
        if (w.curve == id) return;
      incident_wall w;
      w.curve = id;
      w.mass = p.mass;
      w.sheets = p.sheets;
      const auto li = detail::local_indices(target->sheets, p.sheets);
      w.li = li[static_cast<std::size_t>(cv.i)];
      w.lj = li[static_cast<std::size_t>(cv.j)];
      w.tangent = tr.tangent(cv, p);
      target->walls.push_back(std::move(w));
    };
    add(h.a, ca, ref->first);
    add(h.b, cb, ref->second);
  }
  for (auto& c : out) {
    for (std::size_t a = 0; a < c.walls.size(); ++a)
      for (std::size_t b = a + 1; b < c.walls.size(); ++b) {
        const cplx ta = c.walls[a].tangent, tb = c.walls[b].tangent;
        if (std::abs(std::imag(std::conj(ta) * tb)) < 1e-6 * std::abs(ta) * std::abs(tb)) c.transverse = false;
      }
    classify_collision(c);
  }
  std::sort(out.begin(), out.end(), [](const collision& x, const collision& y) { return lex_less(x.point, y.point); });
  return out;
}

struct stokes_segment {
  int curve;
  int from_vertex;
  int to_vertex;
};

/// Curves running into a turning point whose colliding pair is the curve's own pair.
inline std::vector<stokes_segment> detect_stokes_segments(const stokes_tracer& tr, const std::vector<stokes_curve>& curves) {
  std::vector<stokes_segment> out;
  const auto& sd = tr.spectral();
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    if (c.end != terminus::turning_point_hit || c.end_vertex < 0) continue;
    const cplx v = sd.turning_points()[static_cast<std::size_t>(c.end_vertex)].z;
    const auto& last = c.samples.back();
    const double pair = std::abs(last.sheets[static_cast<std::size_t>(c.i)] - last.sheets[static_cast<std::size_t>(c.j)]);
    double other = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < last.sheets.size(); ++a)
      for (std::size_t b = a + 1; b < last.sheets.size(); ++b) {
        if ((static_cast<int>(a) == c.i && static_cast<int>(b) == c.j) || (static_cast<int>(a) == c.j && static_cast<int>(b) == c.i)) continue;
        other = std::min(other, std::abs(last.sheets[a] - last.sheets[b]));
      }
    // The curve's own pair is the colliding one iff it is the closest pair near v.
    if (pair < other && std::abs(last.z - v) < 2.0 * sd.exclusion_radius())
      out.push_back({static_cast<int>(k), c.source.type == vertex_ref::kind::turning_point ? c.source.index : -1, c.end_vertex});
  }
  return out;
}

/// Labelling used for reporting types: base point 2i x scale (moved off any
/// singular point), sheets in decreasing Im(xi / hbar).
inline sheet_labeling report_labeling(const spectral_data& sd) {
  cplx base(0.0, 2.0 * sd.configuration_scale());
  while (sd.distance_to_singularities(base) < 0.1 * sd.configuration_scale()) base += cplx(0.37, 0.11) * sd.configuration_scale();
  auto lab = sd.labeling_at(base);
  const cplx hb = sd.hbar();
  std::sort(lab.values.begin(), lab.values.end(), [&](cplx a, cplx b) {
    const double ia = (a / hb).imag(), ib = (b / hb).imag();
    if (ia != ib) return ia > ib;
    return (a / hb).real() < (b / hb).real();
  });
  return lab;
}

/// Labels (indices into lab.values) of the given sheet values at z, continued
/// from the labelling base along a straight segment or, if that passes too
/// close to a singular point, along a two-segment detour.
inline std::vector<int> global_indices(const spectral_data& sd, const sheet_labeling& lab, cplx z, const std::vector<cplx>& values) {
  try {
    return spectral_data::match_labels(values, sd.sheets_at(lab, z));
  } catch (const continuation_error&) {
  }
  const cplx mid = 0.5 * (lab.base + z);
  const double len = std::max(std::abs(z - lab.base), sd.configuration_scale());
  for (int k = 1; k <= 16; ++k) {
    const double side = (k % 2 ? 1.0 : -1.0) * 0.1 * ((k + 1) / 2);
    const cplx dir = (z - lab.base) == cplx{} ? cplx(1.0) : (z - lab.base) / std::abs(z - lab.base);
    const cplx via = mid + cplx(0.0, side * len) * dir;
    try {
      const auto at = sd.continue_values(lab.values, {lab.base, via, z});
      return spectral_data::match_labels(values, at);
    } catch (const continuation_error&) {
    }
  }
  throw continuation_error("global sheet labels unavailable at this point");
}

/// 1-based global type of a curve, read at its first sample.
inline std::vector<int> global_type(const spectral_data& sd, const sheet_labeling& lab, const stokes_curve& c) {
  const auto& p = c.samples.front();
  const auto g = global_indices(sd, lab, p.z, p.sheets);
  return {g[static_cast<std::size_t>(c.i)] + 1, g[static_cast<std::size_t>(c.j)] + 1};
}

/// Initial curves: three per simple turning point, traced to the mass cap.
inline std::vector<stokes_curve> trace_initial_curves(const stokes_tracer& tr, double mass_cap) {
  std::vector<stokes_curve> out;
  for (std::size_t v = 0; v < tr.spectral().turning_points().size(); ++v)
    for (const auto& g : tr.initial_rays(static_cast<int>(v))) {
      auto c = tr.trace(g, mass_cap);
      c.id = static_cast<int>(out.size());
      out.push_back(std::move(c));
    }
  return out;
}

inline nlohmann::json to_json_value(const stokes_curve& c, const std::vector<int>& global_type) {
  nlohmann::json poly = nlohmann::json::array();
  for (const auto& p : c.samples) poly.push_back({p.z.real(), p.z.imag(), p.mass});
  nlohmann::json j;
  j["id"] = c.id;
  j["type"] = global_type;
  j["source"] = {{"kind", c.source.type == vertex_ref::kind::turning_point ? "turning_point" : "collision"},
                 {"index", c.source.index},
                 {"z", {c.source.z.real(), c.source.z.imag()}}};
  j["terminus"] = terminus_name(c.end);
  j["polyline"] = std::move(poly);
  return j;
}

}  // namespace exwkb
