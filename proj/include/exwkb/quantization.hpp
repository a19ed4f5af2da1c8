#pragma once

// Quantization of a consistent diagram: gluing matrices along loops, the spin
// sign of cycles, microlocal values of Voros symbols and their specialization.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/novikov.hpp"
#include "exwkb/scattering.hpp"
#include "exwkb/spectral.hpp"
#include "exwkb/stokes_tracer.hpp"
#include "exwkb/wkb.hpp"

namespace exwkb {

struct gluing_options {
  /// Frame point; defaults to the loop start.  Joined to the start by a segment.
  std::optional<cplx> frame;
  /// Sheet values at the frame point fixing the row/column labels; defaults to
  /// the lexicographic labelling there.
  std::optional<std::vector<cplx>> frame_sheets;
  /// Longest piece of the loop after subdivision, relative to the configuration scale.
  double max_piece = 2.5e-3;
  bool apply_permutation = true;
};

struct loop_crossing {
  int wall = -1;
  cplx point;
  double mass = 0.0;
  int i = 0;
  int j = 1;
  int sign = 1;
};

struct gluing_result {
  hbar_matrix matrix;
  std::vector<loop_crossing> crossings;
  std::vector<int> permutation;
};

namespace detail {

inline std::vector<cplx> subdivide(const std::vector<cplx>& path, double h) {
  std::vector<cplx> out{path.front()};
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(path[k] - path[k - 1]) / h)));
    for (int s = 1; s <= n; ++s) out.push_back(path[k - 1] + (path[k] - path[k - 1]) * (static_cast<double>(s) / n));
  }
  return out;
}

/// Simpson rule for the integrals of xi_k / hbar over [a, b], values continued from a.
inline std::vector<cplx> piece_integrals(const spectral_data& s, const std::vector<cplx>& va, cplx a, cplx b, std::vector<cplx>* vb) {
  const cplx m = 0.5 * (a + b);
  const auto vm = s.continue_values(va, {a, m});
  auto ve = s.continue_values(vm, {m, b});
  std::vector<cplx> out(va.size());
  for (std::size_t k = 0; k < va.size(); ++k) out[k] = (b - a) / 6.0 * (va[k] + 4.0 * vm[k] + ve[k]) / s.hbar();
  if (vb) *vb = std::move(ve);
  return out;
}

inline hbar_series shift_by(const hbar_series& f, double shift, cplx phase) {
  std::vector<hbar_series::term> t;
  for (const auto& x : f.terms()) t.push_back({x.exp + shift, phase * x.coeff});
  for (const auto& x : t)
    if (x.exp < -exponent_merge_tol) throw config_error("gluing: frame gives a negative exponent; choose a frame closer to the walls");
  for (auto& x : t) x.exp = std::max(x.exp, 0.0);
  return hbar_series(std::move(t), f.cutoff());
}

}  // namespace detail

/// Ordered product of the wall factors met along a loop, each transported to the
/// frame point: T^{mass} e^{-(F_i - F_j)(x)} with F_k the integral of xi_k/hbar
/// from the frame.  Crossing sign + when the loop crosses the wall from its
/// right to its left.
inline gluing_result compose_loop_gluing(const scattering_diagram& d, const std::vector<cplx>& loop, const gluing_options& opt = {}) {
  if (loop.size() < 2) throw input_error("gluing: loop needs at least two points");
  const auto& s = d.spectral();
  const auto tr = d.tracer();
  const cplx frame = opt.frame ? *opt.frame : loop.front();
  std::vector<cplx> vals;
  if (opt.frame_sheets) vals = *opt.frame_sheets;
  else vals = s.labeling_at(frame).values;
  std::vector<cplx> F(vals.size());
  if (frame != loop.front()) {
    std::vector<cplx> next;
    const auto seg = detail::subdivide({frame, loop.front()}, opt.max_piece * tr.scale());
    for (std::size_t k = 1; k < seg.size(); ++k) {
      const auto g = detail::piece_integrals(s, vals, seg[k - 1], seg[k], &next);
      for (std::size_t q = 0; q < F.size(); ++q) F[q] += g[q];
      vals = next;
    }
  }
  const auto start_vals = vals;
  const auto path = detail::subdivide(loop, opt.max_piece * tr.scale());
  gluing_result out{hbar_matrix::identity(d.rank(), d.truncation()), {}, {}};
  struct hit {
    double u;
    loop_crossing c;
  };
  for (std::size_t k = 1; k < path.size(); ++k) {
    const cplx a = path[k - 1], b = path[k];
    std::vector<hit> hits;
    for (std::size_t w = 0; w < d.walls.size(); ++w) {
      const auto& c = d.curves[static_cast<std::size_t>(d.walls[w].curve)];
      for (std::size_t q = 1; q < c.samples.size(); ++q) {
        const auto x = detail::segment_intersection(a, b, c.samples[q - 1].z, c.samples[q].z);
        if (!x) continue;
        auto side = [&](double m) { return std::imag(std::conj(b - a) * (tr.point_at(c, m).z - a)); };
        double lo = c.samples[q - 1].mass, hi = c.samples[q].mass;
        double flo = side(lo);
        for (int it = 0; it < 60 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = side(mid);
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        const auto p = tr.point_at(c, 0.5 * (lo + hi));
        loop_crossing lc;
        lc.wall = static_cast<int>(w);
        lc.point = p.z;
        lc.mass = p.mass;
        lc.sign = std::imag(std::conj(tr.tangent(c, p)) * (b - a)) > 0 ? 1 : -1;
        lc.i = c.i;
        lc.j = c.j;
        hits.push_back({std::real((p.z - a) / (b - a)), lc});
      }
    }
    std::sort(hits.begin(), hits.end(), [](const hit& x, const hit& y) { return x.u < y.u; });
    for (auto& h : hits) {
      std::vector<cplx> at;
      const auto g = detail::piece_integrals(s, vals, a, h.c.point, &at);
      const auto& c = d.curves[static_cast<std::size_t>(d.walls[static_cast<std::size_t>(h.c.wall)].curve)];
      const auto p = tr.point_at(c, h.c.mass);
      const auto idx = spectral_data::match_labels(p.sheets, at);
      const int i = idx[static_cast<std::size_t>(c.i)], j = idx[static_cast<std::size_t>(c.j)];
      const cplx dF = (F[static_cast<std::size_t>(i)] + g[static_cast<std::size_t>(i)]) - (F[static_cast<std::size_t>(j)] + g[static_cast<std::size_t>(j)]);
      auto f = detail::shift_by(d.wall_factor(h.c.wall, h.c.mass), -dF.real(), std::exp(cplx(0.0, -dF.imag())));
      if (h.c.sign < 0) f = -f;
      out.matrix = (out.matrix * hbar_matrix::elementary(d.rank(), static_cast<std::size_t>(i), static_cast<std::size_t>(j), f))
                       .pruned(d.options().prune_tol);
      h.c.i = i;
      h.c.j = j;
      out.crossings.push_back(h.c);
    }
    std::vector<cplx> next;
    const auto g = detail::piece_integrals(s, vals, a, b, &next);
    for (std::size_t q = 0; q < F.size(); ++q) F[q] += g[q];
    vals = std::move(next);
  }
  out.permutation = spectral_data::match_labels(vals, start_vals);
  if (opt.apply_permutation) {
    bool trivial = true;
    for (std::size_t k = 0; k < out.permutation.size(); ++k) trivial = trivial && out.permutation[k] == static_cast<int>(k);
    if (!trivial) {
      hbar_matrix p(d.rank(), d.truncation());
      for (std::size_t k = 0; k < out.permutation.size(); ++k)
        p.set(static_cast<std::size_t>(out.permutation[k]), k, hbar_series::constant(hbar_poly::constant(1.0, d.options().hbar_order), d.truncation()));
      out.matrix = p * out.matrix;
    }
  }
  return out;
}

/// Small counterclockwise circle around a point.
inline std::vector<cplx> small_loop(cplx c, double r, int n = 256) { return circle_path(c, r, n, 0.0); }

struct spin_sign {
  /// Tangent rotation number of the base path.
  int rotation = 0;
  /// Total winding around the turning points.
  int winding = 0;
  /// Rotation number of the lift, rotation - winding / 2.
  int lifted_rotation = 0;
  /// (-1)^{lifted rotation}: the sign the untwisted microlocalization carries.
  int raw = 1;
  /// Sign after the spin twist.
  int twisted = 1;
};

class SpinTwist {
 public:
  explicit SpinTwist(const spectral_data& s) : s_(s) {}

  spin_sign sign(const cycle& g) const {
    const auto& p = g.path;
    if (p.size() < 3 || std::abs(p.front() - p.back()) > 1e-12 * std::max(1.0, std::abs(p.front())))
      throw input_error("spin sign: cycle must be closed");
    double turn = 0.0;
    std::vector<cplx> q(p.begin(), p.end() - 1);
    for (std::size_t k = 0; k < q.size(); ++k) {
      const cplx d0 = q[(k + 1) % q.size()] - q[k];
      const cplx d1 = q[(k + 2) % q.size()] - q[(k + 1) % q.size()];
      turn += std::arg(d1 / d0);
    }
    double wind = 0.0;
    for (const auto& t : s_.turning_points())
      for (std::size_t k = 1; k < p.size(); ++k) wind += std::arg((p[k] - t.z) / (p[k - 1] - t.z));
    spin_sign out;
    out.rotation = static_cast<int>(std::lround(turn / (2.0 * M_PI)));
    out.winding = static_cast<int>(std::lround(wind / (2.0 * M_PI)));
    if (out.winding % 2 != 0) throw geometry_error("spin sign: cycle does not close on the double cover");
    out.lifted_rotation = out.rotation - out.winding / 2;
    out.raw = out.lifted_rotation % 2 == 0 ? 1 : -1;
    out.twisted = out.raw * twist(g, out);
    return out;
  }

  /// Spin structure holonomy along the lift; cancels the framing sign.
  int twist(const cycle&, const spin_sign& s) const { return s.lifted_rotation % 2 == 0 ? 1 : -1; }

 private:
  const spectral_data& s_;
};

/// Double loop around a turning point, as a cycle of the double cover.
inline cycle turning_point_double_loop(const spectral_data& s, cplx v, cplx z, int n = 128) {
  auto once = turning_point_loop(s, v, z, n);
  std::vector<cplx> path = once;
  path.insert(path.end(), once.begin() + 1, once.end());
  const cplx root = std::sqrt(s.schrodinger_q().at(0)(z));
  return {"tp-loop", std::move(path), root, cycle::kind::other};
}

struct microlocal_value {
  std::string cycle_id;
  int raw_sign = 1;
  int twisted_sign = 1;
  /// exp(sum_{m >= 0} V_m hbar^m) truncated at order N.
  hbar_poly series;
  /// -Re(V_{-1} / hbar_value): exponent of T.
  double t_exponent = 0.0;
  /// exp(i Im(V_{-1} / hbar_value)).
  cplx phase = 1.0;
  std::vector<order_value> voros;

  /// As a Novikov series; requires a nonnegative T exponent.
  hbar_series to_series(bool twisted = true) const {
    if (t_exponent < -exponent_merge_tol) throw config_error("microlocal value has a negative T exponent; reverse the cycle");
    const double sgn = twisted ? twisted_sign : raw_sign;
    return hbar_series::monomial((sgn * phase) * series, std::max(t_exponent, 0.0));
  }

  nlohmann::json to_json() const {
    auto c = nlohmann::json::array();
    for (std::size_t k = 0; k <= static_cast<std::size_t>(std::max(series.order(), 0)) && series.order() != hbar_poly::untruncated; ++k)
      c.push_back({series.coeff(k).real(), series.coeff(k).imag()});
    return {{"cycle", cycle_id},
            {"raw_sign", raw_sign},
            {"twisted_sign", twisted_sign},
            {"t_exponent", t_exponent},
            {"phase", {phase.real(), phase.imag()}},
            {"series", c},
            {"voros", to_json_value(cycle_id, voros)["orders"]}};
  }
};

inline microlocal_value microlocalize(const wkb_series& w, const spectral_data& s, const cycle& g, int order) {
  microlocal_value out;
  out.cycle_id = g.id;
  out.voros = voros_symbol(w, g, order);
  const auto sg = SpinTwist(s).sign(g);
  out.raw_sign = sg.raw;
  out.twisted_sign = sg.twisted;
  std::vector<cplx> e(static_cast<std::size_t>(order) + 1);
  cplx lead{};
  for (const auto& t : out.voros) {
    if (t.order == -1) lead = t.value / s.hbar();
    else if (t.order >= 0 && t.order <= order) e[static_cast<std::size_t>(t.order)] += t.value;
  }
  const cplx v0 = e[0];
  e[0] = 0.0;
  out.series = std::exp(v0) * scattering_diagram::exp_hbar(hbar_poly(e, order));
  out.t_exponent = -lead.real();
  out.phase = std::exp(cplx(0.0, lead.imag()));
  return out;
}

/// T = e^{-1}, hbar = hbar_value.
inline cplx specialize(const microlocal_value& v, bool twisted = true) {
  return static_cast<double>(twisted ? v.twisted_sign : v.raw_sign) * v.phase * std::exp(-v.t_exponent) * v.series.evaluate(1.0);
}

inline cplx specialize(const microlocal_value& v, cplx hbar_value, bool twisted = true) {
  return static_cast<double>(twisted ? v.twisted_sign : v.raw_sign) * v.phase * std::exp(-v.t_exponent) * v.series.evaluate(hbar_value);
}

struct quantization {
  std::vector<std::pair<std::string, gluing_result>> monodromies;
  std::vector<microlocal_value> cycles;

  nlohmann::json monodromy_json() const {
    auto a = nlohmann::json::array();
    for (const auto& [id, g] : monodromies) {
      auto cr = nlohmann::json::array();
      for (const auto& c : g.crossings) cr.push_back({{"wall", c.wall}, {"point", {c.point.real(), c.point.imag()}}, {"type", {c.i + 1, c.j + 1}}, {"sign", c.sign}});
      a.push_back({{"loop", id}, {"matrix", to_json_value(g.matrix)}, {"permutation", g.permutation}, {"crossings", cr}});
    }
    return a;
  }

  nlohmann::json quantization_json() const {
    auto a = nlohmann::json::array();
    for (const auto& c : cycles) a.push_back(c.to_json());
    return {{"cycles", a}};
  }
};

/// Gluing monodromies around every collision and turning point, and microlocal
/// values of the given cycles.  Refuses diagrams not consistent modulo T^W.
inline quantization build_quantization(const scattering_diagram& d, const std::vector<cycle>& cycles, const gluing_options& base = {}) {
  const auto rep = consistency_check(d, d.truncation());
  if (!rep.consistent) throw config_error("quantization needs a diagram consistent modulo T^W");
  quantization q;
  const auto& s = d.spectral();
  const double scale = d.tracer().scale();
  for (std::size_t k = 0; k < d.collisions.size(); ++k) {
    auto opt = base;
    opt.frame = d.collisions[k].point;
    opt.frame_sheets = d.collisions[k].sheets;
    double r = 0.05 * scale;
    for (auto p : s.singular_points()) r = std::min(r, 0.25 * std::abs(p - d.collisions[k].point));
    for (std::size_t j = 0; j < d.collisions.size(); ++j)
      if (j != k) r = std::min(r, 0.25 * std::abs(d.collisions[j].point - d.collisions[k].point));
    q.monodromies.push_back({"collision-" + std::to_string(k), compose_loop_gluing(d, small_loop(d.collisions[k].point, r), opt)});
  }
  if (!cycles.empty()) {
    if (!s.is_schrodinger()) throw input_error("microlocal values need Schrodinger form");
    int order = std::max(d.options().hbar_order, 0);
    const auto w = wkb_series::compute(s, order);
    for (const auto& c : cycles) q.cycles.push_back(microlocalize(w, s, c, order));
  }
  return q;
}

}  // namespace exwkb
