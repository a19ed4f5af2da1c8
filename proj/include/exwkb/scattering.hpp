#pragma once

// Spectral scattering diagrams: walls (curve, phi), wall factors
// phi T^{mass}, point monodromies at collisions, consistency modulo T^w and
// the inductive step adding walls that cancel the deviations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/novikov.hpp"
#include "exwkb/spectral.hpp"
#include "exwkb/stokes_graph.hpp"
#include "exwkb/stokes_tracer.hpp"
#include "exwkb/wkb.hpp"

namespace exwkb {

enum class normalization_mode { trivial, formal };

inline const char* normalization_name(normalization_mode m) { return m == normalization_mode::trivial ? "trivial" : "formal"; }

struct wall {
  /// Index into scattering_diagram::curves.
  int curve = 0;
  hbar_series phi;
  int generation = 0;
  /// Diagonal A attached to the wall; empty means identity.
  std::vector<cplx> edge_matrix;

  double weight() const { return phi.valuation(); }
};

struct scattering_options {
  /// Truncation W.
  double truncation = 10.0;
  /// hbar order N of the coefficients.
  int hbar_order = 0;
  normalization_mode normalization = normalization_mode::trivial;
  std::optional<double> w_min;
  double prune_tol = 1e-12;
  int max_generations = 64;
  /// Throw when the local product at a turning point is not the identity.
  bool strict_turning_points = false;
  tracer_options tracer;
  collision_options collisions;
};

struct deviation_report_entry {
  int collision = 0;
  int row = 0;
  int col = 0;
  double valuation = 0.0;
};

struct consistency_report {
  bool consistent = true;
  double w = 0.0;
  /// Smallest deviation valuation over all collisions (+inf when none).
  double level = unbounded;
  std::vector<deviation_report_entry> failures;
  /// Weight-law violations (deviation below the sum of the two smallest incident weights).
  std::vector<std::string> weight_law;
};

struct turning_point_check {
  int turning_point = 0;
  bool identity = false;
  Eigen::MatrixXcd product;
};

class scattering_diagram {
 public:
  scattering_diagram(spectral_data s, scattering_options opt) : sd_(std::move(s)), opt_(opt) {
    if (!(opt_.truncation > 0.0)) throw config_error("truncation W must be positive");
    if (opt_.hbar_order < 0) throw config_error("hbar order must be nonnegative");
    if (opt_.normalization == normalization_mode::formal && !sd_.is_schrodinger())
      throw input_error("formal normalization needs Schrodinger form");
    if (opt_.normalization == normalization_mode::formal) wkb_ = wkb_series::compute(sd_, std::max(opt_.hbar_order, 0));
  }

  const spectral_data& spectral() const { return sd_; }
  const scattering_options& options() const { return opt_; }
  double truncation() const { return opt_.truncation; }
  std::size_t rank() const { return static_cast<std::size_t>(sd_.rank()); }
  stokes_tracer tracer() const { return stokes_tracer(sd_, opt_.tracer); }

  std::vector<stokes_curve> curves;
  std::vector<wall> walls;
  std::vector<collision> collisions;
  double w_min = unbounded;
  double consistency_level = 0.0;
  int generations = 0;
  std::vector<std::string> diagnostics;
  std::vector<turning_point_check> turning_point_checks;

  hbar_series coefficient(cplx v) const {
    return hbar_series::constant(hbar_poly::constant(v, opt_.hbar_order), opt_.truncation);
  }

  /// m_{gamma,i} m_{gamma,j}^{-1} for the wall at the point p of its curve.
  hbar_poly normalization_factor(int w, const curve_sample& p) const {
    if (opt_.normalization == normalization_mode::trivial) return hbar_poly::constant(1.0, opt_.hbar_order);
    const auto& c = curves[static_cast<std::size_t>(walls[static_cast<std::size_t>(w)].curve)];
    if (c.source.type != vertex_ref::kind::turning_point) return hbar_poly::constant(1.0, opt_.hbar_order);
    const cplx xi = p.sheets[static_cast<std::size_t>(c.i)];
    const auto tn = turning_point_normalization(*wkb_, sd_, c.source.z, p.z, xi, opt_.hbar_order);
    std::vector<cplx> e(static_cast<std::size_t>(opt_.hbar_order) + 1);
    for (const auto& t : tn)
      if (t.order >= 0 && t.order <= opt_.hbar_order) e[static_cast<std::size_t>(t.order)] += 2.0 * t.value;
    return exp_hbar(hbar_poly(e, opt_.hbar_order));
  }

  /// M_l(c) = m_i m_j^{-1} phi T^{mass(c)}.
  hbar_series wall_factor(int w, double mass) const {
    const auto& wl = walls[static_cast<std::size_t>(w)];
    const auto& c = curves[static_cast<std::size_t>(wl.curve)];
    if (mass < c.mass_begin() - 1e-9 || mass > c.mass_end() + 1e-9) throw geometry_error("wall_factor: point beyond traced extent");
    auto f = wl.phi.shifted(mass);
    if (opt_.normalization == normalization_mode::formal) {
      const auto p = tracer().point_at(c, std::clamp(mass, c.mass_begin(), c.mass_end()));
      f = f.scaled(normalization_factor(w, p));
    }
    return f;
  }

  /// exp of an hbar polynomial without constant term, truncated at its order.
  static hbar_poly exp_hbar(const hbar_poly& x) {
    if (x.coeff(0) != cplx{}) throw config_error("exp_hbar: constant term must vanish");
    hbar_poly acc = hbar_poly::constant(1.0, x.order()), term = acc;
    const int n = x.order() == hbar_poly::untruncated ? 32 : x.order();
    for (int k = 1; k <= n; ++k) {
      term = term * x;
      term = (1.0 / static_cast<double>(k)) * term;
      acc = acc + term;
    }
    return acc;
  }

  nlohmann::json to_json() const;

 private:
  spectral_data sd_;
  scattering_options opt_;
  std::optional<wkb_series> wkb_;
};

/// One factor I + sign * value * E_ij attached to a half-ray leaving c at angle.
struct ray_factor {
  double angle = 0.0;
  int i = 0;
  int j = 1;
  hbar_series value;
  int sign = 1;
  int wall = -1;
};

/// Product of the given factors in the listed order: prod (I + v E_ij).
inline hbar_matrix ordered_product(std::size_t n, double cutoff, const std::vector<ray_factor>& f, double prune_tol = 0.0) {
  auto m = hbar_matrix::identity(n, cutoff);
  for (const auto& r : f) {
    auto v = r.sign > 0 ? r.value : -r.value;
    m = (m * hbar_matrix::elementary(n, static_cast<std::size_t>(r.i), static_cast<std::size_t>(r.j), v)).pruned(prune_tol);
  }
  return m;
}

/// Sorts half-rays counterclockwise starting just after the largest angular gap.
inline void sort_counterclockwise(std::vector<ray_factor>& f) {
  for (auto& r : f) {
    r.angle = std::fmod(r.angle, 2.0 * M_PI);
    if (r.angle < 0) r.angle += 2.0 * M_PI;
  }
  std::sort(f.begin(), f.end(), [](const ray_factor& a, const ray_factor& b) {
    if (a.angle != b.angle) return a.angle < b.angle;
    return a.wall < b.wall;
  });
  if (f.size() < 2) return;
  std::size_t start = 0;
  double gap = -1.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double next = k + 1 < f.size() ? f[k + 1].angle : f.front().angle + 2.0 * M_PI;
    if (next - f[k].angle > gap) {
      gap = next - f[k].angle;
      start = (k + 1) % f.size();
    }
  }
  std::rotate(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(start), f.end());
}

/// Half-ray factors at a collision: a wall through c contributes I + M E_ij on
/// its outgoing half and I - M E_ij on its incoming half; a wall born at c only
/// the outgoing one.
inline std::vector<ray_factor> collision_factors(const scattering_diagram& d, const collision& c) {
  std::vector<ray_factor> f;
  for (const auto& w : c.walls) {
    const auto v = d.wall_factor(w.curve, w.mass);
    if (v.is_zero()) continue;
    f.push_back({std::arg(w.tangent), w.li, w.lj, v, 1, w.curve});
    if (!w.born) f.push_back({std::arg(-w.tangent), w.li, w.lj, v, -1, w.curve});
  }
  sort_counterclockwise(f);
  return f;
}

/// Monodromy at collision k: A times the counterclockwise product of half-ray factors.
inline hbar_matrix point_monodromy(const scattering_diagram& d, std::size_t k) {
  const auto& c = d.collisions.at(k);
  if (c.cyclic) throw tameness_error("point monodromy at a cyclic collision");
  auto m = ordered_product(d.rank(), d.truncation(), collision_factors(d, c), d.options().prune_tol);
  std::vector<cplx> a(d.rank(), 1.0);
  bool any = false;
  for (const auto& w : c.walls) {
    const auto& em = d.walls[static_cast<std::size_t>(w.curve)].edge_matrix;
    if (em.empty()) continue;
    any = true;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= em[i];
  }
  if (any) m = hbar_matrix::diagonal(a, d.truncation()) * m;
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j)
      if (i != j && !m(i, j).is_zero() && !m(j, i).is_zero())
        throw tameness_error("point monodromy has both (i,j) and (j,i) entries");
  return m;
}

/// The literal product over incident walls, one factor per wall, in the given order.
inline hbar_matrix printed_monodromy(std::size_t n, double cutoff, const std::vector<std::pair<std::pair<int, int>, hbar_series>>& walls,
                                     const std::vector<cplx>& a = {}) {
  std::vector<ray_factor> f;
  for (const auto& [t, v] : walls) f.push_back({0.0, t.first, t.second, v, 1, -1});
  auto m = ordered_product(n, cutoff, f);
  if (!a.empty()) m = hbar_matrix::diagonal(a, cutoff) * m;
  return m;
}

inline double incident_weight(const scattering_diagram& d, const incident_wall& w) {
  return d.walls[static_cast<std::size_t>(w.curve)].weight() + w.mass;
}

inline consistency_report consistency_check(const scattering_diagram& d, double w) {
  consistency_report r;
  r.w = w;
  for (std::size_t k = 0; k < d.collisions.size(); ++k) {
    const auto m = point_monodromy(d, k);
    const auto dev = matrix_deviation(m, unbounded, d.options().prune_tol);
    double lowest = unbounded;
    for (const auto& e : dev) {
      lowest = std::min(lowest, e.value.valuation());
      if (e.value.valuation() < w && !exponents_equal(e.value.valuation(), w)) {
        r.consistent = false;
        r.failures.push_back({static_cast<int>(k), static_cast<int>(e.row), static_cast<int>(e.col), e.value.valuation()});
      }
    }
    r.level = std::min(r.level, lowest);
    std::vector<double> ws;
    for (const auto& iw : d.collisions[k].walls) ws.push_back(incident_weight(d, iw));
    std::sort(ws.begin(), ws.end());
    if (ws.size() >= 2 && std::isfinite(lowest) && lowest < ws[0] + ws[1] - 1e-9)
      r.weight_law.push_back("collision " + std::to_string(k) + ": deviation valuation " + std::to_string(lowest) +
                             " below incident weight sum " + std::to_string(ws[0] + ws[1]));
  }
  return r;
}

/// Re-detects collisions among all curves and attaches walls born at them.
inline void refresh_collisions(scattering_diagram& d) {
  const auto tr = d.tracer();
  d.collisions = detect_collisions(tr, d.curves, d.options().collisions);
  const double merge = d.options().collisions.merge_radius * tr.scale();
  for (std::size_t ci = 0; ci < d.curves.size(); ++ci) {
    const auto& c = d.curves[ci];
    if (c.source.type != vertex_ref::kind::collision) continue;
    collision* target = nullptr;
    for (auto& col : d.collisions)
      if (std::abs(col.point - c.source.z) <= merge) target = &col;
    if (!target) {
      d.diagnostics.push_back("wall " + std::to_string(ci) + " lost its source collision");
      continue;
    }
    const auto& p = c.samples.front();
    incident_wall w;
    w.curve = static_cast<int>(ci);
    w.mass = p.mass;
    w.sheets = p.sheets;
    const auto li = detail::local_indices(target->sheets, p.sheets);
    w.li = li[static_cast<std::size_t>(c.i)];
    w.lj = li[static_cast<std::size_t>(c.j)];
    w.tangent = tr.tangent(c, p);
    w.born = true;
    target->walls.push_back(std::move(w));
  }
  for (auto& col : d.collisions) classify_collision(col);
}

/// Counterclockwise product of the initial wall factors around a turning point
/// in a frame continued along a small circle, times the sheet permutation.
inline turning_point_check check_turning_point(const scattering_diagram& d, int tp) {
  const auto& s = d.spectral();
  const cplx v = s.turning_points().at(static_cast<std::size_t>(tp)).z;
  std::vector<std::pair<double, int>> rays;
  for (std::size_t k = 0; k < d.walls.size(); ++k) {
    const auto& c = d.curves[static_cast<std::size_t>(d.walls[k].curve)];
    if (c.source.type == vertex_ref::kind::turning_point && c.source.index == tp) rays.push_back({std::arg(c.samples.front().z - v), static_cast<int>(k)});
  }
  std::sort(rays.begin(), rays.end());
  turning_point_check out;
  out.turning_point = tp;
  if (rays.empty()) {
    out.identity = true;
    out.product = Eigen::MatrixXcd::Identity(d.rank(), d.rank());
    return out;
  }
  const double r = std::abs(d.curves[static_cast<std::size_t>(d.walls[static_cast<std::size_t>(rays.front().second)].curve)].samples.front().z - v);
  const double a0 = rays.front().first - 0.5 * (rays.front().first - (rays.back().first - 2.0 * M_PI));
  const int n = 256;
  std::vector<cplx> circle;
  for (int k = 0; k <= n; ++k) circle.push_back(v + std::polar(r, a0 + 2.0 * M_PI * k / n));
  const auto lab = s.labeling_at(circle.front());
  std::vector<ray_factor> f;
  for (const auto& [ang, wi] : rays) {
    double t = ang - a0;
    while (t < 0) t += 2.0 * M_PI;
    std::vector<cplx> path(circle.begin(), circle.begin() + 1 + static_cast<std::ptrdiff_t>(std::floor(t / (2.0 * M_PI) * n)));
    const auto& c = d.curves[static_cast<std::size_t>(d.walls[static_cast<std::size_t>(wi)].curve)];
    path.push_back(c.samples.front().z);
    const auto here = s.continue_values(lab.values, path);
    const auto idx = spectral_data::match_labels(c.samples.front().sheets, here);
    // Frame at v: the mass offset of the germ start is transported away.
    f.push_back({ang, idx[static_cast<std::size_t>(c.i)], idx[static_cast<std::size_t>(c.j)], d.walls[static_cast<std::size_t>(wi)].phi, 1, wi});
  }
  const auto m = ordered_product(d.rank(), d.truncation(), f).evaluate_at(s.hbar());
  const auto end = s.continue_values(lab.values, circle);
  const auto perm = spectral_data::match_labels(end, lab.values);
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(d.rank(), d.rank());
  for (std::size_t k = 0; k < perm.size(); ++k) p(perm[k], static_cast<Eigen::Index>(k)) = 1.0;
  out.product = m * p;
  out.identity = (out.product - Eigen::MatrixXcd::Identity(d.rank(), d.rank())).norm() < 1e-9;
  return out;
}

/// Initial diagram: phi = -1 on every generation-0 curve, traced to mass W.
inline scattering_diagram initial_diagram(const spectral_data& s, const scattering_options& opt) {
  scattering_diagram d(s, opt);
  const auto tr = d.tracer();
  d.curves = trace_initial_curves(tr, opt.truncation);
  for (std::size_t k = 0; k < d.curves.size(); ++k) d.walls.push_back({static_cast<int>(k), d.coefficient(-1.0), 0, {}});
  refresh_collisions(d);
  for (std::size_t t = 0; t < s.turning_points().size(); ++t) {
    auto chk = check_turning_point(d, static_cast<int>(t));
    if (!chk.identity) {
      d.diagnostics.push_back("turning point " + std::to_string(t) + ": local product of initial wall factors is not the identity");
      if (opt.strict_turning_points) throw config_error(d.diagnostics.back());
    }
    d.turning_point_checks.push_back(std::move(chk));
  }
  return d;
}

/// Lower bound for wall weights at collisions: over turning points v, the
/// smallest mass at which a curve from v leaves the disk of radius half the
/// distance from v to the nearest other singular point or crossing.
inline double compute_w_min(const scattering_diagram& d) {
  const auto& s = d.spectral();
  double best = unbounded;
  for (std::size_t t = 0; t < s.turning_points().size(); ++t) {
    const cplx v = s.turning_points()[t].z;
    double rho = unbounded;
    for (auto p : s.singular_points())
      if (std::abs(p - v) > 1e-12) rho = std::min(rho, 0.5 * std::abs(p - v));
    for (const auto& c : d.collisions) rho = std::min(rho, 0.5 * std::abs(c.point - v));
    for (const auto& c : d.curves) {
      if (c.source.type != vertex_ref::kind::turning_point || c.source.index != static_cast<int>(t)) continue;
      double m = c.mass_end();
      for (std::size_t k = 1; k < c.samples.size(); ++k)
        if (std::abs(c.samples[k].z - v) >= rho) {
          const double a = std::abs(c.samples[k - 1].z - v), b = std::abs(c.samples[k].z - v);
          const double u = b > a ? std::clamp((rho - a) / (b - a), 0.0, 1.0) : 1.0;
          m = c.samples[k - 1].mass + u * (c.samples[k].mass - c.samples[k - 1].mass);
          break;
        }
      best = std::min(best, m);
    }
  }
  return best;
}

/// One step: every deviation entry (i, j) at a collision is cancelled by a wall
/// of type (i, j) born there (merged into an existing one of that type).
inline bool inductive_step(scattering_diagram& d) {
  const auto tr = d.tracer();
  const double W = d.truncation();
  struct pending {
    cplx point;
    std::vector<cplx> sheets;
    int i, j;
    hbar_series phi;
    int generation;
  };
  std::vector<pending> fresh;
  bool changed = false;
  for (std::size_t k = 0; k < d.collisions.size(); ++k) {
    const auto& c = d.collisions[k];
    if (c.cyclic) throw tameness_error("cyclic collision at (" + std::to_string(c.point.real()) + ", " + std::to_string(c.point.imag()) + ")");
    const auto dev = matrix_deviation(point_monodromy(d, k), unbounded, d.options().prune_tol);
    int gen = 0;
    for (const auto& w : c.walls) gen = std::max(gen, d.walls[static_cast<std::size_t>(w.curve)].generation);
    for (const auto& e : dev) {
      if (e.value.is_zero()) continue;
      if (e.row == e.col) {
        d.diagnostics.push_back("diagonal deviation at collision " + std::to_string(k));
        continue;
      }
      const int i = static_cast<int>(e.row), j = static_cast<int>(e.col);
      changed = true;
      int existing = -1;
      for (const auto& w : c.walls)
        if (w.born && w.li == i && w.lj == j) existing = w.curve;
      if (existing >= 0) {
        auto& wl = d.walls[static_cast<std::size_t>(existing)];
        wl.phi = (wl.phi - e.value).pruned(d.options().prune_tol);
        continue;
      }
      fresh.push_back({c.point, c.sheets, i, j, -e.value, gen + 1});
    }
  }
  std::vector<std::future<stokes_curve>> traced;
  std::vector<const pending*> kept;
  for (const auto& p : fresh) {
    const double cap = W - p.phi.valuation();
    if (!(cap > 0.0)) continue;
    kept.push_back(&p);
    traced.push_back(std::async(std::launch::async, [&tr, &p, cap] {
      return tr.trace(tr.collision_germ(-1, p.point, p.sheets, p.i, p.j), cap);
    }));
  }
  for (std::size_t k = 0; k < kept.size(); ++k) {
    auto c = traced[k].get();
    c.id = static_cast<int>(d.curves.size());
    d.curves.push_back(std::move(c));
    d.walls.push_back({static_cast<int>(d.curves.size()) - 1, kept[k]->phi, kept[k]->generation, {}});
  }
  refresh_collisions(d);
  for (std::size_t k = 0; k < d.collisions.size(); ++k)
    if (d.collisions[k].cyclic) throw tameness_error("inductive step produced a cyclic collision");
  return changed;
}

/// Iterates the inductive step until the diagram is consistent modulo T^W.
inline scattering_diagram run_scattering(const spectral_data& s, const scattering_options& opt) {
  auto d = initial_diagram(s, opt);
  d.w_min = opt.w_min ? *opt.w_min : compute_w_min(d);
  if (!(d.w_min > 0.0)) throw geometry_error("w_min is not positive");
  const int limit = std::isfinite(d.w_min) ? std::min(opt.max_generations, static_cast<int>(std::ceil(opt.truncation / d.w_min)) + 1) : 0;
  for (int gen = 0;; ++gen) {
    const auto rep = consistency_check(d, opt.truncation);
    d.consistency_level = std::min(rep.level, opt.truncation);
    for (const auto& v : rep.weight_law) d.diagnostics.push_back(v);
    if (rep.consistent) break;
    if (gen >= limit) {
      d.diagnostics.push_back("generation limit reached before consistency at W");
      break;
    }
    try {
      if (!inductive_step(d)) break;
    } catch (const tameness_error& e) {
      d.diagnostics.push_back(std::string("halted: ") + e.what());
      break;
    }
    d.generations = gen + 1;
  }
  for (std::size_t k = 0; k < d.walls.size(); ++k) {
    const auto& w = d.walls[k];
    if (w.weight() < w.generation * d.w_min - 1e-9)
      d.diagnostics.push_back("wall " + std::to_string(k) + " violates weight >= generation * w_min");
  }
  return d;
}

inline nlohmann::json scattering_diagram::to_json() const {
  const auto lab = report_labeling(sd_);
  nlohmann::json j;
  j["truncation"] = opt_.truncation;
  j["hbar_order"] = opt_.hbar_order;
  j["normalization"] = normalization_name(opt_.normalization);
  j["w_min"] = std::isfinite(w_min) ? nlohmann::json(w_min) : nlohmann::json(nullptr);
  j["consistency_level"] = consistency_level;
  j["generations"] = generations;
  auto ws = nlohmann::json::array();
  for (std::size_t k = 0; k < walls.size(); ++k) {
    const auto& w = walls[k];
    const auto& c = curves[static_cast<std::size_t>(w.curve)];
    auto cj = to_json_value(c, global_type(sd_, lab, c));
    cj["generation"] = w.generation;
    cj["phi"] = to_json_value(w.phi);
    ws.push_back(std::move(cj));
  }
  j["walls"] = std::move(ws);
  auto cs = nlohmann::json::array();
  for (const auto& c : collisions) {
    auto inc = nlohmann::json::array();
    for (const auto& w : c.walls) inc.push_back({{"wall", w.curve}, {"mass", w.mass}, {"born", w.born}});
    cs.push_back({{"point", {c.point.real(), c.point.imag()}}, {"ordered", c.ordered}, {"cyclic", c.cyclic}, {"walls", inc}});
  }
  j["collisions"] = std::move(cs);
  auto tp = nlohmann::json::array();
  for (const auto& t : turning_point_checks) tp.push_back({{"turning_point", t.turning_point}, {"identity", t.identity}});
  j["turning_point_checks"] = std::move(tp);
  j["diagnostics"] = diagnostics;
  return j;
}

}  // namespace exwkb
