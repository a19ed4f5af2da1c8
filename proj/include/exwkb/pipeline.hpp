#pragma once

// Pipeline orchestration for the command line tool: turning points, tracing,
// scattering, quantization, microlocal values, optional ODE comparison, and the
// artifacts (diagram.json, quantization.json, monodromy.json, graph.svg).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exwkb/odecheck.hpp"
#include "exwkb/quantization.hpp"
#include "exwkb/scattering.hpp"
#include "exwkb/stokes_graph.hpp"

namespace exwkb {

struct run_config {
  std::string input;
  std::optional<double> hbar_mod;
  std::optional<double> hbar_arg;
  double truncation = 10.0;
  int hbar_order = 0;
  normalization_mode normalization = normalization_mode::trivial;
  /// Window radius; 0 picks 4 x configuration scale.
  double window = 0.0;
  std::vector<double> sweep;
  bool ode_check = false;
  std::string out = "out";
  double tol = 1e-12;
  double tol_x = 1e-12;
  double prune_tol = 1e-12;
  /// Turning-point exclusion radius; 0 keeps the default.
  double delta_tp = 0.0;

  void validate() const {
    if (input.empty()) throw config_error("--input is required");
    if (!(truncation > 0.0) || !std::isfinite(truncation)) throw config_error("truncation W must be positive");
    if (hbar_order < 0) throw config_error("hbar order N must be >= 0");
    if (hbar_mod && !(*hbar_mod > 0.0)) throw config_error("|hbar| must be positive");
    if (window < 0.0) throw config_error("window must be non-negative");
    if (delta_tp < 0.0) throw config_error("delta_tp must be non-negative");
    if (!(tol > 0.0) || !(tol_x > 0.0) || !(prune_tol >= 0.0)) throw config_error("tolerances must be positive");
  }
};

/// Failure of one pipeline stage, keeping the class of the underlying error.
class stage_error : public error {
 public:
  stage_error(std::string stage, failure_class cls, const std::string& what)
      : error(cls, stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <class F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const stage_error&) {
    throw;
  } catch (const error& e) {
    throw stage_error(name, e.cls(), e.what());
  } catch (const std::exception& e) {
    throw stage_error(name, failure_class::numeric, e.what());
  }
}

inline int exit_code(failure_class c) { return static_cast<int>(c); }

// svg ----------------------------------------------------------------------

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* type_color(int i, int j) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};
  const int a = std::min(i, j), b = std::max(i, j);
  // ordered pairs of the same sheets share a hue, dashes tell them apart
  return palette[(a * 7 + b * 3) % 10];
}

/// A polyline as path pieces inside the disk of radius R.
inline std::vector<std::vector<cplx>> clip_to_disk(const std::vector<cplx>& p, double R) {
  std::vector<std::vector<cplx>> out;
  std::vector<cplx> cur;
  for (auto z : p) {
    if (std::abs(z) <= R) {
      cur.push_back(z);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (cur.size() > 1) out.push_back(std::move(cur));
  return out;
}

struct drawn_curve {
  std::vector<cplx> path;
  int i = 0, j = 1;
  int generation = 0;
  std::string label;
};

inline std::string render(double R, const std::vector<drawn_curve>& curves, const std::vector<cplx>& turning_points,
                          const std::vector<cplx>& poles, const std::vector<cplx>& collisions, const std::string& title) {
  const double m = 1.05 * R;
  const double unit = R / 300.0;
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"" << num(-m) << ' ' << num(-m) << ' '
    << num(2 * m) << ' ' << num(2 * m) << "\">\n";
  o << "<title>" << escape(title) << "</title>\n";
  o << "<rect x=\"" << num(-m) << "\" y=\"" << num(-m) << "\" width=\"" << num(2 * m) << "\" height=\"" << num(2 * m) << "\" fill=\"white\"/>\n";
  // y axis up
  o << "<g transform=\"scale(1,-1)\">\n";
  o << "<circle cx=\"0\" cy=\"0\" r=\"" << num(R) << "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"" << num(unit) << "\"/>\n";
  for (const auto& c : curves) {
    for (const auto& piece : clip_to_disk(c.path, R)) {
      o << "<path d=\"";
      for (std::size_t k = 0; k < piece.size(); ++k) o << (k ? " L" : "M") << num(piece[k].real()) << ',' << num(piece[k].imag());
      o << "\" fill=\"none\" stroke=\"" << type_color(c.i, c.j) << "\" stroke-width=\"" << num(unit * (1.5 + 1.5 * c.generation)) << '"';
      if (c.i > c.j) o << " stroke-dasharray=\"" << num(6 * unit) << ',' << num(3 * unit) << '"';
      o << "><title>" << escape(c.label) << "</title></path>\n";
    }
  }
  for (auto z : poles)
    o << "<circle cx=\"" << num(z.real()) << "\" cy=\"" << num(z.imag()) << "\" r=\"" << num(4 * unit) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"" << num(unit) << "\"/>\n";
  for (auto z : collisions)
    o << "<circle cx=\"" << num(z.real()) << "\" cy=\"" << num(z.imag()) << "\" r=\"" << num(3 * unit) << "\" fill=\"#444444\"/>\n";
  for (auto z : turning_points) {
    const double a = 5 * unit;
    o << "<path d=\"M" << num(z.real() - a) << ',' << num(z.imag() - a) << " L" << num(z.real() + a) << ',' << num(z.imag() + a) << " M"
      << num(z.real() - a) << ',' << num(z.imag() + a) << " L" << num(z.real() + a) << ',' << num(z.imag() - a)
      << "\" stroke=\"black\" stroke-width=\"" << num(1.5 * unit) << "\"/>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace svg

// pipeline -------------------------------------------------------------------

struct run_result {
  nlohmann::json diagram;
  nlohmann::json quantization;
  nlohmann::json monodromy;
  std::string svg;
  nlohmann::json sweep = nlohmann::json::array();
  std::vector<std::pair<std::string, std::string>> sweep_svgs;
  std::vector<std::string> diagnostics;
  /// Set when the run found a degeneracy (Stokes segment, wild collision).
  std::optional<std::string> degeneracy;
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("malformed JSON in ") + path + ": " + e.what());
  }
}

inline spectral_data load_spectral(const nlohmann::json& j, const run_config& cfg) {
  auto s = spectral_data::from_json(j);
  if (cfg.hbar_mod || cfg.hbar_arg) {
    const double r = cfg.hbar_mod ? *cfg.hbar_mod : std::abs(s.hbar());
    const double a = cfg.hbar_arg ? *cfg.hbar_arg : std::arg(s.hbar());
    s = s.with_hbar(std::polar(r, a));
  }
  if (cfg.delta_tp > 0.0) s.set_exclusion_radius(cfg.delta_tp);
  return s;
}

inline scattering_options scattering_options_for(const run_config& cfg) {
  scattering_options o;
  o.truncation = cfg.truncation;
  o.hbar_order = cfg.hbar_order;
  o.normalization = cfg.normalization;
  o.prune_tol = cfg.prune_tol;
  o.tracer.tol = cfg.tol;
  o.collisions.tol_x = cfg.tol_x;
  return o;
}

inline std::vector<svg::drawn_curve> drawn_walls(const scattering_diagram& d) {
  const auto lab = report_labeling(d.spectral());
  std::vector<svg::drawn_curve> out;
  for (const auto& w : d.walls) {
    const auto& c = d.curves[static_cast<std::size_t>(w.curve)];
    svg::drawn_curve dc;
    for (const auto& p : c.samples) dc.path.push_back(p.z);
    const auto t = global_type(d.spectral(), lab, c);
    dc.i = t.size() == 2 ? t[0] : c.i + 1;
    dc.j = t.size() == 2 ? t[1] : c.j + 1;
    dc.generation = w.generation;
    dc.label = "(" + std::to_string(dc.i) + "," + std::to_string(dc.j) + ") generation " + std::to_string(w.generation);
    out.push_back(std::move(dc));
  }
  return out;
}

inline std::vector<cplx> finite_poles(const spectral_data& s) {
  std::vector<cplx> out;
  for (const auto& p : s.poles())
    if (!p.at_infinity) out.push_back(p.z);
  return out;
}

inline std::vector<cplx> turning_point_positions(const spectral_data& s) {
  std::vector<cplx> out;
  for (const auto& t : s.turning_points()) out.push_back(t.z);
  return out;
}

/// Cycles microlocalized by default: a double loop at each turning point and
/// an edge cycle for each pair of turning points whose segment avoids the
/// other singular points.
inline std::vector<cycle> default_cycles(const spectral_data& s) {
  std::vector<cycle> out;
  if (!s.is_schrodinger() || s.rank() != 2) return out;
  const auto tps = turning_point_positions(s);
  const auto sing = s.singular_points();
  for (std::size_t a = 0; a < tps.size(); ++a) {
    double r = 0.5;
    for (auto p : sing)
      if (std::abs(p - tps[a]) > 1e-12) r = std::min(r, 0.25 * std::abs(p - tps[a]));
    auto c = turning_point_double_loop(s, tps[a], tps[a] + r);
    c.id = "tp-" + std::to_string(a);
    out.push_back(std::move(c));
  }
  for (std::size_t a = 0; a < tps.size(); ++a)
    for (std::size_t b = a + 1; b < tps.size(); ++b) {
      bool clear = true;
      for (auto p : sing) {
        if (std::abs(p - tps[a]) < 1e-12 || std::abs(p - tps[b]) < 1e-12) continue;
        const cplx d = tps[b] - tps[a];
        const double t = std::real((p - tps[a]) * std::conj(d)) / std::norm(d);
        if (t > 0.0 && t < 1.0 && std::abs(tps[a] + t * d - p) < 1e-9) clear = false;
      }
      if (!clear) continue;
      auto c = edge_cycle(s, tps[a], tps[b]);
      c.id = "edge-" + std::to_string(a) + "-" + std::to_string(b);
      out.push_back(std::move(c));
    }
  return out;
}

/// Traces one phase of the theta sweep; errors stay inside the frame.
inline nlohmann::json sweep_frame(const spectral_data& s, double theta, const run_config& cfg, double R, std::string* svg_out) {
  nlohmann::json f;
  f["theta"] = theta;
  try {
    const auto sd = s.with_hbar(std::polar(std::abs(s.hbar()), theta));
    tracer_options to;
    to.tol = cfg.tol;
    stokes_tracer tr(sd, to);
    const auto curves = trace_initial_curves(tr, cfg.truncation);
    const auto segs = detect_stokes_segments(tr, curves);
    auto sj = nlohmann::json::array();
    for (const auto& g : segs) sj.push_back({{"curve", g.curve}, {"from", g.from_vertex}, {"to", g.to_vertex}});
    f["curves"] = curves.size();
    f["segments"] = sj;
    f["degenerate"] = !segs.empty();
    std::vector<svg::drawn_curve> dc;
    for (const auto& c : curves) {
      svg::drawn_curve d;
      for (const auto& p : c.samples) d.path.push_back(p.z);
      d.i = c.i + 1;
      d.j = c.j + 1;
      d.label = "curve " + std::to_string(c.id);
      dc.push_back(std::move(d));
    }
    *svg_out = svg::render(R, dc, turning_point_positions(sd), finite_poles(sd), {}, "theta = " + svg::num(theta));
  } catch (const std::exception& e) {
    f["degenerate"] = true;
    f["error"] = e.what();
  }
  return f;
}

inline nlohmann::json ode_check_json(const spectral_data& s, const nlohmann::json& spec, const run_config& cfg) {
  if (!s.is_schrodinger() || s.rank() != 2) throw input_error("the ODE check needs a rank-2 Schrodinger equation");
  if (!spec.is_object() || !spec.contains("quadrilateral")) throw input_error("the ODE check needs \"ode_check\": {\"quadrilateral\": [four directions]}");
  const auto quad = spec.at("quadrilateral").get<std::vector<double>>();
  const auto edge = spec.value("edge", std::vector<int>{0, 1});
  const auto hb = spec.value("hbar", std::vector<double>{0.2, 0.1, 0.05});
  const int order = spec.value("order", cfg.hbar_order);
  const int sign = spec.value("sign", 1);
  const auto& tps = s.turning_points();
  if (edge.size() != 2 || edge[0] < 0 || edge[1] < 0 || static_cast<std::size_t>(std::max(edge[0], edge[1])) >= tps.size() || edge[0] == edge[1])
    throw input_error("ode_check.edge must name two distinct turning points");
  const auto g = edge_cycle(s, tps[static_cast<std::size_t>(edge[0])].z, tps[static_cast<std::size_t>(edge[1])].z, sign);
  const auto rep = compare_voros_fg(s, g, quad, hb, order);
  auto j = rep.to_json();
  j["order"] = order;
  j["edge"] = edge;
  j["pass"] = rep.decreasing && rep.in_band;
  return j;
}

/// Runs every stage; throws stage_error on the first failing stage.
inline run_result run_pipeline(const run_config& cfg) {
  run_result res;
  run_stage("config", [&] { cfg.validate(); return 0; });
  const auto input = run_stage("input", [&] { return read_json_file(cfg.input); });
  const auto s = run_stage("turning points", [&] { return load_spectral(input, cfg); });
  if (s.is_schrodinger() && s.rank() == 2) {
    for (const auto& d : check_weakly_gmn(s).diagnostics) res.diagnostics.push_back("weakly GMN: " + d);
    for (const auto& d : check_wkb_regular(s).diagnostics) res.diagnostics.push_back("WKB regularity: " + d);
  }
  const double R = cfg.window > 0.0 ? cfg.window : default_window(s);
  for (std::size_t k = 0; k < cfg.sweep.size(); ++k) {
    std::string svg_text;
    res.sweep.push_back(sweep_frame(s, cfg.sweep[k], cfg, R, &svg_text));
    if (!svg_text.empty()) res.sweep_svgs.push_back({"graph_theta_" + std::to_string(k) + ".svg", svg_text});
  }

  run_stage("tracing", [&] {
    tracer_options to;
    to.tol = cfg.tol;
    stokes_tracer tr(s, to);
    const auto segs = detect_stokes_segments(tr, trace_initial_curves(tr, cfg.truncation));
    if (!segs.empty()) res.degeneracy = "Stokes segment between turning points at this phase of hbar";
    return 0;
  });
  if (res.degeneracy) return res;

  const auto d = run_stage("scattering", [&] { return run_scattering(s, scattering_options_for(cfg)); });
  run_stage("tameness", [&] {
    const auto t = check_tameness(s, d.curves, d.collisions);
    for (const auto& v : t.violations) res.diagnostics.push_back("tameness: " + v);
    for (const auto& v : d.diagnostics)
      if (v.rfind("halted", 0) == 0) res.degeneracy = v;
    return 0;
  });

  res.diagram = d.to_json();
  res.diagram["hbar"] = {s.hbar().real(), s.hbar().imag()};
  res.diagram["window"] = R;
  auto tpj = nlohmann::json::array();
  for (const auto& t : s.turning_points()) tpj.push_back({t.z.real(), t.z.imag()});
  res.diagram["turning_points"] = tpj;
  try {
    const auto g = build_graph(s, d.curves, d.collisions, R);
    res.diagram["graph"] = g.to_json();
  } catch (const std::exception& e) {
    res.diagnostics.push_back(std::string("graph: ") + e.what());
  }
  std::vector<cplx> cols;
  for (const auto& c : d.collisions) cols.push_back(c.point);
  res.svg = svg::render(R, drawn_walls(d), turning_point_positions(s), finite_poles(s), cols, "Stokes curves");
  if (res.degeneracy) return res;

  const auto q = run_stage("quantization", [&] { return build_quantization(d, default_cycles(s)); });
  res.quantization["truncation"] = cfg.truncation;
  res.quantization["loops"] = q.monodromy_json();
  auto ext = nlohmann::json::array();
  for (std::size_t k = 0; k < s.turning_points().size(); ++k)
    ext.push_back({{"turning_point", k}, {"z", {s.turning_points()[k].z.real(), s.turning_points()[k].z.imag()}}, {"extension", "1+1"}});
  res.quantization["extensions"] = ext;
  res.monodromy = q.quantization_json();

  if (cfg.ode_check)
    res.monodromy["ode_check"] = run_stage("odecheck", [&] { return ode_check_json(s, input.value("ode_check", nlohmann::json{}), cfg); });

  return res;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw input_error("cannot write " + p.string());
  out << text;
}

/// Writes the artifacts that were produced; empty ones are skipped.
inline void write_artifacts(const run_result& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw input_error("cannot create " + dir + ": " + ec.message());
  const fs::path base(dir);
  if (!r.diagram.is_null()) write_text(base / "diagram.json", r.diagram.dump(2) + "\n");
  if (!r.quantization.is_null()) write_text(base / "quantization.json", r.quantization.dump(2) + "\n");
  if (!r.monodromy.is_null()) write_text(base / "monodromy.json", r.monodromy.dump(2) + "\n");
  if (!r.svg.empty()) write_text(base / "graph.svg", r.svg);
  if (!r.sweep.empty()) write_text(base / "sweep.json", r.sweep.dump(2) + "\n");
  for (const auto& [name, text] : r.sweep_svgs) write_text(base / name, text);
}

}  // namespace exwkb
