#pragma once

// Planar Stokes graph inside a disk window: curves split at collisions and
// clipped at the window, faces by half-edge traversal, rank-2 region classes
// and the tameness report.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "exwkb/errors.hpp"
#include "exwkb/spectral.hpp"
#include "exwkb/stokes_tracer.hpp"

namespace exwkb {

struct graph_vertex {
  enum class kind { turning_point, collision, boundary, pole, cap };
  kind type = kind::boundary;
  cplx z;
  /// Turning point, collision or pole index; -1 for boundary and cap vertices.
  int ref = -1;
};

inline const char* vertex_kind_name(graph_vertex::kind k) {
  switch (k) {
    case graph_vertex::kind::turning_point: return "turning_point";
    case graph_vertex::kind::collision: return "collision";
    case graph_vertex::kind::boundary: return "boundary";
    case graph_vertex::kind::pole: return "pole";
    default: return "cap";
  }
}

struct graph_edge {
  int from = 0;
  int to = 0;
  /// Curve index, -1 for window arcs.
  int curve = -1;
  std::vector<cplx> path;
  std::vector<double> masses;
  bool arc() const { return curve < 0; }
};

struct graph_face {
  int id = 0;
  /// Half-edges (2e forward, 2e+1 backward) of the outer boundary, in order.
  std::vector<int> boundary;
  std::vector<std::vector<int>> holes;
  double area = 0.0;
  std::vector<int> turning_points;
  std::vector<int> poles_on_boundary;
  std::vector<int> poles_inside;
  /// Maximal runs of window arcs along the boundary.
  int arc_runs = 0;
  bool has_cap = false;
};

enum class region_class { horizontal_strip, half_plane, window_truncated };

inline const char* region_class_name(region_class c) {
  switch (c) {
    case region_class::horizontal_strip: return "horizontal-strip";
    case region_class::half_plane: return "half-plane";
    default: return "window-truncated";
  }
}

struct region_info {
  int face = 0;
  region_class type = region_class::window_truncated;
};

class stokes_graph {
 public:
  std::vector<graph_vertex> vertices;
  std::vector<graph_edge> edges;
  std::vector<graph_face> faces;
  double window = 1.0;
  int components = 0;

  int half_edge_from(int h) const { return h % 2 == 0 ? edges[static_cast<std::size_t>(h / 2)].from : edges[static_cast<std::size_t>(h / 2)].to; }
  int half_edge_to(int h) const { return half_edge_from(h ^ 1); }

  /// Points of half-edge h in traversal order.
  std::vector<cplx> half_edge_path(int h) const {
    auto p = edges[static_cast<std::size_t>(h / 2)].path;
    if (h % 2) std::reverse(p.begin(), p.end());
    return p;
  }

  int euler_characteristic() const {
    return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) + static_cast<int>(faces.size());
  }
  /// V - E + F (bounded faces) equals the number of connected components.
  bool euler_ok() const { return euler_characteristic() == components; }

  nlohmann::json to_json() const;
};

inline nlohmann::json stokes_graph::to_json() const {
  nlohmann::json j;
  auto vs = nlohmann::json::array();
  for (std::size_t k = 0; k < vertices.size(); ++k)
    vs.push_back({{"id", k}, {"kind", vertex_kind_name(vertices[k].type)}, {"ref", vertices[k].ref},
                  {"z", {vertices[k].z.real(), vertices[k].z.imag()}}});
  auto es = nlohmann::json::array();
  for (std::size_t k = 0; k < edges.size(); ++k)
    es.push_back({{"id", k}, {"from", edges[k].from}, {"to", edges[k].to}, {"curve", edges[k].curve}});
  auto fs = nlohmann::json::array();
  for (const auto& f : faces)
    fs.push_back({{"id", f.id}, {"boundary", f.boundary}, {"holes", f.holes}, {"turning_points", f.turning_points},
                  {"arc_runs", f.arc_runs}, {"area", f.area}});
  j["window"] = window;
  j["vertices"] = vs;
  j["edges"] = es;
  j["faces"] = fs;
  return j;
}

/// Radius of the clipping disk: 4 max(|turning points|, |finite poles|, 1).
inline double default_window(const spectral_data& s) { return 4.0 * s.configuration_scale(); }

namespace detail {

inline double polygon_area(const std::vector<cplx>& p) {
  double a = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) a += p[k].real() * p[k + 1].imag() - p[k + 1].real() * p[k].imag();
  if (!p.empty()) a += p.back().real() * p.front().imag() - p.front().real() * p.back().imag();
  return 0.5 * a;
}

inline bool point_in_polygon(cplx q, const std::vector<cplx>& p) {
  bool in = false;
  for (std::size_t a = 0, b = p.size() - 1; a < p.size(); b = a++) {
    if ((p[a].imag() > q.imag()) != (p[b].imag() > q.imag())) {
      const double x = p[a].real() + (q.imag() - p[a].imag()) * (p[b].real() - p[a].real()) / (p[b].imag() - p[a].imag());
      if (q.real() < x) in = !in;
    }
  }
  return in;
}

struct union_find {
  std::vector<int> p;
  explicit union_find(std::size_t n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[static_cast<std::size_t>(x)] == x ? x : p[static_cast<std::size_t>(x)] = find(p[static_cast<std::size_t>(x)]); }
  void unite(int a, int b) { p[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace detail

/// Builds the graph of the given curves inside the disk |z| <= window.
inline stokes_graph build_graph(const spectral_data& s, const std::vector<stokes_curve>& curves,
                                const std::vector<collision>& collisions, double window = 0.0) {
  stokes_graph g;
  g.window = window > 0.0 ? window : default_window(s);
  const double R = g.window;
  const double scale = s.configuration_scale();
  const double merge = 1e-6 * scale;

  std::vector<int> tp_vertex(s.turning_points().size(), -1), col_vertex(collisions.size(), -1), pole_vertex(s.poles().size(), -1);
  auto add_vertex = [&](graph_vertex::kind k, cplx z, int ref) {
    g.vertices.push_back({k, z, ref});
    return static_cast<int>(g.vertices.size()) - 1;
  };
  auto vertex_for_tp = [&](int k) {
    if (tp_vertex[static_cast<std::size_t>(k)] < 0)
      tp_vertex[static_cast<std::size_t>(k)] = add_vertex(graph_vertex::kind::turning_point, s.turning_points()[static_cast<std::size_t>(k)].z, k);
    return tp_vertex[static_cast<std::size_t>(k)];
  };
  auto vertex_for_collision = [&](int k) {
    if (col_vertex[static_cast<std::size_t>(k)] < 0)
      col_vertex[static_cast<std::size_t>(k)] = add_vertex(graph_vertex::kind::collision, collisions[static_cast<std::size_t>(k)].point, k);
    return col_vertex[static_cast<std::size_t>(k)];
  };
  auto collision_at = [&](cplx z) {
    for (std::size_t k = 0; k < collisions.size(); ++k)
      if (std::abs(collisions[k].point - z) <= merge) return static_cast<int>(k);
    return -1;
  };
  std::vector<int> boundary_vertices;

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& c = curves[ci];
    if (c.end == terminus::turning_point_hit) throw degenerate_error("Stokes segment: curve " + std::to_string(ci) + " runs into a turning point");
    // Polyline from the source vertex.
    std::vector<cplx> pts;
    std::vector<double> ms;
    int start_vertex;
    if (c.source.type == vertex_ref::kind::turning_point) {
      start_vertex = vertex_for_tp(c.source.index);
      pts.push_back(c.source.z);
      ms.push_back(0.0);
    } else {
      const int k = collision_at(c.source.z);
      if (std::abs(c.source.z) >= R) continue;
      start_vertex = k >= 0 ? vertex_for_collision(k) : add_vertex(graph_vertex::kind::collision, c.source.z, -1);
    }
    for (const auto& p : c.samples) {
      if (!pts.empty() && std::abs(p.z - pts.back()) == 0.0) continue;
      pts.push_back(p.z);
      ms.push_back(p.mass);
    }
    // Split masses at collisions this curve passes through.
    std::vector<std::pair<double, int>> splits;
    for (std::size_t k = 0; k < collisions.size(); ++k)
      for (const auto& w : collisions[k].walls)
        if (w.curve == static_cast<int>(ci) && !w.born && std::abs(collisions[k].point) < R)
          splits.push_back({w.mass, static_cast<int>(k)});
    std::sort(splits.begin(), splits.end());

    int cur = start_vertex;
    graph_edge e;
    e.from = cur;
    e.curve = static_cast<int>(ci);
    e.path.push_back(pts.front());
    e.masses.push_back(ms.front());
    std::size_t next_split = 0;
    bool closed = false;
    for (std::size_t k = 1; k < pts.size() && !closed; ++k) {
      // Collisions inside this polyline segment.
      while (next_split < splits.size() && splits[next_split].first <= ms[k]) {
        const auto& col = collisions[static_cast<std::size_t>(splits[next_split].second)];
        e.path.push_back(col.point);
        e.masses.push_back(splits[next_split].first);
        e.to = vertex_for_collision(splits[next_split].second);
        g.edges.push_back(e);
        e = graph_edge{};
        e.from = g.edges.back().to;
        e.curve = static_cast<int>(ci);
        e.path.push_back(col.point);
        e.masses.push_back(splits[next_split].first);
        ++next_split;
      }
      const cplx a = pts[k - 1], b = pts[k];
      if (std::abs(b) >= R) {
        // |a + t (b - a)| = R
        const cplx d = b - a;
        const double qa = std::norm(d), qb = 2.0 * std::real(std::conj(a) * d), qc = std::norm(a) - R * R;
        const double t = std::clamp((-qb + std::sqrt(std::max(0.0, qb * qb - 4.0 * qa * qc))) / (2.0 * qa), 0.0, 1.0);
        const cplx x = a + t * d;
        e.path.push_back(x);
        e.masses.push_back(ms[k - 1] + t * (ms[k] - ms[k - 1]));
        e.to = add_vertex(graph_vertex::kind::boundary, x * (R / std::abs(x)), -1);
        boundary_vertices.push_back(e.to);
        closed = true;
        break;
      }
      e.path.push_back(b);
      e.masses.push_back(ms[k]);
    }
    if (!closed) {
      if (c.end == terminus::pole && c.end_vertex >= 0) {
        const int pk = c.end_vertex;
        if (pole_vertex[static_cast<std::size_t>(pk)] < 0)
          pole_vertex[static_cast<std::size_t>(pk)] = add_vertex(graph_vertex::kind::pole, s.poles()[static_cast<std::size_t>(pk)].z, pk);
        e.to = pole_vertex[static_cast<std::size_t>(pk)];
        e.path.push_back(s.poles()[static_cast<std::size_t>(pk)].z);
        e.masses.push_back(e.masses.back());
      } else {
        e.to = add_vertex(graph_vertex::kind::cap, e.path.back(), -1);
      }
    }
    if (e.path.size() >= 2) g.edges.push_back(e);
  }

  // Window arcs between consecutive boundary vertices.
  if (boundary_vertices.empty()) boundary_vertices.push_back(add_vertex(graph_vertex::kind::boundary, cplx(R, 0.0), -1));
  std::sort(boundary_vertices.begin(), boundary_vertices.end(), [&](int a, int b) {
    auto ang = [&](int v) {
      double t = std::arg(g.vertices[static_cast<std::size_t>(v)].z);
      return t < 0 ? t + 2.0 * M_PI : t;
    };
    return ang(a) < ang(b);
  });
  for (std::size_t k = 0; k < boundary_vertices.size(); ++k) {
    const int a = boundary_vertices[k], b = boundary_vertices[(k + 1) % boundary_vertices.size()];
    const double ta = std::arg(g.vertices[static_cast<std::size_t>(a)].z);
    double tb = std::arg(g.vertices[static_cast<std::size_t>(b)].z);
    while (tb <= ta + 1e-15) tb += 2.0 * M_PI;
    if (boundary_vertices.size() == 1) tb = ta + 2.0 * M_PI;
    graph_edge e;
    e.from = a;
    e.to = b;
    const int n = std::max(8, static_cast<int>(64.0 * (tb - ta) / (2.0 * M_PI)));
    for (int i = 0; i <= n; ++i) e.path.push_back(std::polar(R, ta + (tb - ta) * i / n));
    e.path.front() = g.vertices[static_cast<std::size_t>(a)].z;
    e.path.back() = g.vertices[static_cast<std::size_t>(b)].z;
    g.edges.push_back(std::move(e));
  }

  // Rotation system: outgoing half-edges per vertex sorted counterclockwise.
  const std::size_t nh = 2 * g.edges.size();
  std::vector<std::vector<int>> out(g.vertices.size());
  auto direction = [&](int h) {
    const auto p = g.half_edge_path(h);
    const cplx o = p.front();
    for (std::size_t k = 1; k < p.size(); ++k)
      if (std::abs(p[k] - o) > 1e-9 * scale) return std::arg(p[k] - o);
    return std::arg(p.back() - o);
  };
  for (std::size_t h = 0; h < nh; ++h) out[static_cast<std::size_t>(g.half_edge_from(static_cast<int>(h)))].push_back(static_cast<int>(h));
  std::vector<int> pos(nh);
  for (auto& l : out) {
    std::sort(l.begin(), l.end(), [&](int a, int b) { return direction(a) < direction(b); });
    for (std::size_t k = 0; k < l.size(); ++k) pos[static_cast<std::size_t>(l[k])] = static_cast<int>(k);
  }
  auto next = [&](int h) {
    const int tw = h ^ 1;
    const auto& l = out[static_cast<std::size_t>(g.half_edge_from(tw))];
    const int k = pos[static_cast<std::size_t>(tw)];
    return l[static_cast<std::size_t>((k - 1 + static_cast<int>(l.size())) % static_cast<int>(l.size()))];
  };

  // Boundary cycles.
  std::vector<int> visited(nh, 0);
  struct cyc {
    std::vector<int> h;
    std::vector<cplx> poly;
    double area;
    bool exterior;
  };
  std::vector<cyc> cycles;
  for (std::size_t h0 = 0; h0 < nh; ++h0) {
    if (visited[h0]) continue;
    cyc c{{}, {}, 0.0, false};
    int h = static_cast<int>(h0);
    while (!visited[static_cast<std::size_t>(h)]) {
      visited[static_cast<std::size_t>(h)] = 1;
      c.h.push_back(h);
      const auto p = g.half_edge_path(h);
      c.poly.insert(c.poly.end(), p.begin(), p.end() - 1);
      if (g.edges[static_cast<std::size_t>(h / 2)].arc() && h % 2 == 1) c.exterior = true;
      h = next(h);
    }
    c.area = detail::polygon_area(c.poly);
    cycles.push_back(std::move(c));
  }
  const double tiny = 1e-12 * R * R;
  std::vector<int> face_of_cycle(cycles.size(), -1);
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    if (cycles[k].exterior || cycles[k].area <= tiny) continue;
    graph_face f;
    f.id = static_cast<int>(g.faces.size());
    f.boundary = cycles[k].h;
    f.area = cycles[k].area;
    face_of_cycle[k] = f.id;
    g.faces.push_back(std::move(f));
  }
  for (std::size_t k = 0; k < cycles.size(); ++k) {
    if (cycles[k].exterior || face_of_cycle[k] >= 0) continue;
    const cplx probe = cycles[k].poly.front();
    int best = -1;
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < cycles.size(); ++m) {
      if (face_of_cycle[m] < 0) continue;
      if (detail::point_in_polygon(probe, cycles[m].poly) && cycles[m].area < best_area) {
        best = face_of_cycle[m];
        best_area = cycles[m].area;
      }
    }
    if (best >= 0) g.faces[static_cast<std::size_t>(best)].holes.push_back(cycles[k].h);
  }

  // Face attributes.
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    auto& f = g.faces[fi];
    bool prev_arc = g.edges[static_cast<std::size_t>(f.boundary.back() / 2)].arc();
    for (int h : f.boundary) {
      const bool is_arc = g.edges[static_cast<std::size_t>(h / 2)].arc();
      if (is_arc && !prev_arc) ++f.arc_runs;
      prev_arc = is_arc;
      const auto& v = g.vertices[static_cast<std::size_t>(g.half_edge_from(h))];
      if (v.type == graph_vertex::kind::turning_point && std::find(f.turning_points.begin(), f.turning_points.end(), v.ref) == f.turning_points.end())
        f.turning_points.push_back(v.ref);
      if (v.type == graph_vertex::kind::pole && std::find(f.poles_on_boundary.begin(), f.poles_on_boundary.end(), v.ref) == f.poles_on_boundary.end())
        f.poles_on_boundary.push_back(v.ref);
      if (v.type == graph_vertex::kind::cap) f.has_cap = true;
    }
    if (f.arc_runs == 0 && std::all_of(f.boundary.begin(), f.boundary.end(), [&](int h) { return g.edges[static_cast<std::size_t>(h / 2)].arc(); }))
      f.arc_runs = 1;
    std::sort(f.turning_points.begin(), f.turning_points.end());
    for (const auto& hole : f.holes)
      for (int h : hole)
        if (g.vertices[static_cast<std::size_t>(g.half_edge_from(h))].type == graph_vertex::kind::cap) f.has_cap = true;
    std::vector<cplx> poly;
    for (int h : f.boundary) {
      const auto p = g.half_edge_path(h);
      poly.insert(poly.end(), p.begin(), p.end() - 1);
    }
    for (std::size_t pk = 0; pk < s.poles().size(); ++pk) {
      const auto& p = s.poles()[pk];
      if (p.at_infinity || pole_vertex[pk] >= 0 || std::abs(p.z) >= R) continue;
      if (detail::point_in_polygon(p.z, poly)) f.poles_inside.push_back(static_cast<int>(pk));
    }
  }

  detail::union_find uf(g.vertices.size());
  for (const auto& e : g.edges) uf.unite(e.from, e.to);
  std::vector<int> roots;
  for (std::size_t v = 0; v < g.vertices.size(); ++v) roots.push_back(uf.find(static_cast<int>(v)));
  std::sort(roots.begin(), roots.end());
  g.components = static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());
  return g;
}

/// Rank-2 classes: two turning points and two pole ends make a horizontal
/// strip, one turning point and one pole end a half-plane.  Faces with caps,
/// holes or interior poles are window-truncated.
inline std::vector<region_info> classify_regions(const stokes_graph& g, const spectral_data& s) {
  if (s.rank() != 2) throw input_error("region classification needs rank 2");
  std::vector<region_info> out;
  for (const auto& f : g.faces) {
    region_info r{f.id, region_class::window_truncated};
    const int zeros = static_cast<int>(f.turning_points.size());
    const int ends = f.arc_runs + static_cast<int>(f.poles_on_boundary.size());
    const bool truncated = f.has_cap || !f.holes.empty() || !f.poles_inside.empty() || zeros == 0;
    if (!truncated) {
      if (zeros == 2 && ends == 2) {
        r.type = region_class::horizontal_strip;
      } else if (zeros == 1 && ends == 1) {
        r.type = region_class::half_plane;
      } else {
        throw geometry_error("face " + std::to_string(f.id) + " matches neither a strip nor a half-plane (" +
                             std::to_string(zeros) + " turning points, " + std::to_string(ends) + " pole ends)");
      }
    }
    out.push_back(r);
  }
  return out;
}

struct tameness_report {
  bool tame = true;
  std::vector<std::string> violations;
  int ordered_collisions = 0;
  int cyclic_collisions = 0;
  /// Smallest distance between points of Sing (turning points and ordered collisions).
  double min_singular_distance = std::numeric_limits<double>::infinity();
  nlohmann::json to_json() const {
    return {{"tame", tame}, {"violations", violations}, {"ordered_collisions", ordered_collisions},
            {"cyclic_collisions", cyclic_collisions},
            {"min_singular_distance", std::isfinite(min_singular_distance) ? nlohmann::json(min_singular_distance) : nlohmann::json(nullptr)}};
  }
};

inline tameness_report check_tameness(const spectral_data& s, const std::vector<stokes_curve>& curves,
                                      const std::vector<collision>& collisions) {
  tameness_report r;
  auto fail = [&](std::string why) {
    r.tame = false;
    r.violations.push_back(std::move(why));
  };
  for (std::size_t k = 0; k < s.turning_points().size(); ++k)
    if (!s.turning_points()[k].simple()) fail("turning point " + std::to_string(k) + " is not a simple double branch point");
  std::vector<cplx> sing;
  for (const auto& t : s.turning_points()) sing.push_back(t.z);
  const double guard = 2.0 * s.exclusion_radius();
  for (std::size_t k = 0; k < collisions.size(); ++k) {
    const auto& c = collisions[k];
    if (c.cyclic) {
      ++r.cyclic_collisions;
      fail("cyclic ordered collision " + std::to_string(k));
    }
    if (!c.ordered) continue;
    ++r.ordered_collisions;
    sing.push_back(c.point);
    for (std::size_t t = 0; t < s.turning_points().size(); ++t)
      if (std::abs(c.point - s.turning_points()[t].z) < guard) fail("ordered collision " + std::to_string(k) + " at turning point " + std::to_string(t));
    if (!c.transverse) fail("tangential collision " + std::to_string(k));
  }
  for (std::size_t a = 0; a < sing.size(); ++a)
    for (std::size_t b = a + 1; b < sing.size(); ++b) r.min_singular_distance = std::min(r.min_singular_distance, std::abs(sing[a] - sing[b]));
  if (r.min_singular_distance <= 1e-9 * s.configuration_scale()) fail("singular points are not separated");
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto e = curves[k].end;
    if (e == terminus::turning_point_hit) fail("curve " + std::to_string(k) + " ends at a turning point");
    if (e == terminus::step_collapse || e == terminus::none) fail("curve " + std::to_string(k) + " did not terminate cleanly: " + curves[k].diagnostic);
  }
  return r;
}

}  // namespace exwkb
