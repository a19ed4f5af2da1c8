#include <gtest/gtest.h>

#include "exwkb/stokes_graph.hpp"

namespace {

using exwkb::cplx;
using exwkb::gauss_rational;
using exwkb::polynomial;
using exwkb::rational_function;
using exwkb::region_class;
using exwkb::spectral_data;

rational_function poly(std::vector<long> c) {
  std::vector<gauss_rational> g;
  for (long v : c) g.emplace_back(v);
  return rational_function(polynomial(std::move(g)));
}

spectral_data bnr() {
  std::vector<std::vector<rational_function>> b(3);
  b[0] = {rational_function{}};
  b[1] = {poly({3})};
  b[2] = {rational_function(polynomial({0, gauss_rational(0, 2)}))};
  return spectral_data::from_charpoly(3, b);
}

struct built {
  std::vector<exwkb::stokes_curve> curves;
  std::vector<exwkb::collision> collisions;
  exwkb::stokes_graph graph;
};

built build(const spectral_data& s, double window = 0.0) {
  const double w = window > 0.0 ? window : exwkb::default_window(s);
  exwkb::tracer_options opt;
  opt.max_radius = 1.05 * w / s.configuration_scale();
  exwkb::stokes_tracer tr(s, opt);
  built b;
  b.curves = exwkb::trace_initial_curves(tr, 1e6);
  b.collisions = exwkb::detect_collisions(tr, b.curves);
  b.graph = exwkb::build_graph(s, b.curves, b.collisions, w);
  return b;
}

int count(const std::vector<exwkb::region_info>& r, region_class c) {
  return static_cast<int>(std::count_if(r.begin(), r.end(), [&](const auto& x) { return x.type == c; }));
}

TEST(StokesGraph, Airy) {
  const auto s = spectral_data::schrodinger({rational_function::z()});
  const auto b = build(s);
  const auto& g = b.graph;
  int tps = 0, bnd = 0, curve_edges = 0;
  for (const auto& v : g.vertices) {
    tps += v.type == exwkb::graph_vertex::kind::turning_point;
    bnd += v.type == exwkb::graph_vertex::kind::boundary;
  }
  for (const auto& e : g.edges) curve_edges += !e.arc();
  EXPECT_EQ(tps, 1);
  EXPECT_EQ(bnd, 3);
  EXPECT_EQ(curve_edges, 3);
  EXPECT_EQ(g.faces.size(), 3u);
  EXPECT_TRUE(g.euler_ok());
  const auto r = exwkb::classify_regions(g, s);
  EXPECT_EQ(count(r, region_class::half_plane), 3);
}

TEST(StokesGraph, QuadraticHasStrip) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})});
  const auto b = build(s);
  EXPECT_EQ(b.curves.size(), 6u);
  EXPECT_EQ(b.graph.faces.size(), 5u);
  EXPECT_TRUE(b.graph.euler_ok());
  const auto r = exwkb::classify_regions(b.graph, s);
  EXPECT_EQ(count(r, region_class::horizontal_strip), 1);
  EXPECT_EQ(count(r, region_class::half_plane), 4);
  for (const auto& x : r)
    if (x.type == region_class::horizontal_strip) EXPECT_EQ(b.graph.faces[static_cast<std::size_t>(x.face)].turning_points, (std::vector<int>{0, 1}));
}

TEST(StokesGraph, ClassesStableUnderWindowDoubling) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})});
  const auto r1 = exwkb::classify_regions(build(s, 4.0).graph, s);
  const auto r2 = exwkb::classify_regions(build(s, 8.0).graph, s);
  EXPECT_EQ(count(r1, region_class::horizontal_strip), count(r2, region_class::horizontal_strip));
  EXPECT_EQ(count(r1, region_class::half_plane), count(r2, region_class::half_plane));
}

TEST(StokesGraph, EmptyCurveSetIsOneFace) {
  const auto s = spectral_data::schrodinger({rational_function::z()});
  const auto g = exwkb::build_graph(s, {}, {}, 4.0);
  EXPECT_EQ(g.faces.size(), 1u);
  EXPECT_TRUE(g.euler_ok());
}

TEST(StokesGraph, HalfEdgePartition) {
  for (const auto& s : {spectral_data::schrodinger({poly({-1, 0, 1})}), bnr()}) {
    const auto g = build(s).graph;
    std::vector<int> seen(2 * g.edges.size(), 0);
    for (const auto& f : g.faces) {
      for (int h : f.boundary) ++seen[static_cast<std::size_t>(h)];
      for (const auto& hole : f.holes)
        for (int h : hole) ++seen[static_cast<std::size_t>(h)];
    }
    // Every half-edge except the outside of the window arcs lies on exactly one face.
    for (std::size_t h = 0; h < seen.size(); ++h) {
      const bool outside = g.edges[h / 2].arc() && h % 2 == 1;
      EXPECT_EQ(seen[h], outside ? 0 : 1) << h;
    }
    EXPECT_TRUE(g.euler_ok());
  }
}

TEST(StokesGraph, BnrSplitsAtCollisions) {
  const auto b = build(bnr());
  int cols = 0;
  for (const auto& v : b.graph.vertices) cols += v.type == exwkb::graph_vertex::kind::collision;
  EXPECT_EQ(cols, 2);
  EXPECT_TRUE(b.graph.euler_ok());
  EXPECT_THROW(exwkb::classify_regions(b.graph, bnr()), exwkb::input_error);
}

TEST(StokesGraph, SegmentRejected) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})}, cplx(0.0, 1.0));
  exwkb::stokes_tracer tr(s);
  const auto curves = exwkb::trace_initial_curves(tr, 10.0);
  EXPECT_THROW(exwkb::build_graph(s, curves, {}), exwkb::degenerate_error);
}

TEST(Tameness, AiryAndBnr) {
  {
    const auto s = spectral_data::schrodinger({rational_function::z()});
    const auto b = build(s);
    EXPECT_TRUE(exwkb::check_tameness(s, b.curves, b.collisions).tame);
  }
  const auto s = bnr();
  const auto b = build(s);
  const auto r = exwkb::check_tameness(s, b.curves, b.collisions);
  EXPECT_TRUE(r.tame);
  EXPECT_EQ(r.ordered_collisions, 2);
  EXPECT_EQ(r.cyclic_collisions, 0);
  EXPECT_GT(r.min_singular_distance, 0.5);
}

TEST(Tameness, ThreeCycleThroughOnePointIsNotTame) {
  exwkb::collision c;
  c.point = cplx(5.0, 5.0);
  c.walls.resize(3);
  const int types[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int k = 0; k < 3; ++k) {
    c.walls[static_cast<std::size_t>(k)].li = types[k][0];
    c.walls[static_cast<std::size_t>(k)].lj = types[k][1];
  }
  exwkb::classify_collision(c);
  EXPECT_TRUE(c.cyclic);
  EXPECT_TRUE(c.ordered);
  const auto r = exwkb::check_tameness(spectral_data::schrodinger({rational_function::z()}), {}, {c});
  EXPECT_FALSE(r.tame);
}

TEST(Tameness, MonotoneUnderAddingCurves) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})}, cplx(0.0, 1.0));
  exwkb::stokes_tracer tr(s);
  const auto curves = exwkb::trace_initial_curves(tr, 10.0);
  std::vector<exwkb::stokes_curve> sub;
  bool was_bad = false;
  for (const auto& c : curves) {
    sub.push_back(c);
    const bool bad = !exwkb::check_tameness(s, sub, {}).tame;
    EXPECT_TRUE(bad || !was_bad);
    was_bad = bad;
  }
  EXPECT_TRUE(was_bad);
}

}  // namespace
