#include <chrono>

#include <gtest/gtest.h>

#include "exwkb/stokes_tracer.hpp"

namespace {

using exwkb::cplx;
using exwkb::gauss_rational;
using exwkb::polynomial;
using exwkb::rational_function;
using exwkb::spectral_data;
using exwkb::stokes_tracer;

rational_function poly(std::vector<long> c) {
  std::vector<gauss_rational> g;
  for (long v : c) g.emplace_back(v);
  return rational_function(polynomial(std::move(g)));
}

spectral_data airy(cplx hbar = 1.0) { return spectral_data::schrodinger({rational_function::z()}, hbar); }
spectral_data quadratic(cplx hbar = 1.0) { return spectral_data::schrodinger({poly({-1, 0, 1})}, hbar); }
spectral_data bnr(cplx hbar = 1.0) {
  std::vector<std::vector<rational_function>> b(3);
  b[0] = {rational_function{}};
  b[1] = {poly({3})};
  b[2] = {rational_function(polynomial({0, gauss_rational(0, 2)}))};
  return spectral_data::from_charpoly(3, b, hbar);
}

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * M_PI);
  return std::min(d, 2.0 * M_PI - d);
}

TEST(InitialRays, AiryDirections) {
  const auto s = airy();
  stokes_tracer tr(s);
  const auto g = tr.initial_rays(0);
  ASSERT_EQ(g.size(), 3u);
  const double expect[] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  for (int k = 0; k < 3; ++k) EXPECT_LT(angle_gap(std::arg(g[static_cast<std::size_t>(k)].start), expect[k]), 1e-9);
}

TEST(InitialRays, AiryRotatesWithHbarPhase) {
  for (double th : {0.3, -0.7, 1.2}) {
    const auto s = airy(std::polar(1.0, th));
    stokes_tracer tr(s);
    for (const auto& g : tr.initial_rays(0)) {
      double best = 10.0;
      for (int k = 0; k < 3; ++k) best = std::min(best, angle_gap(std::arg(g.start), 2.0 * th / 3.0 + 2.0 * M_PI * k / 3.0));
      EXPECT_LT(best, 1e-9);
    }
  }
}

TEST(InitialRays, BnrGermsAtPlusOne) {
  const auto s = bnr();
  stokes_tracer tr(s);
  const auto g = tr.initial_rays(1);
  ASSERT_EQ(g.size(), 3u);
  for (const auto& x : g) {
    EXPECT_LT(std::abs(x.start - 1.0), 0.1);
    // The germ pair is the colliding one: their difference is small next to the third sheet.
    const cplx d = x.sheets[static_cast<std::size_t>(x.i)] - x.sheets[static_cast<std::size_t>(x.j)];
    EXPECT_LT(std::abs(d), 0.5);
  }
}

TEST(InitialRays, RejectsNonSimpleTurningPoint) {
  const auto s = spectral_data::schrodinger({poly({0, 0, 1})});
  stokes_tracer tr(s);
  EXPECT_THROW(tr.initial_rays(0), exwkb::unsupported_turning_point);
}

TEST(Trace, AiryEndpointAtMassOne) {
  const auto s = airy();
  stokes_tracer tr(s);
  const auto g = tr.initial_rays(0);
  const auto c = tr.trace(g[0], 1.0);
  EXPECT_EQ(c.end, exwkb::terminus::mass_cap);
  // mass = Re int 2 sqrt(z) dz = (4/3) z^{3/2}
  EXPECT_LT(std::abs(c.samples.back().z - std::pow(0.75, 2.0 / 3.0)), 1e-8);
  for (const auto& p : c.samples) EXPECT_LT(std::abs(p.z.imag()), 1e-9);
}

TEST(Trace, DoubledHbarHalvesMass) {
  const auto s1 = quadratic(cplx(0.6, 0.8));
  const auto s2 = quadratic(cplx(1.2, 1.6));
  stokes_tracer t1(s1), t2(s2);
  const auto c1 = t1.trace(t1.initial_rays(1)[0], 2.0);
  const auto c2 = t2.trace(t2.initial_rays(1)[0], 1.0);
  EXPECT_LT(std::abs(c1.samples.back().z - c2.samples.back().z), 1e-7);
  EXPECT_NEAR(c2.samples.front().mass * 2.0, c1.samples.front().mass, 1e-9);
}

TEST(Trace, QuadraticRealRayRunsOut) {
  const auto s = quadratic();
  stokes_tracer tr(s);
  for (const auto& g : tr.initial_rays(1)) {
    if (std::abs(std::arg(g.start - 1.0)) > 1e-6) continue;
    const auto c = tr.trace(g, 8.0);
    EXPECT_EQ(c.end, exwkb::terminus::mass_cap);
    const double x = c.samples.back().z.real();
    EXPECT_NEAR(x * std::sqrt(x * x - 1.0) - std::acosh(x), 8.0, 1e-7);
    for (std::size_t k = 1; k < c.samples.size(); ++k) {
      EXPECT_GT(std::abs(c.samples[k].z), std::abs(c.samples[k - 1].z));
      EXPECT_LT(std::abs(c.samples[k].z.imag()), 1e-9);
    }
    return;
  }
  FAIL() << "no germ along the positive real axis";
}

TEST(Trace, MassStrictlyIncreasing) {
  const auto s = bnr();
  stokes_tracer tr(s);
  for (const auto& c : exwkb::trace_initial_curves(tr, 3.0))
    for (std::size_t k = 1; k < c.samples.size(); ++k) EXPECT_GT(c.samples[k].mass, c.samples[k - 1].mass);
}

/// Re-integrates (zeta_i - zeta_j) dz along the polyline chords; analytic
/// continuation makes the chord and the curve integrals agree.
TEST(TraceProperty, ImaginaryPartAndMassByQuadrature) {
  for (const auto& s : {airy(), quadratic(cplx(0.8, 0.6)), bnr()}) {
    stokes_tracer tr(s);
    for (const auto& c : exwkb::trace_initial_curves(tr, 2.5)) {
      cplx acc{};
      double worst_im = 0.0;
      for (std::size_t k = 1; k < c.samples.size(); ++k) {
        const auto& a = c.samples[k - 1];
        const auto& b = c.samples[k];
        auto f = [&](double t) {
          const cplx z = a.z + t * (b.z - a.z);
          std::vector<cplx> sh = tr.match_sheets(z, t < 0.5 ? a.sheets : b.sheets);
          return (sh[static_cast<std::size_t>(c.i)] - sh[static_cast<std::size_t>(c.j)]) / s.hbar() * (b.z - a.z);
        };
        acc += boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, 0.0, 1.0, 0, 0.0);
        worst_im = std::max(worst_im, std::abs(acc.imag()));
        EXPECT_LT(std::abs(acc.real() - (b.mass - c.mass_begin())), 1e-7 * std::max(1.0, b.mass));
      }
      EXPECT_LT(worst_im, 1e-8);
    }
  }
}

TEST(Collisions, DisjointCurvesGiveNone) {
  const auto s = airy();
  stokes_tracer tr(s);
  EXPECT_TRUE(exwkb::detect_collisions(tr, exwkb::trace_initial_curves(tr, 5.0)).empty());
}

TEST(Collisions, BnrUpperCollision) {
  const auto s = bnr();
  stokes_tracer tr(s);
  const auto curves = exwkb::trace_initial_curves(tr, 3.5);
  const auto cols = exwkb::detect_collisions(tr, curves);
  ASSERT_EQ(cols.size(), 2u);
  const auto& up = cols[1].point.imag() > 0 ? cols[1] : cols[0];
  EXPECT_GT(up.point.imag(), 0.5);
  EXPECT_TRUE(up.ordered);
  EXPECT_FALSE(up.cyclic);
  ASSERT_EQ(up.walls.size(), 2u);
  const auto lab = exwkb::report_labeling(s);
  std::vector<std::vector<int>> types;
  for (const auto& w : up.walls) {
    const auto& c = curves[static_cast<std::size_t>(w.curve)];
    const cplx v = s.turning_points()[static_cast<std::size_t>(c.source.index)].z;
    const auto t = exwkb::global_type(s, lab, c);
    if (v.real() < 0) {
      EXPECT_EQ(t, (std::vector<int>{2, 1}));
    } else {
      EXPECT_EQ(t, (std::vector<int>{3, 2}));
    }
    types.push_back(t);
  }
  EXPECT_NE(types[0], types[1]);
  // Refined point lies on both trajectories.
  for (const auto& w : up.walls) {
    const auto p = tr.point_at(curves[static_cast<std::size_t>(w.curve)], w.mass);
    EXPECT_LT(std::abs(p.z - up.point), 1e-8);
  }
}

TEST(Collisions, NonChainingCrossingIsUnordered) {
  exwkb::collision c;
  c.walls.resize(2);
  c.walls[0].li = 0;
  c.walls[0].lj = 1;
  c.walls[1].li = 2;
  c.walls[1].lj = 3;
  exwkb::classify_collision(c);
  EXPECT_FALSE(c.ordered);
  c.walls[1].li = 1;
  c.walls[1].lj = 0;
  exwkb::classify_collision(c);
  EXPECT_TRUE(c.cyclic);
}

TEST(StokesSegments, QuadraticDependsOnPhase) {
  {
    const auto s = quadratic();
    stokes_tracer tr(s);
    EXPECT_TRUE(exwkb::detect_stokes_segments(tr, exwkb::trace_initial_curves(tr, 5.0)).empty());
  }
  {
    const auto s = quadratic(cplx(0.0, 1.0));
    stokes_tracer tr(s);
    const auto seg = exwkb::detect_stokes_segments(tr, exwkb::trace_initial_curves(tr, 5.0));
    ASSERT_FALSE(seg.empty());
    for (const auto& x : seg) EXPECT_NE(x.from_vertex, x.to_vertex);
  }
  for (double th : {0.0, 0.9, 2.0}) {
    const auto s = airy(std::polar(1.0, th));
    stokes_tracer tr(s);
    EXPECT_TRUE(exwkb::detect_stokes_segments(tr, exwkb::trace_initial_curves(tr, 5.0)).empty());
  }
}

TEST(Trace, AiryRaysToMassFiveQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = airy();
  stokes_tracer tr(s);
  const auto curves = exwkb::trace_initial_curves(tr, 5.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 1.0);
  const double expect[] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& p : curves[k].samples) EXPECT_LT(angle_gap(std::arg(p.z), expect[k]), 1e-6);
}

}  // namespace
