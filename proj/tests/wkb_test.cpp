#include <gtest/gtest.h>

#include "exwkb/wkb.hpp"

namespace {

using exwkb::cplx;
using exwkb::gauss_rational;
using exwkb::polynomial;
using exwkb::rational_function;
using exwkb::spectral_data;
using exwkb::sqrtq;
using exwkb::wkb_series;

rational_function poly(std::vector<long> c) {
  std::vector<gauss_rational> g;
  for (long v : c) g.emplace_back(v);
  return rational_function(polynomial(std::move(g)));
}

rational_function frac(long n, long d) { return rational_function(gauss_rational(mpq_class(n, d))); }

const rational_function z = rational_function::z();

TEST(WkbRecursion, AiryTerms) {
  const auto w = wkb_series::compute(spectral_data::schrodinger({z}), 2);
  EXPECT_EQ(w.term(-1), (sqrtq{rational_function{}, rational_function(1)}));
  EXPECT_EQ(w.term(0), (sqrtq{frac(-1, 4) / z, rational_function{}}));
  EXPECT_EQ(w.term(1), (sqrtq{rational_function{}, frac(-5, 32) / (z * z * z)}));
  EXPECT_TRUE(w.term(2).b.is_zero());
}

TEST(WkbRecursion, QuadraticFirstOddTerm) {
  const auto q0 = poly({-1, 0, 1});
  const auto w = wkb_series::compute(spectral_data::schrodinger({q0}), 1);
  EXPECT_EQ(w.term(1).b, -(poly({2, 0, 3})) / (rational_function(8) * q0 * q0 * q0));
  EXPECT_TRUE(w.term(1).a.is_zero());
}

TEST(WkbRecursion, ExactResidualVanishes) {
  const std::vector<std::vector<rational_function>> qs{
      {z}, {poly({-1, 0, 1})}, {poly({-1, 0, 1}) / poly({0, 0, 0, 0, 1})}, {poly({-1, 0, 1}), poly({0, 1}), frac(1, 3)}};
  for (const auto& q : qs) {
    const auto w = wkb_series::compute(spectral_data::schrodinger(q), 6);
    for (const auto& r : w.residual()) EXPECT_TRUE(r.is_zero());
  }
}

TEST(WkbRecursion, ZeroPotentialIsDegenerate) {
  EXPECT_THROW(wkb_series::compute(spectral_data::schrodinger({rational_function{}}), 2), exwkb::degenerate_error);
}

TEST(WkbRecursion, Parity) {
  for (const auto& q0 : {z, poly({-1, 0, 1}), poly({-1, 0, 1}) / poly({0, 0, 0, 0, 1})}) {
    const auto w = wkb_series::compute(spectral_data::schrodinger({q0}), 6);
    for (int m = -1; m <= 6; ++m) {
      if ((m + 2) % 2 == 1) {
        EXPECT_TRUE(w.term(m).a.is_zero()) << m;
      } else {
        EXPECT_TRUE(w.term(m).b.is_zero()) << m;
      }
    }
    EXPECT_TRUE(w.p_even().front().is_zero());
  }
}

TEST(WkbRecursion, EvenPartIsLogDerivativeOfOdd) {
  const std::vector<std::vector<rational_function>> qs{
      {z}, {poly({-1, 0, 1})}, {poly({-1, 0, 1}), poly({0, 1}), frac(1, 3)}};
  for (const auto& q : qs) {
    const auto w = wkb_series::compute(spectral_data::schrodinger(q), 5);
    const auto e = w.log_derivative_of_odd();
    const auto ev = w.p_even();
    ASSERT_EQ(e.size() + 1, ev.size());
    for (std::size_t k = 0; k < e.size(); ++k) EXPECT_EQ(e[k], ev[k + 1]) << k;
  }
}

TEST(Voros, QuadraticLeadingTerm) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})});
  const auto w = wkb_series::compute(s, 3);
  const auto g = exwkb::edge_cycle(s, -1.0, 1.0);
  const auto v = exwkb::voros_symbol(w, g, 3);
  ASSERT_EQ(v.front().order, -1);
  EXPECT_LT(std::abs(std::abs(v.front().value) - M_PI), 1e-10);
  EXPECT_LT(std::abs(v.front().value.real()), 1e-10);
  const auto r = exwkb::voros_symbol(w, g.reversed(), 3);
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_LT(std::abs(v[k].value + r[k].value), 1e-10);
}

TEST(Voros, ContractibleCycleVanishes) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})});
  const auto w = wkb_series::compute(s, 3);
  const exwkb::cycle c{"c", exwkb::circle_path(cplx(0.0, 2.0), 0.5), std::sqrt(cplx(-1.0 + std::pow(cplx(0.5, 2.0), 2))), {}};
  for (const auto& t : exwkb::voros_symbol(w, c, 3)) EXPECT_LT(std::abs(t.value), 1e-10);
}

TEST(Voros, AdditiveOverCycles) {
  const auto q0 = poly({-1, 0, 1}) * poly({-4, 0, 1});
  const auto s = spectral_data::schrodinger({q0});
  const auto w = wkb_series::compute(s, 3);
  const auto g1 = exwkb::edge_cycle(s, 1.0, 2.0);
  const cplx b1 = g1.path.front();
  const auto g2shape = exwkb::edge_cycle(s, -2.0, -1.0);
  const cplx b2 = g2shape.path.front();
  const auto integ = exwkb::make_integrator(w);
  const cplx root_b2 = integ.integrate(w.term(-1), {b1, cplx(0.0, 1.0), b2}, g1.sqrt_start).second;
  auto g2 = g2shape;
  g2.sqrt_start = root_b2;
  std::vector<cplx> joined = g1.path;
  joined.push_back(cplx(0.0, 1.0));
  joined.insert(joined.end(), g2.path.begin(), g2.path.end());
  joined.push_back(cplx(0.0, 1.0));
  joined.push_back(b1);
  const auto v1 = exwkb::voros_symbol(w, g1, 3);
  const auto v2 = exwkb::voros_symbol(w, g2, 3);
  const auto v12 = exwkb::voros_symbol(w, {"sum", joined, g1.sqrt_start, {}}, 3);
  ASSERT_EQ(v12.size(), v1.size());
  for (std::size_t k = 0; k < v12.size(); ++k) {
    const cplx sum = v1[k].value + v2[k].value;
    EXPECT_LT(std::abs(v12[k].value - sum), 1e-8 * std::max(1.0, std::abs(sum)));
  }
}

TEST(Voros, HomogeneityOfLeadingTerm) {
  const auto s1 = spectral_data::schrodinger({poly({-1, 0, 1})});
  const auto s4 = spectral_data::schrodinger({poly({-4, 0, 4})});
  const auto g = exwkb::edge_cycle(s1, -1.0, 1.0);
  auto g4 = g;
  g4.sqrt_start = 2.0 * g.sqrt_start;
  const auto v1 = exwkb::voros_symbol(wkb_series::compute(s1, 1), g, 1);
  const auto v4 = exwkb::voros_symbol(wkb_series::compute(s4, 1), g4, 1);
  EXPECT_LT(std::abs(v4.front().value - 2.0 * v1.front().value), 1e-10);
}

TEST(TurningPointNormalization, AiryHalfLoop) {
  const auto s = spectral_data::schrodinger({z});
  const auto w = wkb_series::compute(s, 1);
  for (double x : {0.5, 1.0, 2.0}) {
    const auto v = exwkb::turning_point_normalization(w, s, 0.0, x, std::sqrt(x), 1);
    EXPECT_LT(std::abs(v.front().value - 2.0 / 3.0 * std::pow(x, 1.5)), 1e-10);
    const auto flip = exwkb::turning_point_normalization(w, s, 0.0, x, -std::sqrt(x), 1);
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_LT(std::abs(v[k].value + flip[k].value), 1e-10);
  }
}

TEST(TurningPointNormalization, LoopRadiusIndependent) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})});
  const auto w = wkb_series::compute(s, 3);
  const cplx zp(1.2, 0.3);
  const cplx root = std::sqrt(zp * zp - 1.0);
  const auto a = exwkb::turning_point_normalization(w, s, 1.0, zp, root, 3);
  const auto loop = exwkb::turning_point_loop(s, 1.0, zp);
  // Same quantity along a circle of a different radius joined to zp.
  std::vector<cplx> path{zp};
  for (auto p : exwkb::circle_path(1.0, 0.6, 128, std::arg(zp - 1.0))) path.push_back(p);
  path.push_back(zp);
  const auto integ = exwkb::make_integrator(w);
  for (const auto& t : a) {
    const cplx other = -0.5 * integ.integrate(w.term(t.order).odd(), path, root).first;
    EXPECT_LT(std::abs(other - t.value), 1e-9 * std::max(1.0, std::abs(t.value)));
  }
  EXPECT_GT(loop.size(), 10u);
}

TEST(Voros, JsonShape) {
  const std::vector<exwkb::order_value> v{{-1, cplx(0.0, 3.5)}};
  EXPECT_EQ(exwkb::to_json_value("edge", v).dump(), R"({"cycle":"edge","orders":[[-1,0.0,3.5]]})");
}

}  // namespace
