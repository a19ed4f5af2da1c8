#include <random>

#include <gtest/gtest.h>

#include "exwkb/spectral.hpp"

namespace {

using exwkb::cplx;
using exwkb::gauss_rational;
using exwkb::polynomial;
using exwkb::rational_function;
using exwkb::spectral_data;

rational_function poly(std::vector<long> c) {
  std::vector<gauss_rational> g;
  for (long v : c) g.emplace_back(v);
  return rational_function(polynomial(std::move(g)));
}

rational_function ratio(std::vector<long> n, std::vector<long> d) {
  return poly(std::move(n)) / poly(std::move(d));
}

spectral_data bnr() {
  // xi^3 + 3 xi + 2 i z
  std::vector<std::vector<rational_function>> b(3);
  b[0] = {rational_function{}};
  b[1] = {poly({3})};
  b[2] = {rational_function(polynomial({0, gauss_rational(0, 2)}))};
  return spectral_data::from_charpoly(3, b);
}

std::vector<cplx> circle(cplx c, double r, int n = 64, double start = 0.0) {
  std::vector<cplx> p;
  for (int k = 0; k <= n; ++k) p.push_back(c + std::polar(r, start + 2.0 * M_PI * k / n));
  return p;
}

TEST(RationalFunction, Derivative) {
  const auto z = rational_function::z();
  EXPECT_EQ((z * z).derivative(), poly({0, 2}));
  EXPECT_EQ((rational_function(1) / z).derivative(), ratio({-1}, {0, 0, 1}));
  EXPECT_EQ(poly({-1, 0, 1}).derivative(), poly({0, 2}));
}

TEST(RationalFunction, ReducedForm) {
  const auto f = ratio({-1, 0, 1}, {2, 2});  // (z^2-1)/(2z+2) = (z-1)/2
  EXPECT_EQ(f.den().degree(), 0);
  EXPECT_EQ(f, rational_function(polynomial({gauss_rational(mpq_class(-1, 2)), gauss_rational(mpq_class(1, 2))})));
}

TEST(RationalFunction, ProductRuleExactOnRandomInputs) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> d(-9, 9);
  auto rnd_poly = [&](int deg) {
    std::vector<gauss_rational> c;
    for (int k = 0; k <= deg; ++k) c.emplace_back(mpq_class(d(rng), 1 + std::abs(d(rng))), mpq_class(d(rng)));
    return polynomial(std::move(c));
  };
  for (int it = 0; it < 40; ++it) {
    polynomial den = rnd_poly(2);
    if (den.is_zero()) den = polynomial::constant(1);
    polynomial den2 = rnd_poly(1);
    if (den2.is_zero()) den2 = polynomial::constant(1);
    const rational_function f(rnd_poly(3), den);
    const rational_function g(rnd_poly(2), den2);
    EXPECT_EQ((f * g).derivative(), f.derivative() * g + f * g.derivative());
    EXPECT_EQ((f + g) - g, f);
  }
}

TEST(Polynomial, SquareFreeFactors) {
  // (z-1)^2 (z+2)
  const auto p = polynomial::linear(1) * polynomial::linear(1) * polynomial::linear(-2);
  const auto f = p.square_free_factors();
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0], polynomial::linear(-2));
  EXPECT_EQ(f[1], polynomial::linear(1));
}

TEST(Spectral, TurningPointsAiry) {
  const auto s = spectral_data::schrodinger({rational_function::z()});
  ASSERT_EQ(s.turning_points().size(), 1u);
  EXPECT_LT(std::abs(s.turning_points()[0].z), 1e-14);
  EXPECT_TRUE(s.turning_points()[0].simple());
}

TEST(Spectral, TurningPointsQuadratic) {
  const auto s = spectral_data::schrodinger({poly({-1, 0, 1})});
  ASSERT_EQ(s.turning_points().size(), 2u);
  EXPECT_LT(std::abs(s.turning_points()[0].z + 1.0), 1e-14);
  EXPECT_LT(std::abs(s.turning_points()[1].z - 1.0), 1e-14);
  ASSERT_EQ(s.poles().size(), 1u);
  EXPECT_TRUE(s.poles()[0].at_infinity);
  EXPECT_EQ(s.poles()[0].order, 6);
}

TEST(Spectral, TurningPointsBnr) {
  const auto s = bnr();
  EXPECT_EQ(s.discriminant(), poly({-108, 0, 108}));
  ASSERT_EQ(s.turning_points().size(), 2u);
  EXPECT_LT(std::abs(s.turning_points()[0].z + 1.0), 1e-9);
  EXPECT_LT(std::abs(s.turning_points()[1].z - 1.0), 1e-9);
  for (const auto& t : s.turning_points()) EXPECT_TRUE(t.simple());
}

TEST(Spectral, DegenerateDiscriminant) {
  EXPECT_THROW(spectral_data::schrodinger({rational_function{}}), exwkb::degenerate_error);
}

TEST(Spectral, WeaklyGmn) {
  EXPECT_TRUE(check_weakly_gmn(spectral_data::schrodinger({poly({-1, 0, 1})})).ok);
  const auto flat = check_weakly_gmn(spectral_data::from_charpoly(2, {{rational_function{}}, {poly({-1})}}));
  EXPECT_FALSE(flat.ok);
  ASSERT_FALSE(flat.diagnostics.empty());
  const auto simple = check_weakly_gmn(spectral_data::schrodinger({ratio({1}, {0, 1})}));
  EXPECT_FALSE(simple.ok);
  EXPECT_NE(simple.diagnostics.front().find("order >= 2"), std::string::npos);
}

TEST(Spectral, WkbRegular) {
  EXPECT_TRUE(check_wkb_regular(spectral_data::schrodinger({poly({-1, 0, 1})})).ok);
  const auto bad = check_wkb_regular(spectral_data::schrodinger({ratio({1}, {0, 0, 0, 0, 1}), ratio({1}, {0, 0, 0, 1})}));
  EXPECT_FALSE(bad.ok);
  const rational_function q2 = rational_function(gauss_rational(mpq_class(-1, 4))) / poly({0, 0, 1});
  EXPECT_TRUE(check_wkb_regular(spectral_data::schrodinger({ratio({1}, {0, 0, 1}), rational_function{}, q2})).ok);
  EXPECT_FALSE(check_wkb_regular(spectral_data::schrodinger({ratio({1}, {0, 0, 1}), rational_function{}, ratio({1}, {0, 0, 1})})).ok);
}

TEST(Spectral, SheetsAt) {
  const auto airy = spectral_data::schrodinger({rational_function::z()});
  const auto lab = airy.labeling_at(1.0);
  EXPECT_LT(std::abs(lab.values[0] + 1.0), 1e-14);
  EXPECT_LT(std::abs(lab.values[1] - 1.0), 1e-14);

  const auto b = bnr();
  auto v = b.sheet_values(0.0);
  std::sort(v.begin(), v.end(), [](cplx x, cplx y) { return x.imag() < y.imag(); });
  EXPECT_LT(std::abs(v[0] - cplx(0, -std::sqrt(3.0))), 1e-12);
  EXPECT_LT(std::abs(v[1]), 1e-12);
  EXPECT_LT(std::abs(v[2] - cplx(0, std::sqrt(3.0))), 1e-12);

  const auto blab = b.labeling_at(cplx(0.2, 0.3));
  for (cplx z : {cplx(2.0, 1.0), cplx(-0.5, -2.0), cplx(0.0, 4.0)}) {
    const auto vals = b.sheets_at(blab, z);
    for (cplx x : vals) {
      const auto c = b.charpoly_at(z);
      const cplx res = ((x + c[2]) * x + c[1]) * x + c[0];
      EXPECT_LT(std::abs(res), 1e-10 * std::max(1.0, std::pow(std::abs(x), 3)));
    }
  }
}

TEST(Spectral, ContinuationPermutations) {
  const auto airy = spectral_data::schrodinger({rational_function::z()});
  const auto lab = airy.labeling_at(1.0);
  EXPECT_EQ(airy.continue_sheets(lab, {1.0, 1.0}), (std::vector<int>{0, 1}));
  EXPECT_EQ(airy.continue_sheets(lab, circle(0.0, 1.0)), (std::vector<int>{1, 0}));

  const auto b = bnr();
  const auto blab = b.labeling_at(cplx(1.5, 0.1));
  const auto perm = b.continue_sheets(blab, circle(1.0, 0.5, 64, std::arg(cplx(0.5, 0.1))));
  int fixed = 0;
  for (int k = 0; k < 3; ++k) fixed += perm[static_cast<std::size_t>(k)] == k;
  EXPECT_EQ(fixed, 1);
  // Two sheets swap: one fixed point and a transposition.
  for (int k = 0; k < 3; ++k) EXPECT_EQ(perm[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])], k);
}

TEST(Spectral, ContinuationHomotopyInvariant) {
  const auto b = bnr();
  const cplx base(0.3, 1.7);
  const auto lab = b.labeling_at(base);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.05);
  const std::vector<cplx> path{base, cplx(2.0, 1.0), cplx(2.0, -1.0), cplx(0.3, -1.0), base};
  const auto ref = b.continue_sheets(lab, path);
  for (int it = 0; it < 10; ++it) {
    std::vector<cplx> p = path;
    for (std::size_t k = 1; k + 1 < p.size(); ++k) p[k] += cplx(n(rng), n(rng));
    EXPECT_EQ(b.continue_sheets(lab, p), ref);
  }
}

TEST(Spectral, ContinuationComposes) {
  const auto b = bnr();
  const cplx base(0.0, 2.0);
  const auto lab = b.labeling_at(base);
  const std::vector<cplx> p1{base, cplx(2.0, 0.5), cplx(2.0, -0.5)};
  const std::vector<cplx> p2{cplx(2.0, -0.5), cplx(0.0, -0.5), cplx(-2.0, -0.5), base};
  std::vector<cplx> whole = p1;
  whole.insert(whole.end(), p2.begin() + 1, p2.end());
  const auto a = b.continue_sheets(lab, p1);
  const auto c = b.continue_sheets(lab, p2);
  const auto w = b.continue_sheets(lab, whole);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(w[static_cast<std::size_t>(k)], c[static_cast<std::size_t>(a[static_cast<std::size_t>(k)])]);
}

TEST(Spectral, ContinuationNearTurningPointRejected) {
  const auto airy = spectral_data::schrodinger({rational_function::z()});
  const auto lab = airy.labeling_at(1.0);
  EXPECT_THROW(airy.sheets_at(lab, -1.0), exwkb::continuation_error);
}

TEST(Spectral, JsonInput) {
  const auto j = nlohmann::json::parse(R"({"rank": 2, "coeffs": [{"hbar_order": 0, "num": [-1, 0, 1]}], "hbar": [1, 0]})");
  const auto s = spectral_data::from_json(j);
  EXPECT_TRUE(s.is_schrodinger());
  EXPECT_EQ(s.turning_points().size(), 2u);
  const auto k = nlohmann::json::parse(
      R"({"rank": 3, "coeffs": [{"index": 2, "num": [3]}, {"index": 3, "num": [0, [0, 2]]}]})");
  EXPECT_EQ(spectral_data::from_json(k).discriminant(), poly({-108, 0, 108}));
  EXPECT_THROW(spectral_data::from_json(nlohmann::json::parse(R"({"rank": 2})")), exwkb::input_error);
  EXPECT_THROW(spectral_data::from_json(nlohmann::json::parse(R"({"rank": 2, "coeffs": [{"num": ["x/y"]}]})")),
               exwkb::input_error);
}

}  // namespace
