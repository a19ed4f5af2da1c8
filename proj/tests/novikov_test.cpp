#include <random>

#include <gtest/gtest.h>

#include "exwkb/novikov.hpp"

namespace {

using exwkb::cplx;
using exwkb::hbar_poly;
using exwkb::matrix;
using exwkb::series;

series random_series(std::mt19937_64& rng, double cutoff, int max_terms = 5) {
  std::uniform_int_distribution<int> count(0, max_terms);
  std::uniform_real_distribution<double> ex(0.0, cutoff * 0.9);
  std::normal_distribution<double> co(0.0, 1.0);
  std::vector<series::term> t;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) t.push_back({ex(rng), cplx(co(rng), co(rng))});
  return series(std::move(t), cutoff);
}

TEST(Novikov, MultiplyTruncates) {
  const series a({{0.0, 1.0}, {0.5, 2.0}}, 1.0);
  const series b = series::monomial(3.0, 0.2, 1.0);
  const series c = a * b;
  ASSERT_EQ(c.size(), 2u);
  EXPECT_DOUBLE_EQ(c.terms()[0].exp, 0.2);
  EXPECT_EQ(c.terms()[0].coeff, cplx(3.0));
  EXPECT_DOUBLE_EQ(c.terms()[1].exp, 0.7);
  EXPECT_EQ(c.terms()[1].coeff, cplx(6.0));

  const series t6 = series::monomial(1.0, 0.6, 1.0);
  EXPECT_TRUE((t6 * t6).is_zero());
}

TEST(Novikov, MultiplyByOneIsIdentity) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_series(rng, 2.0);
    EXPECT_TRUE((a * series::one(2.0)).approx_equal(a, 0.0));
  }
}

TEST(Novikov, MismatchedCutoffsRejected) {
  EXPECT_THROW(series::one(1.0) * series::one(2.0), exwkb::config_error);
}

TEST(Novikov, Valuation) {
  EXPECT_DOUBLE_EQ(series({{0.2, 3.0}, {0.7, 6.0}}, 1.0).valuation(), 0.2);
  EXPECT_EQ(series(1.0).valuation(), exwkb::unbounded);
  EXPECT_DOUBLE_EQ(series({{0.0, 1.0}, {0.5, 1.0}}, 1.0).valuation(), 0.0);
}

TEST(Novikov, EvaluateAt) {
  EXPECT_NEAR(std::abs(series({{0.0, 1.0}, {0.5, 1.0}}).evaluate_at() - (1.0 + std::exp(-0.5))), 0.0, 1e-15);
  EXPECT_EQ(series().evaluate_at(), cplx{});
  const auto phase = series::monomial(std::polar(1.0, M_PI), 1.0);
  EXPECT_NEAR(std::abs(phase.evaluate_at() + std::exp(-1.0)), 0.0, 1e-15);
}

TEST(Novikov, ExponentMerging) {
  const series a({{0.3, 1.0}, {0.3 + 1e-12, 2.0}, {0.3 + 1e-6, 4.0}}, 1.0);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a.terms()[0].coeff, cplx(3.0));
}

TEST(Novikov, HbarPolyTruncation) {
  const hbar_poly p({1.0, 2.0, 3.0}, 1);
  EXPECT_EQ(p.terms().size(), 2u);
  const hbar_poly q({1.0, 1.0}, 1);
  const auto r = p * q;
  ASSERT_EQ(r.terms().size(), 2u);
  EXPECT_EQ(r.coeff(1), cplx(3.0));
  EXPECT_TRUE(hbar_poly({0.0, 0.0}, 3).is_zero());
  EXPECT_NEAR(std::abs(r.evaluate(0.5) - cplx(2.5)), 0.0, 1e-15);
}

TEST(Novikov, MatrixDeviation) {
  const double w = 5.0;
  EXPECT_TRUE(exwkb::matrix_deviation(matrix::identity(3, w)).empty());

  const auto m = matrix::elementary(3, 2, 0, series::monomial(1.0, 0.7, w));
  const auto d = exwkb::matrix_deviation(m);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].row, 2u);
  EXPECT_EQ(d[0].col, 0u);
  EXPECT_DOUBLE_EQ(d[0].value.valuation(), 0.7);

  // (I - T^0.3 E32)(I - T^0.4 E21): entries (3,2), (2,1), (3,1).
  const auto p = matrix::elementary(3, 2, 1, series::monomial(-1.0, 0.3, w)) *
                 matrix::elementary(3, 1, 0, series::monomial(-1.0, 0.4, w));
  const auto dp = exwkb::matrix_deviation(p);
  ASSERT_EQ(dp.size(), 3u);
  EXPECT_EQ(dp[0].row, 1u);
  EXPECT_EQ(dp[0].col, 0u);
  EXPECT_DOUBLE_EQ(dp[0].value.valuation(), 0.4);
  EXPECT_EQ(dp[1].row, 2u);
  EXPECT_EQ(dp[1].col, 0u);
  EXPECT_NEAR(dp[1].value.valuation(), 0.7, 1e-15);
  EXPECT_EQ(dp[1].value.terms()[0].coeff, cplx(1.0));
  EXPECT_EQ(dp[2].row, 2u);
  EXPECT_EQ(dp[2].col, 1u);
  EXPECT_DOUBLE_EQ(dp[2].value.valuation(), 0.3);
}

TEST(NovikovProperty, RingLaws) {
  std::mt19937_64 rng(42);
  const double w = 3.0;
  for (int it = 0; it < 500; ++it) {
    const auto a = random_series(rng, w);
    const auto b = random_series(rng, w);
    const auto c = random_series(rng, w);
    EXPECT_TRUE(((a * b) * c).approx_equal(a * (b * c), 1e-12));
    EXPECT_TRUE((a * b).approx_equal(b * a, 1e-12));
    EXPECT_GE((a * b).valuation() + 1e-12, a.valuation() + b.valuation());
    if (!a.is_zero() && !b.is_zero() && a.valuation() + b.valuation() < w * 0.99) {
      EXPECT_NEAR((a * b).valuation(), a.valuation() + b.valuation(), 1e-9);
    }
  }
}

TEST(NovikovProperty, EvaluationIsHomomorphismBelowCutoff) {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 500; ++it) {
    auto a = random_series(rng, 1.0);
    auto b = random_series(rng, 1.0);
    a = a.with_cutoff(exwkb::unbounded);
    b = b.with_cutoff(exwkb::unbounded);
    const cplx lhs = (a * b).evaluate_at();
    const cplx rhs = a.evaluate_at() * b.evaluate_at();
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(NovikovProperty, TruncationCommutesWithMultiply) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 300; ++it) {
    const auto a = random_series(rng, 4.0);
    const auto b = random_series(rng, 4.0);
    const auto lhs = (a * b).truncated(1.5);
    const auto rhs = a.truncated(1.5) * b.truncated(1.5);
    EXPECT_TRUE(lhs.approx_equal(rhs, 1e-12));
  }
}

TEST(Novikov, JsonShape) {
  const series a({{0.25, cplx(1.0, -2.0)}}, 1.0);
  const auto j = exwkb::to_json_value(a);
  EXPECT_EQ(j.dump(), R"([{"coeff":[1.0,-2.0],"exp":0.25}])");
  const auto back = exwkb::series_from_json<cplx>(j, 1.0);
  EXPECT_TRUE(back.approx_equal(a, 0.0));

  const exwkb::hbar_series h = exwkb::hbar_series::monomial(hbar_poly({1.0, 0.5}, 2), 0.5);
  EXPECT_EQ(exwkb::to_json_value(h).dump(), R"([{"coeff":[[1.0,0.0],[0.5,0.0]],"exp":0.5}])");
}

}  // namespace
