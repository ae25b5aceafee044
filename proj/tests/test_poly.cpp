#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "wkb/complex_poly.hpp"
#include "wkb/rational.hpp"

using wkb::ComplexPolynomial;
using wkb::RationalFunction;
using wkb::cplx;

namespace {

ComplexPolynomial poly(std::initializer_list<cplx> ascending) {
  return ComplexPolynomial(std::vector<cplx>(ascending));
}

const cplx I(0.0, 1.0);

}  // namespace

TEST(Poly, EvaluateKnownValues) {
  ComplexPolynomial p = poly({1.0, 0.0, -1.0});  // 1 - x^2
  EXPECT_NEAR(std::abs(p(cplx(1.0))), 0.0, 1e-15);

  ComplexPolynomial id = poly({0.0, 1.0});
  EXPECT_NEAR(std::abs(id(cplx(2.0, 1.0)) - cplx(2.0, 1.0)), 0.0, 1e-15);

  // x(x+1)(x+i) = x^3 + (1+i)x^2 + ix has a root at -i
  ComplexPolynomial cubic = poly({0.0, I, cplx(1.0, 1.0), 1.0});
  EXPECT_NEAR(std::abs(cubic(-I)), 0.0, 1e-15);
}

TEST(Poly, Derivative) {
  EXPECT_TRUE(poly({1.0, 0.0, -1.0}).derivative().approx_equal(
      poly({0.0, -2.0}), 0.0));
  EXPECT_TRUE(poly({0.0, 1.0}).derivative().approx_equal(poly({1.0}), 0.0));
  EXPECT_TRUE(poly({0.0, I, 0.0, 1.0}).derivative().approx_equal(
      poly({I, 0.0, 3.0}), 0.0));
}

TEST(Poly, DerivativeIsLinearExactly) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<cplx> pc(5), qc(5);
    for (auto& c : pc) c = cplx(u(rng), u(rng));
    for (auto& c : qc) c = cplx(u(rng), u(rng));
    cplx alpha(u(rng), u(rng)), beta(u(rng), u(rng));
    ComplexPolynomial p{pc}, q{qc};
    ComplexPolynomial lhs = (p * alpha + q * beta).derivative();
    ComplexPolynomial rhs = p.derivative() * alpha + q.derivative() * beta;
    ASSERT_TRUE(lhs.approx_equal(rhs, 1e-15));
  }
}

TEST(Poly, TurningPointsSimpleCases) {
  auto t1 = wkb::find_turning_points(poly({0.0, 1.0}));  // Q = x
  ASSERT_EQ(t1.size(), 1u);
  EXPECT_NEAR(std::abs(t1[0].location), 0.0, 1e-12);
  EXPECT_EQ(t1[0].multiplicity, 1);

  auto t2 = wkb::find_turning_points(poly({1.0, 0.0, -1.0}));  // 1 - x^2
  ASSERT_EQ(t2.size(), 2u);
  EXPECT_NEAR(std::abs(t2[0].location - cplx(-1.0)), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(t2[1].location - cplx(1.0)), 0.0, 1e-10);

  auto t3 = wkb::find_turning_points(poly({0.0, 0.0, 1.0}));  // x^2
  ASSERT_EQ(t3.size(), 1u);
  EXPECT_EQ(t3[0].multiplicity, 2);
  EXPECT_NEAR(std::abs(t3[0].location), 0.0, 1e-6);
}

TEST(Poly, ConstantQRejected) {
  EXPECT_THROW(wkb::find_turning_points(poly({2.0})), wkb::config_error);
}

TEST(Poly, RootProductReconstruction) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> deg(1, 6);
  for (int rep = 0; rep < 40; ++rep) {
    int m = deg(rng);
    std::vector<cplx> c(m + 1);
    for (auto& v : c) v = cplx(u(rng), u(rng));
    if (std::abs(c.back()) < 0.5) c.back() += cplx(1.0);
    ComplexPolynomial Q{c};
    auto tps = wkb::find_turning_points(Q);
    ComplexPolynomial prod = ComplexPolynomial::constant(Q.leading());
    for (const auto& tp : tps)
      for (int k = 0; k < tp.multiplicity; ++k)
        prod = prod * ComplexPolynomial({-tp.location, cplx(1.0)});
    ASSERT_TRUE(prod.approx_equal(Q, 1e-8));
  }
}

TEST(Rational, BasicArithmetic) {
  RationalFunction inv_x(ComplexPolynomial::constant(1.0),
                         ComplexPolynomial::monomial(1));
  RationalFunction sq = inv_x * inv_x;  // 1/x^2
  EXPECT_TRUE(sq.numerator().approx_equal(ComplexPolynomial::constant(1.0),
                                          1e-14));
  EXPECT_TRUE(sq.denominator().approx_equal(ComplexPolynomial::monomial(2),
                                            1e-14));

  // d/dx (-1/(4x)) = 1/(4x^2)
  RationalFunction s1(ComplexPolynomial::constant(-0.25),
                      ComplexPolynomial::monomial(1));
  RationalFunction ds1 = s1.derivative();
  RationalFunction expected(ComplexPolynomial::constant(0.25),
                            ComplexPolynomial::monomial(2));
  EXPECT_TRUE(ds1.approx_equal(expected, 1e-14));
}

// s1^2 + s1' for Q = x against the closed form (5Q'^2 - 4Q''Q)/(16Q^2).
TEST(Rational, RiccatiForcingPiecesForLinearQ) {
  ComplexPolynomial Q = ComplexPolynomial::monomial(1);
  ComplexPolynomial dQ = Q.derivative();
  ComplexPolynomial ddQ = dQ.derivative();

  RationalFunction s1(-dQ * 0.25, Q);
  RationalFunction lhs = s1 * s1 + s1.derivative();

  RationalFunction rhs(dQ * dQ * 5.0 - ddQ * Q * 4.0, Q * Q * 16.0);
  EXPECT_TRUE(lhs.approx_equal(rhs, 1e-13));

  // and the frozen value 5/(16 x^2)
  RationalFunction frozen(ComplexPolynomial::constant(5.0 / 16.0),
                          ComplexPolynomial::monomial(2));
  EXPECT_TRUE(lhs.approx_equal(frozen, 1e-13));
}

TEST(Rational, ReduceCancelsCommonRootsAndIsIdempotent) {
  // (x^2 - 1)/(x - 1) reduces to x + 1
  ComplexPolynomial num({-1.0, 0.0, 1.0});
  ComplexPolynomial den({-1.0, 1.0});
  RationalFunction r(num, den);
  EXPECT_EQ(r.denominator().degree(), 0u);
  EXPECT_TRUE(r.numerator().approx_equal(ComplexPolynomial({1.0, 1.0}),
                                         1e-12));

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<cplx> nc(4), dc(3);
    for (auto& v : nc) v = cplx(u(rng), u(rng));
    for (auto& v : dc) v = cplx(u(rng), u(rng));
    if (std::abs(dc.back()) < 0.3) dc.back() += cplx(1.0);
    RationalFunction a(ComplexPolynomial{nc}, ComplexPolynomial{dc});
    RationalFunction b(a.numerator(), a.denominator());  // reduce again
    ASSERT_TRUE(a.numerator().approx_equal(b.numerator(), 0.0));
    ASSERT_TRUE(a.denominator().approx_equal(b.denominator(), 0.0));
  }
}

TEST(Rational, DivisionByZeroFunctionThrows) {
  RationalFunction one = RationalFunction::constant(1.0);
  RationalFunction zero = RationalFunction::constant(0.0);
  EXPECT_THROW(one / zero, wkb::numerical_error);
}
