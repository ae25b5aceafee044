#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "wkb/branch.hpp"

using wkb::ActionValue;
using wkb::BranchedPath;
using wkb::ComplexPolynomial;
using wkb::Problem;
using wkb::cplx;

namespace {

Problem linear_q() { return Problem::make(ComplexPolynomial::monomial(1)); }
Problem circle_q() {
  return Problem::make(ComplexPolynomial({1.0, 0.0, -1.0}));  // 1 - x^2
}

std::vector<cplx> unit_circle(int n, int turns = 1) {
  std::vector<cplx> p;
  for (int k = 0; k <= n * turns; ++k) {
    double th = 2.0 * M_PI * double(k) / double(n);
    p.push_back(std::polar(1.0, th));
  }
  return p;
}

void expect_certificate(const BranchedPath& bp) {
  for (std::size_t i = 1; i < bp.sqrt_values.size(); ++i) {
    cplx a = bp.sqrt_values[i - 1], b = bp.sqrt_values[i];
    if (a == cplx(0.0) || b == cplx(0.0)) continue;
    ASSERT_GT(std::real(b * std::conj(a)), 0.0)
        << "branch continuity certificate violated at waypoint " << i;
  }
}

}  // namespace

TEST(BranchSqrt, PrincipalOnPositiveReals) {
  Problem prob = linear_q();
  BranchedPath bp = wkb::continue_sqrt(prob, {cplx(1.0), cplx(4.0)}, +1);
  EXPECT_NEAR(std::abs(bp.sqrt_values.front() - cplx(1.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(bp.sqrt_values.back() - cplx(2.0)), 0.0, 1e-14);
  for (cplx v : bp.sqrt_values) {
    EXPECT_GT(v.real(), 0.0);
    EXPECT_NEAR(v.imag(), 0.0, 1e-14);
  }
  expect_certificate(bp);
}

// Analytic continuation of x^{1/2} once around the origin flips the sign;
// twice around restores it.
TEST(BranchSqrt, MonodromyAroundTurningPoint) {
  Problem prob = linear_q();
  BranchedPath once = wkb::continue_sqrt(prob, unit_circle(24, 1), +1);
  EXPECT_NEAR(std::abs(once.sqrt_values.back() - cplx(-1.0)), 0.0, 1e-10);

  BranchedPath twice = wkb::continue_sqrt(prob, unit_circle(24, 2), +1);
  EXPECT_NEAR(std::abs(twice.sqrt_values.back() - cplx(1.0)), 0.0, 1e-10);
  expect_certificate(once);
  expect_certificate(twice);
}

TEST(BranchSqrt, BaseSignFlipNegatesEverything) {
  Problem prob = circle_q();
  std::vector<cplx> path{cplx(0.0), cplx(0.3, 0.4), cplx(0.1, 0.9)};
  BranchedPath plus = wkb::continue_sqrt(prob, path, +1);
  BranchedPath minus = wkb::continue_sqrt(prob, path, -1);
  ASSERT_EQ(plus.sqrt_values.size(), minus.sqrt_values.size());
  for (std::size_t i = 0; i < plus.sqrt_values.size(); ++i)
    EXPECT_EQ(plus.sqrt_values[i], -minus.sqrt_values[i]);
}

TEST(BranchSqrt, SquareMatchesQEverywhere) {
  Problem prob = circle_q();
  BranchedPath bp = wkb::continue_sqrt(
      prob, {cplx(0.0, 0.5), cplx(2.0, 1.0), cplx(3.0, -1.0)}, +1);
  for (std::size_t i = 0; i < bp.waypoints.size(); ++i) {
    cplx q = prob.Q(bp.waypoints[i]);
    EXPECT_NEAR(std::abs(bp.sqrt_values[i] * bp.sqrt_values[i] - q), 0.0,
                1e-10 * std::max(1.0, std::abs(q)));
  }
}

TEST(BranchSqrt, ClearanceViolationThrows) {
  Problem prob = circle_q();
  EXPECT_THROW(
      wkb::continue_sqrt(prob, {cplx(0.0), cplx(1.0 + 1e-5, 0.0)}, +1),
      wkb::numerical_error);
}

TEST(Action, LinearQClosedForm) {
  Problem prob = linear_q();
  const wkb::TurningPoint a{cplx(0.0), 1};
  ActionValue av = wkb::action(prob, a, cplx(1.0), +1);
  EXPECT_NEAR(std::abs(av.value - cplx(2.0 / 3.0)), 0.0, 1e-12);

  ActionValue zero = wkb::action(prob, a, cplx(0.0), +1);
  EXPECT_EQ(zero.value, cplx(0.0));
}

// int_1^0 sqrt(1 - tau^2) dtau = -pi/4 on the branch positive over (-1, 1).
TEST(Action, CircleQQuarterArea) {
  Problem prob = circle_q();
  const wkb::TurningPoint a{cplx(1.0), 1};
  ActionValue av = wkb::action(prob, a, cplx(0.0), +1);
  EXPECT_NEAR(std::abs(av.value - cplx(-M_PI / 4.0)), 0.0, 1e-12);
}

TEST(Action, AdditivityAlongConcatenatedPaths) {
  Problem prob = circle_q();
  const wkb::TurningPoint a{cplx(1.0), 1};
  cplx x1(0.0, 1.0), x2(0.0, 2.0);
  ActionValue a1 = wkb::action(prob, a, x1, +1);
  ActionValue a2 = wkb::action(prob, a, x2, {a.location, x1, x2}, +1);
  auto [seg, sq_end] =
      wkb::segment_action(prob, x1, x2, a1.sqrt_at_endpoint);
  EXPECT_NEAR(std::abs(a1.value + seg - a2.value), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(sq_end - a2.sqrt_at_endpoint), 0.0, 1e-10);
}

TEST(Action, SignCovariance) {
  Problem prob = circle_q();
  const wkb::TurningPoint a{cplx(1.0), 1};
  ActionValue plus = wkb::action(prob, a, cplx(0.2, 0.7), +1);
  ActionValue minus = wkb::action(prob, a, cplx(0.2, 0.7), -1);
  EXPECT_EQ(plus.value, -minus.value);
}

// A double root: Q = x^2, action from 0 to x is x^2/2 on the branch
// sqrt(x^2) = x.
TEST(Action, DoubleRootEndpointSubstitution) {
  Problem prob = Problem::make(ComplexPolynomial::monomial(2));
  const wkb::TurningPoint a{cplx(0.0), 2};
  cplx x(1.2, 0.5);
  ActionValue av = wkb::action(prob, a, x, +1);
  // base_sign +1: principal sqrt at the endpoint; sqrt(x^2) = x when
  // Re x > 0, so the closed form is x^2/2
  EXPECT_NEAR(std::abs(av.value - 0.5 * x * x), 0.0, 1e-12);
}

TEST(Action, InteriorTurningPointRejected) {
  Problem prob = circle_q();
  const wkb::TurningPoint a{cplx(1.0), 1};
  // path through the other turning point -1
  EXPECT_THROW(
      wkb::action(prob, a, cplx(-2.0, 0.0), {a.location, cplx(-2.0, 0.0)},
                  +1),
      wkb::numerical_error);
}
