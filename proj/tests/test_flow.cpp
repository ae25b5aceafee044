#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "wkb/branch.hpp"
#include "wkb/flow.hpp"

using wkb::ComplexPolynomial;
using wkb::FlowState;
using wkb::FlowTrajectory;
using wkb::Problem;
using wkb::cplx;

namespace {

Problem linear_q() { return Problem::make(ComplexPolynomial::monomial(1)); }
Problem circle_q() {
  return Problem::make(ComplexPolynomial({1.0, 0.0, -1.0}));
}

// Action of Q = 1 - x^2 from the turning point +1, real branch positive on
// (-1, 1), restricted to real y.
double circle_action(double y) {
  return 0.5 * (y * std::sqrt(1.0 - y * y) + std::asin(y)) - M_PI / 4.0;
}

// Signed action value at a trajectory point measured independently with the
// quadrature module, branch-matched to the orbit's own continuation.
cplx independent_action(const Problem& prob, const wkb::TurningPoint& a,
                        cplx y, cplx sqrt_branch) {
  wkb::ActionValue av = wkb::action(prob, a, y, +1);
  if (std::real(av.sqrt_at_endpoint * std::conj(sqrt_branch)) < 0.0)
    return -av.value;
  return av.value;
}

}  // namespace

TEST(Flow, ZeroTimeIsIdentity) {
  Problem prob = linear_q();
  cplx x(1.3, 0.8);
  FlowState st = wkb::advance(prob, x, cplx(0.0), +1);
  EXPECT_EQ(st.y, x);
}

// Invert the closed-form action of Q = 1 - x^2 to get phi(t, 0) on the real
// axis and compare with the integrator.
TEST(Flow, CircleQRealAxisOracle) {
  Problem prob = circle_q();
  for (double t : {0.3, -0.4, 0.55}) {
    FlowState st = wkb::advance(prob, cplx(0.0), cplx(t, 0.0), +1);
    // bisection on F(y) = F(0) + t
    double target = circle_action(0.0) + t;
    double lo = -0.999, hi = 0.999;
    for (int i = 0; i < 200; ++i) {
      double mid = 0.5 * (lo + hi);
      (circle_action(mid) < target ? lo : hi) = mid;
    }
    double y_oracle = 0.5 * (lo + hi);
    EXPECT_NEAR(std::abs(st.y - cplx(y_oracle)), 0.0, 1e-9) << "t=" << t;
  }
}

TEST(Flow, GroupProperty) {
  Problem prob = linear_q();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  cplx x = 1.5 * std::polar(1.0, M_PI / 3.0);
  for (int rep = 0; rep < 25; ++rep) {
    cplx z1(u(rng), u(rng)), z2(u(rng), u(rng));
    FlowState mid = wkb::advance(prob, x, z1, +1);
    FlowState two = wkb::advance(prob, mid, z2);
    FlowState one = wkb::advance(prob, x, z1 + z2, +1);
    ASSERT_NEAR(std::abs(two.y - one.y), 0.0, 1e-7)
        << "z1=" << z1 << " z2=" << z2;
  }
}

// d phi / dx = sqrt(Q(x)) / sqrt(Q(phi)) checked by central differences.
TEST(Flow, SpaceDerivativeIdentity) {
  Problem prob = linear_q();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int rep = 0; rep < 10; ++rep) {
    cplx x = cplx(1.4, 0.9) + cplx(u(rng), u(rng));
    cplx z = cplx(u(rng), u(rng));
    double d = 1e-4;
    FlowState c = wkb::advance(prob, x, z, +1);
    cplx fd = (wkb::advance(prob, x + d, z, +1).y -
               wkb::advance(prob, x - d, z, +1).y) /
              (2.0 * d);
    cplx sx = std::sqrt(prob.Q(x));
    cplx sy = c.sqrt_q;
    ASSERT_NEAR(std::abs(fd - sx / sy), 0.0, 1e-5);
  }
}

TEST(Flow, BackwardTraceActionIdentity) {
  Problem prob = linear_q();
  const wkb::TurningPoint a{cplx(0.0), 1};
  cplx x0 = 1.5 * std::polar(1.0, M_PI / 3.0);
  cplx sqrt0 = std::sqrt(prob.Q(x0));
  FlowTrajectory traj = wkb::trace_backward(prob, x0, sqrt0, 5.0);

  cplx S0 = independent_action(prob, a, x0, sqrt0);
  for (std::size_t i = 0; i < traj.samples.size(); i += 7) {
    const auto& s = traj.samples[i];
    cplx Sy = independent_action(prob, a, s.y, s.sqrt_q);
    // Re S tracks the flow time, Im S is invariant
    ASSERT_NEAR(std::abs(Sy - S0 - cplx(s.t, 0.0)), 0.0, 1e-8)
        << "t=" << s.t;
  }
}

TEST(Flow, ForwardTraceMirrors) {
  Problem prob = linear_q();
  const wkb::TurningPoint a{cplx(0.0), 1};
  cplx x0 = 1.5 * std::polar(1.0, M_PI / 3.0);
  cplx sqrt0 = std::sqrt(prob.Q(x0));
  FlowTrajectory traj = wkb::trace_forward(prob, x0, sqrt0, 5.0);
  cplx S0 = independent_action(prob, a, x0, sqrt0);
  const auto& last = traj.samples.back();
  cplx Sy = independent_action(prob, a, last.y, last.sqrt_q);
  EXPECT_NEAR(std::abs(Sy - S0 - cplx(last.t, 0.0)), 0.0, 1e-8);
  EXPECT_GT(last.t, 4.99);
}

TEST(Flow, TranslationAlongOrbit) {
  Problem prob = circle_q();
  cplx x0(0.0, 2.0);
  cplx sqrt0 = std::sqrt(prob.Q(x0));
  FlowTrajectory traj = wkb::trace_backward(prob, x0, sqrt0, 3.0);
  // phi(s, phi(t, x)) = phi(s + t, x) on sample pairs
  const auto& samples = traj.samples;
  std::size_t k = samples.size() / 2;
  std::size_t j = samples.size() / 4;  // j < k in index => t_j < t_k
  FlowState st{samples[k].y, samples[k].sqrt_q, cplx(0.0)};
  FlowState moved = wkb::advance(prob, st, cplx(samples[j].t - samples[k].t));
  EXPECT_NEAR(std::abs(moved.y - samples[j].y), 0.0, 1e-7);
}

TEST(Flow, EscapeToInfinityAndLinearQOracle) {
  Problem prob = linear_q();
  cplx x0 = 1.5 * std::polar(1.0, M_PI / 3.0);
  cplx sqrt0 = std::sqrt(prob.Q(x0));
  FlowTrajectory traj =
      wkb::trace_backward(prob, x0, sqrt0, 1000.0, {}, 0.1, 0.1);
  const auto& far = traj.samples.front();  // most negative t
  EXPECT_GT(std::abs(far.y), 50.0);

  // closed form: (2/3) phi^{3/2} = (2/3) x^{3/2} + t
  cplx S0 = (2.0 / 3.0) * std::pow(x0, 1.5);
  cplx oracle = std::pow(1.5 * (S0 + cplx(far.t, 0.0)), 2.0 / 3.0);
  EXPECT_NEAR(std::abs(far.y - oracle) / std::abs(oracle), 0.0, 1e-6);
}

TEST(Flow, DecayExponents) {
  struct Case {
    ComplexPolynomial Q;
    cplx x0;
    int dir;
    double expected;
  };
  std::vector<Case> cases;
  cases.push_back({ComplexPolynomial::monomial(1),
                   1.5 * std::polar(1.0, M_PI / 3.0), -1, 2.0 / 3.0});
  cases.push_back({ComplexPolynomial({1.0, 0.0, -1.0}), cplx(0.0, 2.0), -1,
                   0.5});
  cases.push_back({ComplexPolynomial({1.0, 0.0, 0.0, 1.0}), cplx(2.0, 0.0),
                   +1, 0.4});
  for (const auto& c : cases) {
    Problem prob = Problem::make(c.Q);
    cplx sqrt0 = std::sqrt(prob.Q(c.x0));
    FlowTrajectory traj = wkb::trace_through_nodes(
        prob, c.x0, sqrt0, c.dir, wkb::node_ladder(1000.0, 0.1, 0.1));
    double slope = wkb::decay_exponent(traj);
    EXPECT_NEAR(slope, c.expected, 0.05) << "degree " << c.Q.degree();
  }
}

TEST(Flow, ShortTrajectoryRejectedByDecayFit) {
  Problem prob = linear_q();
  cplx x0 = 1.5 * std::polar(1.0, M_PI / 3.0);
  cplx sqrt0 = std::sqrt(prob.Q(x0));
  FlowTrajectory traj =
      wkb::trace_through_nodes(prob, x0, sqrt0, -1, {0.0, 0.05, 0.1});
  EXPECT_THROW(wkb::decay_exponent(traj), wkb::numerical_error);
}

TEST(Flow, ClearanceGuard) {
  Problem prob = linear_q();
  // aiming the flow straight at the turning point from the positive axis:
  // backward real time decreases the action toward the origin
  EXPECT_THROW(wkb::advance(prob, cplx(0.5, 0.0), cplx(-0.4, 0.0), +1),
               wkb::numerical_error);
}
