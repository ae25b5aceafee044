#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "wkb/solver.hpp"

using wkb::ComplexPolynomial;
using wkb::ConvolutionGrid;
using wkb::Problem;
using wkb::cplx;

namespace {

struct LinearCase {
  Problem prob = Problem::make(ComplexPolynomial::monomial(1));
  wkb::ForcingTerm f = wkb::forcing(prob.Q);

  ConvolutionGrid grid_at(cplx x, bool minus = false,
                          double T = 6.0) const {
    cplx sqrt0 = std::sqrt(prob.Q(x));
    wkb::GridParams gp;
    gp.T_total = T;
    return wkb::make_grid(prob, f, x, sqrt0, minus, gp);
  }
};

std::vector<double> uniform_nodes(double t_min, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i)
    t[i] = t_min * (1.0 - double(i) / double(n - 1));
  return t;
}

}  // namespace

TEST(Laplace, ConstantIntegrand) {
  double h = 0.1, T = 4.0;
  auto t = uniform_nodes(-T, 400);
  std::vector<cplx> f(t.size(), cplx(3.0, -1.0));
  cplx got = wkb::half_line_laplace(t, f, h);
  cplx expect = cplx(3.0, -1.0) * 0.5 * h * (1.0 - std::exp(-2.0 * T / h));
  EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-13);
}

TEST(Laplace, ExponentialIntegrand) {
  double h = 0.2, T = 5.0;
  auto t = uniform_nodes(-T, 1200);
  std::vector<cplx> f(t.size()), fd(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    f[i] = std::exp(t[i]);
    fd[i] = f[i];
  }
  cplx got = wkb::half_line_laplace(t, f, h, &fd);
  double a = 2.0 / h + 1.0;
  cplx expect = (1.0 - std::exp(-a * T)) / a;
  EXPECT_NEAR(std::abs(got - expect) / std::abs(expect), 0.0, 1e-10);
}

TEST(Laplace, LinearIntegrandClosedForm) {
  double h = 0.1, T = 6.0;
  auto t = uniform_nodes(-T, 200);
  std::vector<cplx> f(t.size()), fd(t.size(), cplx(1.0));
  for (std::size_t i = 0; i < t.size(); ++i) f[i] = t[i];
  cplx got = wkb::half_line_laplace(t, f, h, &fd);
  EXPECT_NEAR(std::abs(got - cplx(-h * h / 4.0)), 0.0, 1e-14);
}

TEST(FirstOrder, ConstantForcingIsFlat) {
  // engine identity: with the Watson seed, a constant integrand yields
  // G(tau) = c0 h / 2 at every node
  double h = 0.15;
  auto t = uniform_nodes(-5.0, 120);
  std::vector<cplx> f(t.size(), cplx(0.7, 0.3)), fd(t.size(), cplx(0.0));
  cplx init = 0.5 * h * f[0];
  auto G = wkb::exp_convolution(t, f, fd, h, init);
  for (cplx v : G)
    ASSERT_NEAR(std::abs(v - cplx(0.7, 0.3) * 0.5 * h), 0.0, 1e-15);
}

TEST(FirstOrder, BoundByTheta) {
  LinearCase lc;
  ConvolutionGrid g = lc.grid_at(2.5 * std::polar(1.0, M_PI / 3.0));
  for (double h : {0.2, 0.1, 0.05}) {
    auto G1 = wkb::first_order(g, h);
    EXPECT_LE(std::abs(G1.back()), 0.5 * h * g.theta * (1.0 + 1e-9)) << h;
  }
}

// G_1(0)/h extrapolated to h = 0 equals C(x)/(2Q(x)).
TEST(FirstOrder, RichardsonLeadingCoefficient) {
  LinearCase lc;
  cplx x = 2.5 * std::polar(1.0, M_PI / 3.0);
  ConvolutionGrid g = lc.grid_at(x);
  std::array<double, 3> hs{0.2, 0.1, 0.05};
  std::array<cplx, 3> v;
  for (int i = 0; i < 3; ++i)
    v[i] = wkb::first_order(g, hs[i]).back() / hs[i];
  // quadratic extrapolation to h = 0
  cplx A(0.0);
  for (int i = 0; i < 3; ++i) {
    double w = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) w *= (0.0 - hs[j]) / (hs[i] - hs[j]);
    A += v[i] * w;
  }
  cplx expect = lc.f.C_over_Q(x) * 0.5;
  EXPECT_NEAR(std::abs(A - expect) / std::abs(expect), 0.0, 1e-3);
}

TEST(Catalan, FirstTwelveExact) {
  auto M = wkb::catalan_bounds(12);
  std::vector<double> expect{0, 1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862,
                             16796, 58786};
  ASSERT_EQ(M.size(), expect.size());
  for (std::size_t n = 1; n < expect.size(); ++n)
    EXPECT_EQ(M[n], expect[n]) << n;
}

TEST(Catalan, GeneratingFunctionPartialSums) {
  double tau = 0.1;
  auto M = wkb::catalan_bounds(60);
  double sum = 0.0, tn = 1.0;
  for (int n = 1; n <= 60; ++n) {
    tn *= tau;
    sum += M[std::size_t(n)] * tn;
  }
  EXPECT_NEAR(sum, wkb::catalan_generating(tau), 1e-14);
}

TEST(Iterate, OrderBoundsAndGeometricDecay) {
  LinearCase lc;
  cplx x = 2.0 * std::polar(1.0, M_PI / 3.0);
  ConvolutionGrid g = lc.grid_at(x);
  double h = 0.4;  // large enough that several orders are computed
  wkb::IterationOptions opt;
  opt.tol = 1e-14;
  wkb::IterationState st = wkb::iterate(g, h, opt);
  ASSERT_GE(st.N_used, 3);
  double ratio_cap = (h * h * opt.rho / 4.0) * g.theta * 1.5;
  for (int n = 1; n <= st.N_used; ++n) {
    double bound = st.order_bounds[std::size_t(n) - 1];
    EXPECT_LE(std::abs(st.g_orders[std::size_t(n) - 1]),
              bound * (1.0 + 1e-6))
        << "order " << n;
    if (n >= 2) {
      double r = std::abs(st.g_orders[std::size_t(n) - 1]) /
                 std::abs(st.g_orders[std::size_t(n) - 2]);
      EXPECT_LE(r, ratio_cap) << "order " << n;
    }
  }
  // tail certificate below tolerance relative to the first order
  EXPECT_LE(st.tail, 1e-13 * std::abs(st.g_orders[0]) * 10.0);
}

// |g(x,h)| <= 0.75 h Theta(x) whenever the gate holds with tau <= 1/8
// (from the generating function: (2/h) psi(tau) <= 0.75 h Theta).
TEST(Iterate, GlobalBoundOnSweep) {
  LinearCase lc;
  for (double r : {1.6, 2.2, 3.0}) {
    for (double ang : {0.7, 1.05, 1.4}) {
      ConvolutionGrid g = lc.grid_at(r * std::polar(1.0, ang));
      for (double h : {0.3, 0.15, 0.075}) {
        if (!wkb::iteration_gate(h, g.theta)) continue;
        wkb::IterationState st = wkb::iterate(g, h);
        ASSERT_LE(std::abs(st.g), 0.75 * h * g.theta);
      }
    }
  }
}

TEST(Iterate, GateViolationThrows) {
  LinearCase lc;
  ConvolutionGrid g = lc.grid_at(cplx(0.0, 1.2), false, 8.0);
  double h_bad = std::sqrt(0.6 / g.theta) * 2.0 / 2.0;  // tau >= 0.15
  ASSERT_FALSE(wkb::iteration_gate(h_bad, g.theta));
  EXPECT_THROW(wkb::iterate(g, h_bad), wkb::numerical_error);
}

TEST(Iterate, NMaxExhaustionThrows) {
  LinearCase lc;
  ConvolutionGrid g = lc.grid_at(cplx(0.0, 1.2), false, 8.0);
  wkb::IterationOptions opt;
  opt.N_max = 2;
  opt.tol = 1e-30;  // unreachable
  EXPECT_THROW(wkb::iterate(g, 0.4, opt), wkb::numerical_error);
}

TEST(KernelOde, ResidualSmallForForcingTerm) {
  LinearCase lc;
  double h = 0.1;
  auto fval = [&](cplx y) { return lc.f.C(y); };
  auto fder = [&](cplx y) { return lc.f.C.derivative()(y); };
  for (double ang : {0.6, 1.0, 1.45}) {
    cplx x = 2.2 * std::polar(1.0, ang);
    double res = wkb::verify_kernel_ode(lc.prob, fval, fder, x, +1, h, 2e-3);
    EXPECT_LE(res, 1e-5 * std::abs(lc.f.C(x))) << "angle " << ang;
  }
}

TEST(KernelOde, ZeroFunctionGivesZero) {
  LinearCase lc;
  auto zero = [](cplx) { return cplx(0.0); };
  double res =
      wkb::verify_kernel_ode(lc.prob, zero, zero,
                             2.0 * std::polar(1.0, 1.0), +1, 0.1, 1e-3);
  EXPECT_EQ(res, 0.0);
}

// W = sqrt(Q) g from the iteration satisfies the quadratic remainder ODE
// W' + (2 sqrt(Q)/h - Q'/(2Q)) W + W^2 = C.
TEST(KernelOde, RemainderOdeConsistency) {
  LinearCase lc;
  double h = 0.1, d = 2e-3;
  cplx x = 2.3 * std::polar(1.0, M_PI / 3.0);
  auto W_at = [&](cplx xp) {
    ConvolutionGrid g = lc.grid_at(xp);
    wkb::IterationState st = wkb::iterate(g, h);
    return std::sqrt(lc.prob.Q(xp)) * st.g;
  };
  cplx W = W_at(x);
  cplx dW = (W_at(x + d) - W_at(x - d)) / (2.0 * d);
  cplx lhs = dW +
             (2.0 * std::sqrt(lc.prob.Q(x)) / h -
              lc.prob.dQ(x) / (2.0 * lc.prob.Q(x))) *
                 W +
             W * W;
  EXPECT_LE(std::abs(lhs - lc.f.C(x)), 1e-5 * std::abs(lc.f.C(x)));
}

// The mirrored kernel on the forward orbit: g_- ~ -(h/2) C(x)/Q(x) to
// leading order, and the order bounds hold with the forward envelope.
TEST(MinusBranch, LeadingOrderAndBounds) {
  LinearCase lc;
  cplx x = 3.0 * std::polar(1.0, M_PI / 3.0);
  ConvolutionGrid g = lc.grid_at(x, true);
  double h = 0.1;
  wkb::IterationState st = wkb::iterate(g, h);
  EXPECT_TRUE(st.minus);
  cplx lead = -0.5 * h * lc.f.C_over_Q(x);
  EXPECT_NEAR(std::abs(st.g - lead) / std::abs(lead), 0.0, 0.1);
  for (int n = 1; n <= st.N_used; ++n)
    EXPECT_LE(std::abs(st.g_orders[std::size_t(n) - 1]),
              st.order_bounds[std::size_t(n) - 1] * (1.0 + 1e-6));
}
