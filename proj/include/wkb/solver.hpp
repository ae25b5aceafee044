#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "wkb/flow.hpp"
#include "wkb/series.hpp"

namespace wkb {

// ---------------------------------------------------------------------------
// Product integration with the exact exponential weight.
//
// All half-line integrals here have the form
//     G(tau) = int_{-infty}^{tau} exp(2(u - tau)/h) f(u) du
// with f smooth on the orbit's own scale (never on the h scale). Each panel
// integrates the cubic Hermite interpolant of f against the exact weight, so
// the node ladder can stay h-independent.
// ---------------------------------------------------------------------------

namespace detail {

// moments mu_k = int_0^D v^k exp(beta (v - D)) dv, k = 0..3, beta > 0
inline std::array<double, 4> exp_panel_moments(double beta, double D) {
  std::array<double, 4> mu;
  double bD = beta * D;
  if (bD < 0.5) {
    // series: int_0^D v^k e^{beta v} dv = D^{k+1} sum_j (beta D)^j / (j! (k+j+1))
    double eD = std::exp(-bD);
    double Dk = D;
    for (int k = 0; k < 4; ++k) {
      double term = 1.0, sum = 0.0;
      for (int j = 0; j < 30; ++j) {
        sum += term / double(k + j + 1);
        term *= bD / double(j + 1);
        if (term < 1e-20 * sum) break;
      }
      mu[k] = Dk * sum * eD;
      Dk *= D;
    }
  } else {
    double emD = std::exp(-bD);
    mu[0] = (1.0 - emD) / beta;
    double Dk = 1.0;
    for (int k = 1; k < 4; ++k) {
      Dk *= D;
      mu[k] = (Dk - double(k) * mu[k - 1]) / beta;
    }
  }
  return mu;
}

// Hermite cubic coefficients on [0, D] from endpoint values and slopes.
inline std::array<cplx, 4> hermite_coeffs(cplx f0, cplx d0, cplx f1, cplx d1,
                                          double D) {
  std::array<cplx, 4> a;
  a[0] = f0;
  a[1] = d0;
  a[2] = (3.0 * (f1 - f0) - (2.0 * d0 + d1) * D) / (D * D);
  a[3] = (2.0 * (f0 - f1) + (d0 + d1) * D) / (D * D * D);
  return a;
}

}  // namespace detail

// Runs the forward recurrence
//   G(t_{k+1}) = exp(-2 dt / h) G(t_k) + panel(t_k, t_{k+1})
// over ascending nodes, with G(t_0) = init. Values and derivatives of the
// smooth factor must be supplied at the nodes.
inline std::vector<cplx> exp_convolution(const std::vector<double>& t,
                                         const std::vector<cplx>& f,
                                         const std::vector<cplx>& fdot,
                                         double h, cplx init) {
  const double beta = 2.0 / h;
  std::vector<cplx> G(t.size());
  G[0] = init;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    double D = t[k + 1] - t[k];
    auto a = detail::hermite_coeffs(f[k], fdot[k], f[k + 1], fdot[k + 1], D);
    auto mu = detail::exp_panel_moments(beta, D);
    cplx panel = a[0] * mu[0] + a[1] * mu[1] + a[2] * mu[2] + a[3] * mu[3];
    G[k + 1] = std::exp(-beta * D) * G[k] + panel;
  }
  return G;
}

// Plain truncated half-line Laplace integral int_{t_min}^{0} e^{2u/h} f(u) du
// on the given ascending nodes (last node must be 0). Derivatives optional;
// if absent they are estimated from neighbouring nodes.
inline cplx half_line_laplace(const std::vector<double>& t,
                              const std::vector<cplx>& f, double h,
                              const std::vector<cplx>* fdot = nullptr) {
  if (t.size() < 2 || t.size() != f.size())
    throw config_error("half_line_laplace: bad node data");
  std::vector<cplx> d;
  if (fdot) {
    d = *fdot;
  } else {
    d.resize(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::size_t i = std::min(std::max<std::size_t>(k, 1), t.size() - 2);
      double dl = t[i] - t[i - 1], dr = t[i + 1] - t[i];
      // 3-point differentiation evaluated at t[k]
      double x = t[k] - t[i];
      cplx c0 = f[i - 1], c1 = f[i], c2 = f[i + 1];
      cplx dd1 = (c1 - c0) / dl, dd2 = (c2 - c1) / dr;
      cplx dd = (dd2 - dd1) / (dl + dr);
      d[k] = dd1 + dd * (dl + 2.0 * x);
    }
  }
  return exp_convolution(t, f, d, h, cplx(0.0)).back();
}

// ---------------------------------------------------------------------------
// Convolution grid: one orbit, its nodes and the forcing values on it.
// ---------------------------------------------------------------------------

struct GridParams {
  double T_total = 6.0;   // reach of the orbit in |t|
  double T_mark = 0.0;    // node marked for the solution integral (<= T_total)
  double eta = 0.02;      // node spacing factor: dt = eta (t_base + |t|)
  double t_base = 0.1;
};

// Node data for the kernel operators. Everything is stored in "engine time"
// tau in [-T, 0] ascending to 0; for the minus kernel the forward orbit is
// reflected (tau = -t), which turns both kernels into the same recurrence.
struct ConvolutionGrid {
  bool minus = false;       // true: built from the forward orbit (K-)
  FlowTrajectory traj;      // the physical orbit
  std::vector<double> tau;  // ascending engine nodes, tau.back() == 0
  std::vector<cplx> c;      // (C/Q)(phi) at nodes
  std::vector<cplx> cdot;   // d/dtau of c along the engine parametrization
  std::vector<cplx> y;      // phi at nodes
  std::vector<cplx> sqrtq;  // branch of sqrt(Q) along the orbit at nodes
  std::size_t mark = 0;     // index of tau == -T_mark
  double theta = 0.0;       // sup of |c| with far-field envelope
  double envelope_constant = 0.0;
};

inline ConvolutionGrid make_grid(const Problem& prob, const ForcingTerm& f,
                                 cplx x, cplx sqrt0, bool minus_branch,
                                 GridParams gp, FlowOptions fopts = {}) {
  if (gp.T_mark <= 0.0 || gp.T_mark > gp.T_total) gp.T_mark = gp.T_total;
  // ladder that passes exactly through T_mark
  std::vector<double> ts = node_ladder(gp.T_mark, gp.eta, gp.t_base);
  std::size_t mark_idx = ts.size() - 1;
  {
    double t = ts.back();
    while (t < gp.T_total) {
      t = std::min(gp.T_total, t + gp.eta * (gp.t_base + t));
      ts.push_back(t);
    }
  }
  ConvolutionGrid g;
  g.minus = minus_branch;
  int dir = minus_branch ? +1 : -1;
  g.traj = trace_through_nodes(prob, x, sqrt0, dir, ts, fopts);

  const std::size_t n = ts.size();
  g.tau.resize(n);
  g.c.resize(n);
  g.cdot.resize(n);
  g.y.resize(n);
  g.sqrtq.resize(n);
  g.mark = n - 1 - mark_idx;

  // trajectory samples are ascending in physical t; engine order is
  // ascending tau = (minus ? -t : t)
  for (std::size_t k = 0; k < n; ++k) {
    const FlowSample& s =
        minus_branch ? g.traj.samples[n - 1 - k] : g.traj.samples[k];
    double tau = minus_branch ? -s.t : s.t;
    g.tau[k] = tau;
    g.y[k] = s.y;
    g.sqrtq[k] = s.sqrt_q;
    g.c[k] = f.C_over_Q(s.y);
    cplx ddt = f.C_over_Q_derivative(s.y) / s.sqrt_q;  // d/dt of c(phi(t))
    g.cdot[k] = minus_branch ? -ddt : ddt;
  }

  ThetaEnvelope th = theta(f, g.traj);
  g.theta = th.value;
  g.envelope_constant = th.envelope_constant;
  return g;
}

// ---------------------------------------------------------------------------
// The iteration W_1 = K C, W_n = -sum_{i+j=n} K W_i W_j with the Catalan
// majorants M_1 = 1, M_n = sum_{i+j=n} M_i M_j controlling truncation.
// ---------------------------------------------------------------------------

inline std::vector<double> catalan_bounds(int N) {
  std::vector<double> M(std::size_t(N) + 1, 0.0);
  if (N >= 1) M[1] = 1.0;
  for (int n = 2; n <= N; ++n) {
    double s = 0.0;
    for (int i = 1; i < n; ++i) s += M[i] * M[n - i];
    M[n] = s;
  }
  return M;
}

// generating function of the majorants, psi(tau) = (1 - sqrt(1-4 tau))/2,
// evaluated in the cancellation-free conjugate form
inline double catalan_generating(double tau) {
  return 2.0 * tau / (1.0 + std::sqrt(1.0 - 4.0 * tau));
}

struct IterationOptions {
  int N_max = 24;
  double tol = 1e-12;      // relative to |G_1(0)|
  double rho = 4.0;        // geometric majorant of M_n^{1/n}
  double bound_slack = 1.05;  // internal sanity factor on the order bounds
};

struct IterationState {
  double h = 0.0;
  bool minus = false;
  int N_used = 0;
  double theta = 0.0;
  double tail = 0.0;  // bound on |sum_{n>N} g_n(0)|
  std::vector<double> M;               // Catalan majorants, M[n]
  std::vector<cplx> g_orders;          // physical g_n(x,h) at the endpoint
  std::vector<double> order_bounds;    // M_n (h/2)^{2n-1} theta^n
  cplx g = 0.0;                        // physical g(x,h)
  std::vector<cplx> G_total;           // engine sum_n G_n at nodes
  std::vector<cplx> F_total;           // engine sum_n integrands at nodes
};

// convergence gate (h^2 rho / 4) * theta < 1/2
inline bool iteration_gate(double h, double theta_value, double rho = 4.0) {
  return (h * h * rho / 4.0) * theta_value < 0.5;
}

// First-order engine pass with the two-term Watson initial value at the far
// node (the truncated lower limit represents the rest of the half line).
inline std::vector<cplx> first_order(const ConvolutionGrid& g, double h) {
  cplx init = 0.5 * h * g.c.front() - 0.25 * h * h * g.cdot.front();
  return exp_convolution(g.tau, g.c, g.cdot, h, init);
}

inline IterationState iterate(const ConvolutionGrid& grid, double h,
                              IterationOptions opt = {}) {
  IterationState st;
  st.h = h;
  st.minus = grid.minus;
  st.theta = grid.theta;
  if (!iteration_gate(h, grid.theta, opt.rho))
    throw numerical_error(
        "iterate: h is too large for Theta(x); the contraction gate "
        "(h^2 rho / 4) Theta < 1/2 fails");

  const std::size_t n_nodes = grid.tau.size();
  const double half_h = 0.5 * h;
  const double tau_gf = half_h * half_h * grid.theta;
  st.M = catalan_bounds(opt.N_max);

  std::vector<std::vector<cplx>> G;  // per order
  std::vector<std::vector<cplx>> F;  // per-order integrands
  G.push_back(first_order(grid, h));
  F.push_back(grid.c);

  st.G_total = G[0];
  st.F_total = F[0];

  auto order_value = [&](int n) { return G[std::size_t(n) - 1].back(); };
  double g1_mag = std::abs(order_value(1));
  double partial_gf = st.M[1] * tau_gf;

  auto record_order = [&](int n) {
    double bound = st.M[std::size_t(n)] *
                   std::pow(half_h, 2.0 * n - 1.0) *
                   std::pow(grid.theta, double(n));
    st.order_bounds.push_back(bound);
    cplx gn = order_value(n);
    if (std::abs(gn) > opt.bound_slack * bound + 1e-250)
      throw numerical_error(
          "iterate: computed order violates the Catalan bound; the grid or "
          "Theta estimate is inconsistent");
    st.g_orders.push_back(grid.minus ? -gn : gn);
  };
  record_order(1);

  int N = 1;
  while (true) {
    // rigorous tail of the majorant series via its generating function
    double tail_gf = catalan_generating(tau_gf) - partial_gf;
    st.tail = std::max(0.0, tail_gf) * (2.0 / h);
    if (st.tail <= opt.tol * std::max(g1_mag, 1e-300)) break;
    if (N >= opt.N_max)
      throw numerical_error(
          "iterate: N_max reached with the tail bound above tolerance");
    ++N;
    // integrand of order N: -sum_{i+j=N} G_i G_j, with analytic derivative
    std::vector<cplx> f(n_nodes, cplx(0.0)), fdot(n_nodes, cplx(0.0));
    const double beta = 2.0 / h;
    for (int i = 1; i < N; ++i) {
      int j = N - i;
      const auto& Gi = G[std::size_t(i) - 1];
      const auto& Gj = G[std::size_t(j) - 1];
      const auto& Fi = F[std::size_t(i) - 1];
      const auto& Fj = F[std::size_t(j) - 1];
      for (std::size_t k = 0; k < n_nodes; ++k) {
        cplx gi = Gi[k], gj = Gj[k];
        cplx di = Fi[k] - beta * gi;  // G_i' = F_i - (2/h) G_i
        cplx dj = Fj[k] - beta * gj;
        f[k] -= gi * gj;
        fdot[k] -= di * gj + gi * dj;
      }
    }
    cplx init = 0.5 * h * f.front() - 0.25 * h * h * fdot.front();
    G.push_back(exp_convolution(grid.tau, f, fdot, h, init));
    F.push_back(std::move(f));
    for (std::size_t k = 0; k < n_nodes; ++k) {
      st.G_total[k] += G.back()[k];
      st.F_total[k] += F.back()[k];
    }
    partial_gf += st.M[std::size_t(N)] * std::pow(tau_gf, double(N));
    record_order(N);
  }

  st.N_used = N;
  cplx sum(0.0);
  for (cplx v : st.g_orders) sum += v;
  st.g = sum;
  return st;
}

// ---------------------------------------------------------------------------
// Direct check of the first-order ODE satisfied by the kernel operator:
//   (K f)'(x) + (2 sqrt(Q)/h - Q'/(2Q)) (K f)(x) = f(x).
// ---------------------------------------------------------------------------

// K_+ f at a single point: sqrt(Q(x)) * int e^{2t/h} f(phi)/Q(phi) dt.
inline cplx apply_plus_kernel(const Problem& prob,
                              const std::function<cplx(cplx)>& f_value,
                              const std::function<cplx(cplx)>& f_derivative,
                              cplx x, cplx sqrt0, double h, double T,
                              double eta = 0.02, double t_base = 0.1) {
  FlowTrajectory traj =
      trace_backward(prob, x, sqrt0, T, {}, eta, t_base);
  const std::size_t n = traj.samples.size();
  std::vector<double> t(n);
  std::vector<cplx> fv(n), fd(n);
  for (std::size_t k = 0; k < n; ++k) {
    const FlowSample& s = traj.samples[k];
    t[k] = s.t;
    cplx qy = prob.Q(s.y);
    cplx dqy = prob.dQ(s.y);
    fv[k] = f_value(s.y) / qy;
    // d/dt [f/Q](phi) = (f' Q - f Q')/Q^2 / sqrt(Q)
    fd[k] = (f_derivative(s.y) * qy - f_value(s.y) * dqy) /
            (qy * qy * s.sqrt_q);
  }
  cplx init = 0.5 * h * fv.front() - 0.25 * h * h * fd.front();
  cplx G0 = exp_convolution(t, fv, fd, h, init).back();
  return sqrt0 * G0;
}

// Residual of the kernel ODE identity at x, derivative by central
// differences over a stencil of four kernel evaluations.
inline double verify_kernel_ode(const Problem& prob,
                                const std::function<cplx(cplx)>& f_value,
                                const std::function<cplx(cplx)>& f_derivative,
                                cplx x, int base_sign, double h,
                                double stencil, double T = 0.0) {
  if (T <= 0.0) T = 0.5 * h * std::log(1e16) + 8.0 * h + 1.0;
  auto K = [&](cplx xp) {
    cplx sq = std::sqrt(prob.Q(xp));
    if (base_sign < 0) sq = -sq;
    return apply_plus_kernel(prob, f_value, f_derivative, xp, sq, h, T);
  };
  cplx Kx = K(x);
  cplx dK = (K(x + stencil) - K(x - stencil)) / (2.0 * stencil);
  cplx sq = std::sqrt(prob.Q(x));
  if (base_sign < 0) sq = -sq;
  cplx lhs = dK + (2.0 * sq / h - prob.dQ(x) / (2.0 * prob.Q(x))) * Kx;
  return std::abs(lhs - f_value(x));
}

}  // namespace wkb
