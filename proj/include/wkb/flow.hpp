#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "wkb/branch.hpp"
#include "wkb/complex_poly.hpp"
#include "wkb/errors.hpp"

namespace wkb {

// State of the path flow y'(z) = 1 / sqrt(Q(y)) at one point of an orbit:
// the position, the continued branch of sqrt(Q) there, and the accumulated
// action increment S(y) - S(y0), which equals the elapsed complex flow time
// on the exact orbit. The integrator enforces that identity after every
// step by a Newton projection on the action residual, so the orbit is
// pinned to the true level line of the action up to quadrature roundoff.
struct FlowState {
  cplx y;
  cplx sqrt_q;        // branch of sqrt(Q(y)) carried along the orbit
  cplx action_delta;  // S(y) - S(y_start), tracked by per-step quadrature
};

struct FlowOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  double clearance = 0.0;   // 0: use Problem::clearance
  long max_steps = 2000000;
  double max_step = std::numeric_limits<double>::infinity();
};

namespace detail {

struct Dopri5 {
  // Dormand-Prince 5(4) coefficients
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

// Integrates the flow from `state` over complex time `dz` (a straight ray in
// the time plane). Each accepted step is projected back onto the exact first
// integral S(y(s)) = S(y0) + zeta*s. Throws if the orbit enters the
// turning-point clearance or the step size underflows.
class FlowIntegrator {
 public:
  FlowIntegrator(const Problem& prob, FlowOptions opts = {})
      : prob_(prob), opts_(opts) {
    if (opts_.clearance <= 0.0) opts_.clearance = prob.clearance;
  }

  // One evaluation of the vector field with branch continuation against a
  // reference square-root value.
  cplx sqrt_at(cplx y, cplx ref) const {
    cplx s = std::sqrt(prob_.Q(y));
    if (std::real(s * std::conj(ref)) < 0.0) s = -s;
    return s;
  }

  // Advance by complex time dz; optionally record samples (t along the ray).
  // `on_sample` is called after every accepted+projected step with the
  // elapsed |time| s and the state; returning false stops the integration
  // early (used by the Stokes-curve tracer).
  FlowState advance(
      FlowState state, cplx dz,
      const std::function<bool(double, const FlowState&)>& on_sample = {}) const {
    double s_total = std::abs(dz);
    if (s_total == 0.0) return state;
    cplx zeta = dz / s_total;

    guard_clearance(state.y);
    double s = 0.0;
    double hstep = initial_step(state);
    cplx action0 = state.action_delta;

    for (long it = 0; it < opts_.max_steps && s < s_total; ++it) {
      hstep = std::min({hstep, s_total - s, opts_.max_step});
      if (hstep < 1e-15 * (1.0 + s_total))
        throw numerical_error("flow: step size underflow near y = (" +
                              std::to_string(state.y.real()) + ", " +
                              std::to_string(state.y.imag()) + ")");
      FlowState next;
      double err;
      try {
        err = attempt_step(state, zeta, hstep, next);
      } catch (const stage_reject&) {
        hstep *= 0.25;  // a stage wandered into the clearance; retreat
        continue;
      }
      double grow = std::clamp(0.9 * std::pow(std::max(err, 1e-12), -0.2),
                               0.2, 5.0);
      if (err > 1.0) {
        hstep *= std::max(grow, 0.2);
        continue;
      }
      // quadrature of sqrt(Q) along the chord: the measured action increment
      auto [dA, sq1] = segment_action(prob_, state.y, next.y, state.sqrt_q,
                                      1e-15 * hstep);
      next.action_delta = state.action_delta + dA;
      next.sqrt_q = sq1;
      double s_next = s + hstep;
      // Newton projection onto S(y) - S(y0) = zeta * s
      for (int p = 0; p < 3; ++p) {
        cplx resid = next.action_delta - (action0 + zeta * s_next);
        if (std::abs(resid) <= 1e-14 * (1.0 + s_next)) break;
        cplx delta = -resid / next.sqrt_q;
        cplx y_new = next.y + delta;
        auto [corr, sq2] = segment_action(prob_, next.y, y_new, next.sqrt_q,
                                          1e-16 * (1.0 + std::abs(resid)));
        next.y = y_new;
        next.sqrt_q = sq2;
        next.action_delta += corr;
      }
      guard_clearance(next.y);
      state = next;
      s = s_next;
      hstep *= grow;
      if (on_sample && !on_sample(s, state)) break;
    }
    if (s < s_total && !on_sample)
      throw numerical_error("flow: step budget exhausted");
    return state;
  }

 private:
  void guard_clearance(cplx y) const {
    if (prob_.distance_to_turning_point(y) < opts_.clearance)
      throw numerical_error(
          "flow: orbit entered the turning-point clearance at y = (" +
          std::to_string(y.real()) + ", " + std::to_string(y.imag()) + ")");
  }

  double initial_step(const FlowState& st) const {
    double dist = prob_.distance_to_turning_point(st.y);
    double speed = 1.0 / std::abs(st.sqrt_q);
    return 0.05 * std::max(dist, opts_.clearance) / speed;
  }

  struct stage_reject {};

  // returns the scaled error estimate; fills `next` with the 5th order
  // solution (position only)
  double attempt_step(const FlowState& st, cplx zeta, double h,
                      FlowState& next) const {
    using D = detail::Dopri5;
    auto f = [&](cplx y) -> cplx {
      double d = prob_.distance_to_turning_point(y);
      if (d < 0.5 * opts_.clearance) throw stage_reject{};
      return zeta / sqrt_at(y, st.sqrt_q);
    };
    cplx y0 = st.y;
    cplx k1 = f(y0);
    cplx k2 = f(y0 + h * (D::a21 * k1));
    cplx k3 = f(y0 + h * (D::a31 * k1 + D::a32 * k2));
    cplx k4 = f(y0 + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
    cplx k5 = f(y0 + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 +
                          D::a54 * k4));
    cplx k6 = f(y0 + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 +
                          D::a64 * k4 + D::a65 * k5));
    cplx y5 = y0 + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 +
                        D::b6 * k6);
    cplx k7 = f(y5);
    cplx errv = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 +
                     D::e6 * k6 + D::e7 * k7);
    next.y = y5;
    next.sqrt_q = sqrt_at(y5, st.sqrt_q);
    double sc = opts_.abs_tol +
                opts_.rel_tol * std::max(std::abs(y0), std::abs(y5));
    return std::abs(errv) / sc;
  }

  const Problem& prob_;
  FlowOptions opts_;
};

// One sampled point of an orbit with real flow time.
struct FlowSample {
  double t;
  cplx y;
  cplx sqrt_q;   // branch of sqrt(Q(y)) along the orbit
  cplx y_prime;  // 1 / sqrt_q
};

// Orbit of the flow over real time [0, T] (forward) or [-T, 0] (backward),
// sampled exactly at a caller-chosen node ladder. Positions between nodes
// come from the cubic Hermite interpolant (positions and slopes are both
// recorded).
struct FlowTrajectory {
  cplx x0;
  int direction = -1;  // -1: backward (t <= 0), +1: forward (t >= 0)
  std::vector<FlowSample> samples;  // ascending in t
  double t_reach = 0.0;             // largest |t| integrated

  cplx value_at(double t) const {
    const auto& s = samples;
    if (s.size() < 2 || t <= s.front().t) return s.front().y;
    if (t >= s.back().t) return s.back().y;
    std::size_t lo = 0, hi = s.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (s[mid].t <= t ? lo : hi) = mid;
    }
    double dt = s[hi].t - s[lo].t;
    double u = (t - s[lo].t) / dt;
    double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    double h10 = u * (1 - u) * (1 - u);
    double h01 = u * u * (3 - 2 * u);
    double h11 = u * u * (u - 1);
    return h00 * s[lo].y + h10 * dt * s[lo].y_prime + h01 * s[hi].y +
           h11 * dt * s[hi].y_prime;
  }
};

// Node ladder with spacing growing proportionally to |t|; resolves the
// smooth factor of the convolution integrands uniformly in h.
inline std::vector<double> node_ladder(double T, double eta, double t_base) {
  std::vector<double> ts{0.0};
  double t = 0.0;
  while (t < T) {
    t = std::min(T, t + eta * (t_base + t));
    ts.push_back(t);
  }
  return ts;
}

// Integrate the orbit through the given |t| nodes (ascending, starting at 0)
// in direction dir. sqrt0 anchors the branch of sqrt(Q) at x.
inline FlowTrajectory trace_through_nodes(const Problem& prob, cplx x,
                                          cplx sqrt0, int dir,
                                          const std::vector<double>& nodes,
                                          FlowOptions opts = {}) {
  FlowIntegrator integ(prob, opts);
  FlowTrajectory traj;
  traj.x0 = x;
  traj.direction = dir;
  FlowState st{x, sqrt0, cplx(0.0)};
  traj.samples.push_back({0.0, x, sqrt0, 1.0 / sqrt0});
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    double dt = nodes[i] - nodes[i - 1];
    st = integ.advance(st, cplx(double(dir) * dt, 0.0));
    traj.samples.push_back({double(dir) * nodes[i], st.y, st.sqrt_q,
                            1.0 / st.sqrt_q});
  }
  traj.t_reach = nodes.back();
  if (dir < 0)
    std::reverse(traj.samples.begin(), traj.samples.end());
  return traj;
}

inline FlowTrajectory trace_backward(const Problem& prob, cplx x, cplx sqrt0,
                                     double T_max, FlowOptions opts = {},
                                     double eta = 0.02, double t_base = 0.1) {
  return trace_through_nodes(prob, x, sqrt0, -1, node_ladder(T_max, eta, t_base),
                             opts);
}

inline FlowTrajectory trace_forward(const Problem& prob, cplx x, cplx sqrt0,
                                    double T_max, FlowOptions opts = {},
                                    double eta = 0.02, double t_base = 0.1) {
  return trace_through_nodes(prob, x, sqrt0, +1, node_ladder(T_max, eta, t_base),
                             opts);
}

// phi(z, x) with the branch of sqrt(Q) anchored at x by base_sign (+1 means
// the principal square root at x).
inline FlowState advance(const Problem& prob, cplx x, cplx z, int base_sign,
                         FlowOptions opts = {}) {
  cplx sq = std::sqrt(prob.Q(x));
  if (base_sign < 0) sq = -sq;
  FlowIntegrator integ(prob, opts);
  return integ.advance(FlowState{x, sq, cplx(0.0)}, z);
}

inline FlowState advance(const Problem& prob, const FlowState& st, cplx z,
                         FlowOptions opts = {}) {
  FlowIntegrator integ(prob, opts);
  return integ.advance(st, z);
}

// Least-squares slope of log|y| against log|t| over the outer half of the
// orbit; for polynomial Q of degree m the expected exponent is 2/(m+2).
inline double decay_exponent(const FlowTrajectory& traj) {
  std::vector<double> lx, ly;
  for (const FlowSample& s : traj.samples) {
    double at = std::abs(s.t);
    if (at >= 0.5 * traj.t_reach && at > 0.0) {
      lx.push_back(std::log(at));
      ly.push_back(std::log(std::abs(s.y)));
    }
  }
  if (lx.size() < 8)
    throw numerical_error("decay_exponent: trajectory too short");
  double n = double(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace wkb
