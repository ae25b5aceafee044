#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "wkb/complex_poly.hpp"
#include "wkb/errors.hpp"

namespace wkb {

// Bundles the data every stage of the pipeline needs about one problem:
// Q, Q', the turning points, the configuration scale and the turning-point
// clearance (the region D_eps is |x - c| > clearance for every root c).
struct Problem {
  ComplexPolynomial Q;
  ComplexPolynomial dQ;
  std::vector<TurningPoint> turning_points;
  double scale = 1.0;
  double clearance = 1e-3;

  static Problem make(ComplexPolynomial Q, double clearance_factor = 1e-3) {
    Problem p;
    p.Q = std::move(Q);
    p.dQ = p.Q.derivative();
    p.turning_points = find_turning_points(p.Q);
    p.scale = geometry_scale(p.turning_points);
    p.clearance = clearance_factor * p.scale;
    return p;
  }

  double distance_to_turning_point(cplx x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const TurningPoint& tp : turning_points)
      d = std::min(d, std::abs(x - tp.location));
    return d;
  }
  const TurningPoint* nearest_turning_point(cplx x) const {
    const TurningPoint* best = nullptr;
    double d = std::numeric_limits<double>::infinity();
    for (const TurningPoint& tp : turning_points) {
      double dd = std::abs(x - tp.location);
      if (dd < d) {
        d = dd;
        best = &tp;
      }
    }
    return best;
  }
};

namespace detail {

// 8- and 16-point Gauss-Legendre rules on [-1, 1]; the pair gives the
// error estimate for adaptive bisection.
inline const std::array<double, 4> kGL8X = {
    0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
    0.9602898564975363};
inline const std::array<double, 4> kGL8W = {
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
    0.1012285362903763};
inline const std::array<double, 8> kGL16X = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
inline const std::array<double, 8> kGL16W = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

template <class F>
cplx gl8(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx s(0.0);
  for (int i = 0; i < 4; ++i)
    s += kGL8W[i] * (f(c + h * kGL8X[i]) + f(c - h * kGL8X[i]));
  return s * h;
}
template <class F>
cplx gl16(const F& f, double a, double b, double* l1 = nullptr) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx s(0.0);
  double m = 0.0;
  for (int i = 0; i < 8; ++i) {
    cplx fp = f(c + h * kGL16X[i]), fm = f(c - h * kGL16X[i]);
    s += kGL16W[i] * (fp + fm);
    m += kGL16W[i] * (std::abs(fp) + std::abs(fm));
  }
  if (l1) *l1 = m * std::abs(h);
  return s * h;
}

// Adaptive Gauss quadrature of an analytic integrand on [a, b]. The
// termination test is floored at the roundoff level of the panel's L1
// mass, so tolerances below machine noise cannot blow up the bisection
// tree.
template <class F>
cplx adaptive_gauss(const F& f, double a, double b, double abs_tol,
                    int depth = 0) {
  cplx c8 = gl8(f, a, b);
  double l1 = 0.0;
  cplx c16 = gl16(f, a, b, &l1);
  double floor_tol = 64.0 * std::numeric_limits<double>::epsilon() * l1;
  double tol = std::max(abs_tol, floor_tol);
  double err = std::abs(c16 - c8);
  if (err <= tol || depth >= 24) {
    if (depth >= 24 && err > std::max(1e3 * abs_tol, 1e-8 * l1))
      throw numerical_error("adaptive_gauss: quadrature did not converge");
    return c16;
  }
  double m = 0.5 * (a + b);
  return adaptive_gauss(f, a, m, 0.5 * abs_tol, depth + 1) +
         adaptive_gauss(f, m, b, 0.5 * abs_tol, depth + 1);
}

}  // namespace detail

// Continuous branch of sqrt(f(t)) along a real parameter interval, built as
// a "rail" of reference values. Lookups pick the square root closest in
// direction to the nearest rail entry, so panel quadratures can evaluate the
// branch at arbitrary points without re-walking the path.
class BranchRail {
 public:
  template <class F>
  BranchRail(const F& f, double t0, double t1, cplx sqrt_at_t0) {
    ts_.push_back(t0);
    vals_.push_back(sqrt_at_t0);
    build(f, t0, t1, sqrt_at_t0, 0);
  }

  // sqrt of value v, sign-matched to the rail near parameter t
  cplx match(double t, cplx v) const {
    cplx ref = nearest(t);
    cplx s = std::sqrt(v);
    if (ref != cplx(0.0) && std::real(s * std::conj(ref)) < 0.0) s = -s;
    return s;
  }
  cplx end_value() const { return vals_.back(); }

 private:
  template <class F>
  void build(const F& f, double ta, double tb, cplx va, int depth) {
    cplx fb = f(tb);
    cplx vb = std::sqrt(fb);
    if (va != cplx(0.0) && std::real(vb * std::conj(va)) < 0.0) vb = -vb;
    // require a comfortable angular margin between consecutive rail values
    bool ok = (va == cplx(0.0)) ||
              (std::real(vb * std::conj(va)) >
               0.3 * std::abs(vb) * std::abs(va));
    if (!ok && depth < 40) {
      double tm = 0.5 * (ta + tb);
      build(f, ta, tm, va, depth + 1);
      build(f, tm, tb, vals_.back(), depth + 1);
      return;
    }
    if (!ok)
      throw numerical_error(
          "BranchRail: branch of sqrt could not be continued (path too close "
          "to a zero of the argument)");
    ts_.push_back(tb);
    vals_.push_back(vb);
  }

  cplx nearest(double t) const {
    auto it = std::lower_bound(ts_.begin(), ts_.end(), t);
    if (it == ts_.end()) return vals_.back();
    if (it == ts_.begin()) return vals_.front();
    std::size_t i = std::size_t(it - ts_.begin());
    return (t - ts_[i - 1] < ts_[i] - t) ? vals_[i - 1] : vals_[i];
  }

  std::vector<double> ts_;
  std::vector<cplx> vals_;
};

// A path with a continuous branch of sqrt(Q) attached to each waypoint.
struct BranchedPath {
  std::vector<cplx> waypoints;
  std::vector<cplx> sqrt_values;
  int base_sign = +1;
};

// Continues sqrt(Q) along the polyline `path`, refining segments until the
// branch certificate (consecutive values within a quarter turn) holds. The
// first waypoint may sit on a turning point, in which case the branch is
// anchored at the first point where Q does not vanish: base_sign = +1 means
// the principal square root there.
inline BranchedPath continue_sqrt(const Problem& prob,
                                  const std::vector<cplx>& path,
                                  int base_sign) {
  if (path.size() < 1)
    throw config_error("continue_sqrt: empty path");
  BranchedPath out;
  out.base_sign = base_sign;

  auto clearance_check = [&](cplx p, bool first) {
    if (first) return;
    if (prob.distance_to_turning_point(p) < prob.clearance)
      throw numerical_error(
          "continue_sqrt: path passes within the turning-point clearance "
          "(branch ambiguous) near (" +
          std::to_string(p.real()) + ", " + std::to_string(p.imag()) + ")");
  };

  cplx prev_val(0.0);
  bool anchored = false;
  auto push = [&](cplx p, bool first) {
    clearance_check(p, first);
    cplx qv = prob.Q(p);
    cplx s = std::sqrt(qv);
    if (!anchored) {
      if (std::abs(qv) <= 1e-14 * prob.Q.eval_scale(p)) {
        s = cplx(0.0);  // on a turning point; branch anchors later
      } else {
        if (base_sign < 0) s = -s;
        anchored = true;
      }
    } else {
      if (std::real(s * std::conj(prev_val)) < 0.0) s = -s;
    }
    out.waypoints.push_back(p);
    out.sqrt_values.push_back(s);
    if (s != cplx(0.0)) prev_val = s;
  };

  push(path[0], true);
  for (std::size_t i = 1; i < path.size(); ++i) {
    // refine each leg until consecutive branch values stay within a
    // quarter turn of each other
    std::vector<std::pair<cplx, cplx>> stack;  // segments (from, to), LIFO
    stack.emplace_back(out.waypoints.back(), path[i]);
    int guard = 0;
    while (!stack.empty()) {
      if (++guard > 200000)
        throw numerical_error("continue_sqrt: refinement did not terminate");
      auto [a, b] = stack.back();
      cplx qb = prob.Q(b);
      cplx sb = std::sqrt(qb);
      bool have_ref = prev_val != cplx(0.0);
      if (have_ref && std::real(sb * std::conj(prev_val)) < 0.0) sb = -sb;
      double cosang = have_ref && std::abs(sb) > 0.0
                          ? std::real(sb * std::conj(prev_val)) /
                                (std::abs(sb) * std::abs(prev_val))
                          : 1.0;
      if (cosang <= 0.2 && std::abs(b - a) >
                               1e-13 * (std::abs(a) + std::abs(b) + 1.0)) {
        stack.back() = {a, 0.5 * (a + b)};
        stack.emplace_back(0.5 * (a + b), b);
        // keep LIFO order: process (a, mid) first
        std::swap(stack[stack.size() - 2], stack[stack.size() - 1]);
        continue;
      }
      stack.pop_back();
      push(b, false);
    }
  }
  return out;
}

// Action of one straight segment, sqrt branch anchored by its value at p0
// (p0 must not be a turning point). Returns the integral and the continued
// branch value at p1.
inline std::pair<cplx, cplx> segment_action(const Problem& prob, cplx p0,
                                            cplx p1, cplx sqrt_at_p0,
                                            double abs_tol = 1e-13) {
  cplx d = p1 - p0;
  if (d == cplx(0.0)) return {cplx(0.0), sqrt_at_p0};
  auto qf = [&](double u) { return prob.Q(p0 + u * d); };
  BranchRail rail(qf, 0.0, 1.0, sqrt_at_p0);
  auto integrand = [&](double u) { return rail.match(u, qf(u)); };
  cplx val = detail::adaptive_gauss(integrand, 0.0, 1.0,
                                    abs_tol / std::max(1.0, std::abs(d)));
  return {val * d, rail.end_value()};
}

// Integrated value of the action along a path whose first point is the
// turning point itself, handled on the first leg with the substitution
// tau = a + d w^2 that makes the integrand analytic at w = 0 for any root
// multiplicity.
struct ActionValue {
  cplx value;
  TurningPoint base;
  cplx endpoint;
  cplx sqrt_at_endpoint;  // continued branch of sqrt(Q) at the endpoint
  int base_sign = +1;
  std::vector<cplx> path;  // the waypoints actually used
};

inline ActionValue action(const Problem& prob, const TurningPoint& a, cplx x,
                          const std::vector<cplx>& path, int base_sign,
                          double abs_tol = 1e-13) {
  if (path.size() < 2)
    throw config_error("action: path needs at least two waypoints");
  if (std::abs(path.front() - a.location) >
      1e-9 * std::max(1.0, std::abs(a.location)))
    throw config_error("action: path must start at the base turning point");
  if (std::abs(path.back() - x) > 1e-9 * std::max(1.0, std::abs(x)))
    throw config_error("action: path must end at the evaluation point");
  if (std::abs(x - a.location) <= 1e-14 * std::max(1.0, std::abs(x))) {
    ActionValue zero;
    zero.value = cplx(0.0);
    zero.base = a;
    zero.endpoint = x;
    zero.sqrt_at_endpoint = cplx(0.0);
    zero.base_sign = base_sign;
    zero.path = path;
    return zero;
  }
  for (std::size_t i = 1; i < path.size(); ++i) {
    // clearance against every root except the base point itself
    for (const TurningPoint& tp : prob.turning_points) {
      if (std::abs(tp.location - a.location) <
          1e-12 * std::max(1.0, std::abs(a.location)))
        continue;
      if (std::abs(path[i] - tp.location) < prob.clearance)
        throw numerical_error(
            "action: interior path point violates the turning-point "
            "clearance");
    }
  }

  const int r = a.multiplicity;
  const cplx d = path[1] - a.location;

  // Q(a + d u) = u^r * A(u); A is a polynomial in u with A(0) != 0.
  ComplexPolynomial shifted = prob.Q.shifted(a.location);
  std::vector<cplx> acoef;
  const auto& sc = shifted.coefficients();
  cplx dk(1.0);
  std::vector<cplx> scaled(sc.size());
  for (std::size_t k = 0; k < sc.size(); ++k) {
    scaled[k] = sc[k] * dk;
    dk *= d;
  }
  for (std::size_t k = r; k < scaled.size(); ++k) acoef.push_back(scaled[k]);
  if (acoef.empty() || std::abs(acoef[0]) == 0.0)
    throw numerical_error("action: turning-point multiplicity mismatch");
  ComplexPolynomial A((std::vector<cplx>(acoef)));

  // First leg: int_0^1 sqrt(Q(a+du)) d du = 2 d int_0^1 w^{r+1} sqrt(A(w^2)) dw
  auto af = [&](double w) { return A(cplx(w * w)); };
  BranchRail rail(af, 0.0, 1.0, std::sqrt(A(cplx(0.0))));
  auto first_leg = [&](double w) {
    return std::pow(w, r + 1) * rail.match(w, af(w));
  };
  cplx leg = 2.0 * d *
             detail::adaptive_gauss(first_leg, 0.0, 1.0,
                                    abs_tol / std::max(1.0, std::abs(d)));
  // branch value of sqrt(Q) at path[1] implied by the A-branch
  cplx sqrt_p1 = rail.end_value();  // = sqrt(A(1)); sqrt(Q(p1)) = 1 * that
  // match the caller's base_sign convention: +1 means principal sqrt at the
  // first point off the turning point
  cplx principal = std::sqrt(prob.Q(path[1]));
  cplx desired = double(base_sign) * principal;
  if (std::real(sqrt_p1 * std::conj(desired)) < 0.0) {
    sqrt_p1 = -sqrt_p1;
    leg = -leg;
  }

  ActionValue av;
  av.base = a;
  av.base_sign = base_sign;
  av.path = path;
  cplx total = leg;
  cplx sq = sqrt_p1;
  for (std::size_t i = 2; i < path.size(); ++i) {
    auto [seg, sq_next] =
        segment_action(prob, path[i - 1], path[i], sq, abs_tol);
    total += seg;
    sq = sq_next;
  }
  av.value = total;
  av.endpoint = x;
  av.sqrt_at_endpoint = sq;
  return av;
}

// Convenience: straight path from the turning point.
inline ActionValue action(const Problem& prob, const TurningPoint& a, cplx x,
                          int base_sign, double abs_tol = 1e-13) {
  return action(prob, a, x, {a.location, x}, base_sign, abs_tol);
}

}  // namespace wkb
