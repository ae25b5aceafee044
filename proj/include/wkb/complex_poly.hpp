#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "wkb/errors.hpp"

namespace wkb {

using cplx = std::complex<double>;

// Dense complex polynomial, coefficients ascending in degree, trailing zeros
// trimmed so that the leading coefficient is nonzero (the zero polynomial is
// stored as a single zero coefficient).
class ComplexPolynomial {
 public:
  ComplexPolynomial() : coef_{cplx(0.0)} {}
  explicit ComplexPolynomial(std::vector<cplx> coefficients)
      : coef_(std::move(coefficients)) {
    if (coef_.empty()) coef_.push_back(cplx(0.0));
    trim();
  }
  static ComplexPolynomial constant(cplx c) {
    return ComplexPolynomial(std::vector<cplx>{c});
  }
  // x^k
  static ComplexPolynomial monomial(std::size_t k, cplx c = cplx(1.0)) {
    std::vector<cplx> v(k + 1, cplx(0.0));
    v[k] = c;
    return ComplexPolynomial(std::move(v));
  }

  const std::vector<cplx>& coefficients() const { return coef_; }
  std::size_t degree() const { return coef_.size() - 1; }
  cplx leading() const { return coef_.back(); }
  bool is_zero() const { return coef_.size() == 1 && coef_[0] == cplx(0.0); }

  // Horner evaluation.
  cplx operator()(cplx x) const {
    cplx acc = coef_.back();
    for (std::size_t i = coef_.size() - 1; i-- > 0;) acc = acc * x + coef_[i];
    return acc;
  }

  // max_i |c_i| * max(1,|x|)^i; the natural magnitude against which |p(x)|
  // roundoff must be judged.
  double eval_scale(cplx x) const {
    double ax = std::max(1.0, std::abs(x));
    double pw = 1.0, s = 0.0;
    for (const cplx& c : coef_) {
      s = std::max(s, std::abs(c) * pw);
      pw *= ax;
    }
    return s;
  }

  ComplexPolynomial derivative() const {
    if (coef_.size() == 1) return ComplexPolynomial();
    std::vector<cplx> d(coef_.size() - 1);
    for (std::size_t i = 1; i < coef_.size(); ++i)
      d[i - 1] = coef_[i] * double(i);
    return ComplexPolynomial(std::move(d));
  }

  ComplexPolynomial operator+(const ComplexPolynomial& o) const {
    std::vector<cplx> r(std::max(coef_.size(), o.coef_.size()), cplx(0.0));
    for (std::size_t i = 0; i < coef_.size(); ++i) r[i] += coef_[i];
    for (std::size_t i = 0; i < o.coef_.size(); ++i) r[i] += o.coef_[i];
    return ComplexPolynomial(std::move(r));
  }
  ComplexPolynomial operator-(const ComplexPolynomial& o) const {
    std::vector<cplx> r(std::max(coef_.size(), o.coef_.size()), cplx(0.0));
    for (std::size_t i = 0; i < coef_.size(); ++i) r[i] += coef_[i];
    for (std::size_t i = 0; i < o.coef_.size(); ++i) r[i] -= o.coef_[i];
    return ComplexPolynomial(std::move(r));
  }
  ComplexPolynomial operator*(const ComplexPolynomial& o) const {
    if (is_zero() || o.is_zero()) return ComplexPolynomial();
    std::vector<cplx> r(coef_.size() + o.coef_.size() - 1, cplx(0.0));
    for (std::size_t i = 0; i < coef_.size(); ++i)
      for (std::size_t j = 0; j < o.coef_.size(); ++j)
        r[i + j] += coef_[i] * o.coef_[j];
    return ComplexPolynomial(std::move(r));
  }
  ComplexPolynomial operator*(cplx s) const {
    std::vector<cplx> r = coef_;
    for (cplx& c : r) c *= s;
    return ComplexPolynomial(std::move(r));
  }
  ComplexPolynomial operator-() const { return (*this) * cplx(-1.0); }

  // Coefficients of p(a + u) as a polynomial in u (Horner-style Taylor shift).
  ComplexPolynomial shifted(cplx a) const {
    std::vector<cplx> w = coef_;
    const std::size_t n = w.size();
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = n - 1; i-- > k;) w[i] += a * w[i + 1];
    return ComplexPolynomial(std::move(w));
  }

  // Synthetic division by (x - r); the remainder p(r) is discarded.
  ComplexPolynomial deflated(cplx r) const {
    if (coef_.size() == 1) return ComplexPolynomial();
    std::vector<cplx> q(coef_.size() - 1);
    cplx acc = coef_.back();
    for (std::size_t i = coef_.size() - 1; i-- > 0;) {
      q[i] = acc;
      acc = coef_[i] + acc * r;
    }
    return ComplexPolynomial(std::move(q));
  }

  // Cauchy root bound: all roots lie in |x| <= 1 + max|c_i/c_m|.
  double cauchy_bound() const {
    if (coef_.size() == 1) return 1.0;
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < coef_.size(); ++i)
      m = std::max(m, std::abs(coef_[i]));
    return 1.0 + m / std::abs(coef_.back());
  }

  // Zero out coefficients below rel_eps of the largest one; real/imaginary
  // parts are snapped independently. Keeps deflation roundoff from seeding
  // spurious low-order terms through long arithmetic chains.
  ComplexPolynomial snapped(double rel_eps) const {
    double m = 0.0;
    for (const cplx& c : coef_) m = std::max(m, std::abs(c));
    double cut = rel_eps * m;
    std::vector<cplx> r = coef_;
    for (cplx& c : r) {
      double re = std::abs(c.real()) <= cut ? 0.0 : c.real();
      double im = std::abs(c.imag()) <= cut ? 0.0 : c.imag();
      c = cplx(re, im);
    }
    return ComplexPolynomial(std::move(r));
  }

  bool approx_equal(const ComplexPolynomial& o, double rel_tol) const {
    double scale = 0.0;
    for (const cplx& c : coef_) scale = std::max(scale, std::abs(c));
    for (const cplx& c : o.coef_) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) return true;
    const std::size_t n = std::max(coef_.size(), o.coef_.size());
    for (std::size_t i = 0; i < n; ++i) {
      cplx a = i < coef_.size() ? coef_[i] : cplx(0.0);
      cplx b = i < o.coef_.size() ? o.coef_[i] : cplx(0.0);
      if (std::abs(a - b) > rel_tol * scale) return false;
    }
    return true;
  }

 private:
  void trim() {
    while (coef_.size() > 1 && std::abs(coef_.back()) == 0.0)
      coef_.pop_back();
  }
  std::vector<cplx> coef_;
};

inline ComplexPolynomial operator*(cplx s, const ComplexPolynomial& p) {
  return p * s;
}

struct TurningPoint {
  cplx location;
  int multiplicity = 1;
};

struct RootFindOptions {
  int aberth_iterations = 400;
  int polish_iterations = 60;
  double tol = 1e-10;                  // accept when |p| <= tol * eval_scale
  double cluster_radius_factor = 1e-6; // times the Cauchy bound
};

namespace detail {

// Aberth-Ehrlich simultaneous iteration. Multiple roots converge linearly
// into a tight cluster which the caller collapses afterwards.
inline std::vector<cplx> aberth_roots(const ComplexPolynomial& p,
                                      const RootFindOptions& opt) {
  const std::size_t m = p.degree();
  const ComplexPolynomial dp = p.derivative();
  const double R = p.cauchy_bound();
  std::vector<cplx> z(m);
  for (std::size_t k = 0; k < m; ++k) {
    double ang = 2.0 * M_PI * double(k) / double(m) + 0.4;
    z[k] = 0.8 * R * cplx(std::cos(ang), std::sin(ang));
  }
  std::vector<bool> done(m, false);
  for (int it = 0; it < opt.aberth_iterations; ++it) {
    bool all = true;
    for (std::size_t k = 0; k < m; ++k) {
      if (done[k]) continue;
      cplx pv = p(z[k]);
      if (std::abs(pv) <= 1e-14 * p.eval_scale(z[k])) {
        done[k] = true;
        continue;
      }
      all = false;
      cplx dv = dp(z[k]);
      if (dv == cplx(0.0)) {  // nudge off the critical point
        z[k] += 1e-8 * R * cplx(1.0, 1.0);
        continue;
      }
      cplx w = pv / dv;
      cplx s(0.0);
      for (std::size_t j = 0; j < m; ++j)
        if (j != k) s += cplx(1.0) / (z[k] - z[j]);
      cplx denom = cplx(1.0) - w * s;
      cplx step = (std::abs(denom) > 1e-300) ? w / denom : w;
      // keep iterates from running away
      if (std::abs(step) > R) step *= R / std::abs(step);
      z[k] -= step;
    }
    if (all) break;
  }
  return z;
}

}  // namespace detail

// All m roots of Q with multiplicities. Clusters of radius
// cluster_radius_factor * cauchy_bound collapse to their centroid; the
// centroid of an r-fold cluster is refined with the modified Newton step
// r * p / p'.
inline std::vector<TurningPoint> find_turning_points(
    const ComplexPolynomial& Q, const RootFindOptions& opt = {}) {
  if (Q.degree() < 1)
    throw config_error(
        "find_turning_points: Q must have degree >= 1 (a constant Q has no "
        "turning point and no Stokes geometry)");
  std::vector<cplx> roots = detail::aberth_roots(Q, opt);
  // Plain Newton with a step-size stop. |Q| alone saturates far from a
  // multiple root (the function is flat there), so each raw root is walked
  // in until the step stalls; exact multiple roots then land well inside
  // the clustering radius.
  {
    const ComplexPolynomial dQ = Q.derivative();
    for (cplx& z : roots) {
      for (int it = 0; it < 80; ++it) {
        cplx dv = dQ(z);
        if (std::abs(dv) < 1e-300) break;
        cplx step = Q(z) / dv;
        z -= step;
        if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(z))) break;
      }
    }
  }
  const double cluster_r = opt.cluster_radius_factor * Q.cauchy_bound();

  std::vector<TurningPoint> out;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> group{i};
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(roots[j] - roots[i]) < cluster_r) {
        group.push_back(j);
        used[j] = true;
      }
    }
    used[i] = true;
    cplx centroid(0.0);
    for (std::size_t g : group) centroid += roots[g];
    centroid /= double(group.size());
    out.push_back({centroid, int(group.size())});
  }

  // modified Newton polish
  const ComplexPolynomial dQ = Q.derivative();
  bool converged_all = true;
  for (TurningPoint& tp : out) {
    for (int it = 0; it < opt.polish_iterations; ++it) {
      cplx pv = Q(tp.location);
      if (std::abs(pv) <= opt.tol * Q.eval_scale(tp.location)) break;
      cplx dv = dQ(tp.location);
      if (std::abs(dv) < 1e-300) break;
      tp.location -= double(tp.multiplicity) * pv / dv;
    }
    if (std::abs(Q(tp.location)) > opt.tol * Q.eval_scale(tp.location))
      converged_all = false;
  }
  if (!converged_all) {
    std::vector<cplx> partial;
    for (const TurningPoint& tp : out) partial.push_back(tp.location);
    throw root_convergence_error(
        "find_turning_points: root refinement did not reach the requested "
        "tolerance within the iteration budget",
        std::move(partial));
  }
  // deterministic ordering: by real part, then imaginary
  std::sort(out.begin(), out.end(), [](const TurningPoint& a,
                                       const TurningPoint& b) {
    if (a.location.real() != b.location.real())
      return a.location.real() < b.location.real();
    return a.location.imag() < b.location.imag();
  });
  return out;
}

// Characteristic length of the turning-point configuration; the default
// clearance and probe windows are expressed in this unit.
inline double geometry_scale(const std::vector<TurningPoint>& tps) {
  double s = 1.0;
  for (const TurningPoint& a : tps) s = std::max(s, std::abs(a.location));
  for (std::size_t i = 0; i < tps.size(); ++i)
    for (std::size_t j = i + 1; j < tps.size(); ++j)
      s = std::max(s, std::abs(tps[i].location - tps[j].location));
  return s;
}

}  // namespace wkb
