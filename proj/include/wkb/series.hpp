#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "wkb/flow.hpp"
#include "wkb/rational.hpp"

namespace wkb {

// Element of the half-power algebra Q(i)(x)[w]/(w^2 - Q), stored as
//     (E(x) + O(x) w) / Q(x)^d
// with polynomial numerators and an integer power of Q below. The Riccati
// recursion closes over this exact form (sums, products, d/dx with
// w' = Q' w / (2Q), division by w), so no approximate cancellation ever
// enters the hierarchy; common Q factors are stripped only when the
// division is exact to working precision.
class HalfPowerElement {
 public:
  HalfPowerElement() : even_(), odd_(), qpow_(0) {}
  HalfPowerElement(ComplexPolynomial even_num, ComplexPolynomial odd_num,
                   int qpow, const ComplexPolynomial& Q)
      : even_(std::move(even_num)), odd_(std::move(odd_num)), qpow_(qpow) {
    normalize(Q);
  }
  static HalfPowerElement from_even(ComplexPolynomial p) {
    return HalfPowerElement(std::move(p), ComplexPolynomial(), 0);
  }
  static HalfPowerElement from_odd(ComplexPolynomial p) {
    return HalfPowerElement(ComplexPolynomial(), std::move(p), 0);
  }

  const ComplexPolynomial& even_numerator() const { return even_; }
  const ComplexPolynomial& odd_numerator() const { return odd_; }
  int q_power() const { return qpow_; }

  RationalFunction even_part(const ComplexPolynomial& Q) const {
    return RationalFunction(even_, q_pow(Q, qpow_));
  }
  RationalFunction odd_part(const ComplexPolynomial& Q) const {
    return RationalFunction(odd_, q_pow(Q, qpow_));
  }
  bool even_is_zero() const { return even_.is_zero(); }
  bool odd_is_zero() const { return odd_.is_zero(); }

  HalfPowerElement add(const HalfPowerElement& o,
                       const ComplexPolynomial& Q) const {
    int d = std::max(qpow_, o.qpow_);
    ComplexPolynomial lift_a = q_pow(Q, d - qpow_);
    ComplexPolynomial lift_b = q_pow(Q, d - o.qpow_);
    return HalfPowerElement(even_ * lift_a + o.even_ * lift_b,
                            odd_ * lift_a + o.odd_ * lift_b, d, Q);
  }
  HalfPowerElement scale(cplx s, const ComplexPolynomial& Q) const {
    return HalfPowerElement(even_ * s, odd_ * s, qpow_, Q);
  }

  // (e1 + o1 w)(e2 + o2 w) = (e1 e2 + o1 o2 Q) + (e1 o2 + e2 o1) w
  HalfPowerElement mul(const HalfPowerElement& o,
                       const ComplexPolynomial& Q) const {
    return HalfPowerElement(even_ * o.even_ + odd_ * o.odd_ * Q,
                            even_ * o.odd_ + o.even_ * odd_,
                            qpow_ + o.qpow_, Q);
  }

  // d/dx of (E + O w)/Q^d with w' = Q' w/(2Q):
  //   even: (E' Q - d E Q')/Q^{d+1}
  //   odd:  (2 O' Q + O Q' - 2 d O Q') / (2 Q^{d+1})
  HalfPowerElement derivative(const ComplexPolynomial& Q,
                              const ComplexPolynomial& dQ) const {
    ComplexPolynomial e =
        even_.derivative() * Q - even_ * dQ * cplx(double(qpow_));
    ComplexPolynomial o =
        odd_.derivative() * Q +
        odd_ * dQ * cplx(0.5 - double(qpow_));
    return HalfPowerElement(std::move(e), std::move(o), qpow_ + 1, Q);
  }

  // division by 2w: (E + O w)/(2w) = (O Q + E w)/(2 Q^{d+1}) * Q^d ... i.e.
  // numerators (O Q / 2, E / 2) one power deeper.
  HalfPowerElement div_2w(const ComplexPolynomial& Q) const {
    return HalfPowerElement(odd_ * Q * cplx(0.5), even_ * cplx(0.5),
                            qpow_ + 1, Q);
  }

  // numeric value with a chosen branch value of sqrt(Q) at x
  cplx eval(cplx x, cplx sqrt_q, const ComplexPolynomial& Q) const {
    cplx qd = std::pow(Q(x), double(qpow_));
    return (even_(x) + odd_(x) * sqrt_q) / qd;
  }

  bool approx_equal(const HalfPowerElement& o, const ComplexPolynomial& Q,
                    double tol) const {
    int d = std::max(qpow_, o.qpow_);
    ComplexPolynomial la = q_pow(Q, d - qpow_), lb = q_pow(Q, d - o.qpow_);
    return (even_ * la).approx_equal(o.even_ * lb, tol) &&
           (odd_ * la).approx_equal(o.odd_ * lb, tol);
  }

 private:
  HalfPowerElement(ComplexPolynomial e, ComplexPolynomial o, int d)
      : even_(std::move(e)), odd_(std::move(o)), qpow_(d) {}

  static ComplexPolynomial q_pow(const ComplexPolynomial& Q, int k) {
    ComplexPolynomial r = ComplexPolynomial::constant(1.0);
    for (int i = 0; i < k; ++i) r = r * Q;
    return r;
  }

  void normalize(const ComplexPolynomial& Q) {
    auto maxcoef = [](const ComplexPolynomial& p) {
      double m = 0.0;
      for (const cplx& c : p.coefficients()) m = std::max(m, std::abs(c));
      return m;
    };
    even_ = even_.snapped(1e-14);
    odd_ = odd_.snapped(1e-14);
    while (qpow_ > 0) {
      auto [qe, re] = detail::poly_divmod(even_, Q);
      if (!even_.is_zero() && maxcoef(re) > 1e-12 * maxcoef(even_)) break;
      auto [qo, ro] = detail::poly_divmod(odd_, Q);
      if (!odd_.is_zero() && maxcoef(ro) > 1e-12 * maxcoef(odd_)) break;
      even_ = even_.is_zero() ? even_ : qe;
      odd_ = odd_.is_zero() ? odd_ : qo;
      --qpow_;
    }
    if (even_.is_zero() && odd_.is_zero()) qpow_ = 0;
  }

  ComplexPolynomial even_;
  ComplexPolynomial odd_;
  int qpow_;
};

// s_0 ... s_N of the Riccati hierarchy for h S' + S^2 = Q:
//   s_0 = sigma w, s_1 = -Q'/(4Q),
//   s_n = -(sum_{i+j=n, i,j>=1} s_i s_j + s_{n-1}') / (2 s_0).
inline std::vector<HalfPowerElement> riccati_coefficients(
    const ComplexPolynomial& Q, int sigma, int N) {
  if (N < 0) throw config_error("riccati_coefficients: N must be >= 0");
  ComplexPolynomial dQ = Q.derivative();
  std::vector<HalfPowerElement> s;
  s.push_back(HalfPowerElement::from_odd(
      ComplexPolynomial::constant(double(sigma))));
  if (N == 0) return s;
  s.push_back(HalfPowerElement(dQ * cplx(-0.25), ComplexPolynomial(), 1, Q));
  for (int n = 2; n <= N; ++n) {
    HalfPowerElement acc = s[n - 1].derivative(Q, dQ);
    for (int i = 1; i <= n - 1; ++i) {
      int j = n - i;
      if (j < 1) continue;
      acc = acc.add(s[i].mul(s[j], Q), Q);
    }
    // divide by 2 s_0 = 2 sigma w
    s.push_back(acc.div_2w(Q).scale(cplx(-double(sigma)), Q));
  }
  return s;
}

// The forcing term C(x) = -(s_1' + s_1^2); equal to
// -(5 Q'^2 - 4 Q'' Q)/(16 Q^2) and independent of the sign choice in s_0.
struct ForcingTerm {
  RationalFunction C;
  RationalFunction C_over_Q;
  RationalFunction C_over_Q_derivative;
};

inline ForcingTerm forcing(const ComplexPolynomial& Qp) {
  ComplexPolynomial d = Qp.derivative();
  ComplexPolynomial dd = d.derivative();
  RationalFunction closed(-(d * d * 5.0 - dd * Qp * 4.0), Qp * Qp * 16.0);

  // cross-check through the recursion route s_1' + s_1^2
  auto s = riccati_coefficients(Qp, +1, 1);
  HalfPowerElement via =
      s[1].derivative(Qp, d).add(s[1].mul(s[1], Qp), Qp).scale(-1.0, Qp);
  if (!via.odd_is_zero() ||
      !RationalFunction(via.even_numerator(), [&] {
         ComplexPolynomial q = ComplexPolynomial::constant(1.0);
         for (int i = 0; i < via.q_power(); ++i) q = q * Qp;
         return q;
       }()).approx_equal(closed, 1e-10))
    throw numerical_error(
        "forcing: the two construction routes disagree beyond roundoff");

  ForcingTerm f;
  f.C = closed;
  f.C_over_Q = closed / RationalFunction::from_poly(Qp);
  f.C_over_Q_derivative = f.C_over_Q.derivative();
  return f;
}

// Envelope Theta(x) = sup over the backward orbit of |C/Q|, estimated from
// the trajectory samples plus the (1+|t|)^{-2} far-field envelope fitted on
// the outer half.
struct ThetaEnvelope {
  cplx x;
  double value = 0.0;
  double t_argmax = 0.0;
  double envelope_constant = 0.0;  // fitted M with |C/Q| <= M/(1+|t|)^2
};

inline ThetaEnvelope theta(const ForcingTerm& f, const FlowTrajectory& traj) {
  ThetaEnvelope th;
  th.x = traj.x0;
  if (traj.samples.empty())
    throw numerical_error("theta: empty trajectory");
  double m_fit = 0.0;
  for (const FlowSample& s : traj.samples) {
    double v = std::abs(f.C_over_Q(s.y));
    if (v > th.value) {
      th.value = v;
      th.t_argmax = s.t;
    }
    double w = 1.0 + std::abs(s.t);
    m_fit = std::max(m_fit, v * w * w);
  }
  th.envelope_constant = m_fit;
  // the sup over the un-sampled tail is below the fitted envelope at t_reach
  double tail = m_fit / ((1.0 + traj.t_reach) * (1.0 + traj.t_reach));
  th.value = std::max(th.value, tail);
  return th;
}

}  // namespace wkb
