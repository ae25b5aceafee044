#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include "wkb/complex_poly.hpp"
#include "wkb/errors.hpp"

namespace wkb {

namespace detail {

// long division: a = q*b + r with deg r < deg b
inline std::pair<ComplexPolynomial, ComplexPolynomial> poly_divmod(
    const ComplexPolynomial& a, const ComplexPolynomial& b) {
  if (b.is_zero()) throw numerical_error("poly_divmod: division by zero");
  std::vector<cplx> r = a.coefficients();
  const auto& bc = b.coefficients();
  std::size_t db = b.degree();
  if (a.degree() < db || a.is_zero())
    return {ComplexPolynomial(), ComplexPolynomial(r)};
  std::vector<cplx> q(a.degree() - db + 1, cplx(0.0));
  for (std::size_t k = a.degree() + 1; k-- > db;) {
    cplx f = r[k] / bc[db];
    q[k - db] = f;
    for (std::size_t j = 0; j <= db; ++j) r[k - db + j] -= f * bc[j];
    r[k] = cplx(0.0);
  }
  return {ComplexPolynomial(std::move(q)), ComplexPolynomial(std::move(r))};
}

// Euclidean gcd with a relative zero-tolerance on remainders; remainders are
// rescaled to unit max-coefficient each round so the tolerance stays
// meaningful. Returns a constant polynomial when the pair is coprime at the
// working precision.
inline ComplexPolynomial poly_gcd(ComplexPolynomial a, ComplexPolynomial b,
                                  double rel_tol = 1e-11) {
  auto maxcoef = [](const ComplexPolynomial& p) {
    double m = 0.0;
    for (const cplx& c : p.coefficients()) m = std::max(m, std::abs(c));
    return m;
  };
  auto normalize = [&](ComplexPolynomial p) {
    double m = maxcoef(p);
    return m > 0.0 ? p * cplx(1.0 / m) : p;
  };
  a = normalize(a);
  b = normalize(b);
  if (a.degree() < b.degree()) std::swap(a, b);
  while (!b.is_zero() && b.degree() >= 1) {
    ComplexPolynomial r = detail::poly_divmod(a, b).second;
    if (maxcoef(r) <= rel_tol) r = ComplexPolynomial();
    a = b;
    b = normalize(r.snapped(rel_tol));
  }
  if (!b.is_zero()) return ComplexPolynomial::constant(1.0);  // constant gcd
  return a;
}

}  // namespace detail

// Quotient of complex polynomials kept in reduced form: the approximate
// Euclidean gcd of numerator and denominator is divided out and the
// denominator is normalized monic. When the gcd is constant the pair is
// returned untouched, so reduction is exactly idempotent.
class RationalFunction {
 public:
  RationalFunction() : num_(), den_(ComplexPolynomial::constant(1.0)) {}
  RationalFunction(ComplexPolynomial num, ComplexPolynomial den)
      : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero())
      throw numerical_error("RationalFunction: zero denominator");
    reduce();
  }
  static RationalFunction constant(cplx c) {
    return RationalFunction(ComplexPolynomial::constant(c),
                            ComplexPolynomial::constant(1.0));
  }
  static RationalFunction from_poly(ComplexPolynomial p) {
    return RationalFunction(std::move(p), ComplexPolynomial::constant(1.0));
  }

  const ComplexPolynomial& numerator() const { return num_; }
  const ComplexPolynomial& denominator() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }

  cplx operator()(cplx x) const { return num_(x) / den_(x); }

  RationalFunction operator+(const RationalFunction& o) const {
    return RationalFunction(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
  }
  RationalFunction operator-(const RationalFunction& o) const {
    return RationalFunction(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
  }
  RationalFunction operator*(const RationalFunction& o) const {
    return RationalFunction(num_ * o.num_, den_ * o.den_);
  }
  RationalFunction operator/(const RationalFunction& o) const {
    if (o.is_zero())
      throw numerical_error("RationalFunction: division by zero function");
    return RationalFunction(num_ * o.den_, den_ * o.num_);
  }
  RationalFunction operator*(cplx s) const {
    return RationalFunction(num_ * s, den_);
  }
  RationalFunction operator-() const { return (*this) * cplx(-1.0); }

  // (n/d)' = (n'd - nd')/d^2
  RationalFunction derivative() const {
    return RationalFunction(
        num_.derivative() * den_ - num_ * den_.derivative(), den_ * den_);
  }

  bool approx_equal(const RationalFunction& o, double rel_tol) const {
    // cross-multiplied comparison avoids demanding identical normal forms
    return (num_ * o.den_).approx_equal(o.num_ * den_, rel_tol);
  }

 private:
  void reduce() {
    num_ = num_.snapped(1e-13);
    den_ = den_.snapped(1e-13);
    if (num_.is_zero()) {
      den_ = ComplexPolynomial::constant(1.0);
      return;
    }
    if (den_.degree() >= 1 && num_.degree() >= 1) {
      ComplexPolynomial g = detail::poly_gcd(num_, den_);
      if (g.degree() >= 1) {
        auto maxcoef = [](const ComplexPolynomial& p) {
          double m = 0.0;
          for (const cplx& c : p.coefficients()) m = std::max(m, std::abs(c));
          return m;
        };
        auto [qn, rn] = detail::poly_divmod(num_, g);
        auto [qd, rd] = detail::poly_divmod(den_, g);
        // accept the candidate divisor only when it divides both sides to
        // working precision; otherwise stay unreduced (still a correct
        // value, just a longer representation)
        if (maxcoef(rn) <= 1e-9 * maxcoef(num_) &&
            maxcoef(rd) <= 1e-9 * maxcoef(den_)) {
          num_ = qn.snapped(1e-13);
          den_ = qd.snapped(1e-13);
        }
      }
    }
    cplx lead = den_.leading();
    if (lead != cplx(1.0)) {
      den_ = den_ * (cplx(1.0) / lead);
      num_ = num_ * (cplx(1.0) / lead);
    }
    // force an exactly monic denominator so reduction is idempotent bitwise
    if (den_.degree() == 0) {
      den_ = ComplexPolynomial::constant(1.0);
    } else {
      std::vector<cplx> dc = den_.coefficients();
      dc.back() = cplx(1.0);
      den_ = ComplexPolynomial(std::move(dc));
    }
  }

  ComplexPolynomial num_;
  ComplexPolynomial den_;
};

inline RationalFunction operator*(cplx s, const RationalFunction& r) {
  return r * s;
}

}  // namespace wkb
