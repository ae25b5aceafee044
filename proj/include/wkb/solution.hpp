#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "wkb/geometry.hpp"
#include "wkb/solver.hpp"

namespace wkb {

// ---------------------------------------------------------------------------
// True solutions U_{+-}(x,h) = Q^{-1/4} exp(+- S_a(x)/h + D(x,h)), where
// D is the integral of g along the orbit contour. The grid part of D is a
// plain Hermite quadrature of the per-order node arrays; the algebraic tail
// beyond the grid is evaluated analytically from the leading Watson form,
//     tail = -+ (h/2) J(y_T) - (h^2/4) (C/Q)(y_T),
// with J the outward ray integral of C/sqrt(Q) from the trajectory end.
// Truncating instead would cost O(1/T) accuracy, far above the residual
// budget.
// ---------------------------------------------------------------------------

struct SolveParams {
  double delta = 0.05;        // Omega_delta margin used for membership
  double T_solution = 400.0;  // contour reach for the g-integral
  double eta = 0.02;
  double t_base = 0.1;
  IterationOptions iteration;
  FlowOptions flow;
};

struct SolutionPoint {
  cplx x;
  cplx action;       // S_a(x), domain branch
  cplx sqrt_q;       // branch of sqrt(Q) at x
  cplx log_sqrt_q;   // continuous determination of log sqrt(Q)
  cplx g;            // g_sign(x, h)
  cplx g_integral;   // D(x, h), contour integral of g
  cplx log_u;        // log U_sign(x, h)
  cplx S_over_h;     // logarithmic derivative of U
  double theta = 0.0;
  double tail_bound = 0.0;
  int orders_used = 0;
};

// int_{y0}^{infty} C(y)/sqrt(Q(y)) dy along the outward ray {y0/v^2},
// branch anchored at y0 and continued outward. Panels are processed from
// v = 1 downward and stop once their contribution is negligible.
inline cplx ray_tail_integral(const Problem& prob, const ForcingTerm& f,
                              cplx y0, cplx sqrt_at_y0) {
  cplx J(0.0);
  cplx prev_sqrt = sqrt_at_y0;
  const int n_panels = 24;
  for (int p = 0; p < n_panels; ++p) {
    double v_hi = 1.0 - double(p) / n_panels;
    double v_lo = 1.0 - double(p + 1) / n_panels;
    cplx panel(0.0);
    // 16-point Gauss nodes, evaluated in descending v to carry the branch
    for (int q = 15; q >= 0; --q) {
      int idx = q / 2;
      double xg = detail::kGL16X[std::size_t(idx)];
      if (q % 2 == 0) xg = -xg;
      double v = 0.5 * (v_hi + v_lo) + 0.5 * (v_hi - v_lo) * xg;
      if (v <= 1e-8) continue;
      cplx y = y0 / (v * v);
      cplx s = std::sqrt(prob.Q(y));
      if (std::real(s * std::conj(prev_sqrt)) < 0.0) s = -s;
      prev_sqrt = s;
      cplx integrand = f.C(y) / s * (2.0 * y0 / (v * v * v));
      panel += detail::kGL16W[std::size_t(idx)] * integrand;
    }
    panel *= 0.5 * (v_hi - v_lo);
    J += panel;
    if (std::abs(panel) < 1e-17 * std::abs(J)) break;
  }
  return J;
}

// Plain quadrature of the engine node array over [tau_from, 0] using the
// analytic slopes G' = F - (2/h) G (exact for the cubic interpolant).
inline cplx integrate_engine_nodes(const ConvolutionGrid& grid,
                                   const std::vector<cplx>& G,
                                   const std::vector<cplx>& F, double h,
                                   std::size_t from) {
  cplx total(0.0);
  const double beta = 2.0 / h;
  for (std::size_t k = from; k + 1 < grid.tau.size(); ++k) {
    double D = grid.tau[k + 1] - grid.tau[k];
    cplx g0 = G[k], g1 = G[k + 1];
    cplx d0 = F[k] - beta * g0, d1 = F[k + 1] - beta * g1;
    total += 0.5 * D * (g0 + g1) + D * D * (d0 - d1) / 12.0;
  }
  return total;
}

inline SolutionPoint build_point(const Problem& prob, const ForcingTerm& f,
                                 const DomainActionField& field, int sign,
                                 double h, cplx x, const SolveParams& par) {
  SolutionPoint sp;
  sp.x = x;
  ActionQuery q = field.query(prob, x);
  sp.action = q.action;
  sp.sqrt_q = q.sqrt_q;
  sp.log_sqrt_q = q.log_sqrt_q;

  GridParams gp;
  gp.T_mark = par.T_solution;
  gp.T_total = par.T_solution + 0.5 * h * std::log(1e16) + 4.0 * h;
  gp.eta = par.eta;
  gp.t_base = par.t_base;
  ConvolutionGrid grid =
      make_grid(prob, f, x, q.sqrt_q, sign < 0, gp, par.flow);
  if (!iteration_gate(h, grid.theta, par.iteration.rho))
    throw numerical_error("build_point: h too large for Theta(x)");

  IterationState st = iterate(grid, h, par.iteration);
  sp.g = st.g;
  sp.theta = grid.theta;
  sp.tail_bound = st.tail;
  sp.orders_used = st.N_used;

  cplx D_grid =
      integrate_engine_nodes(grid, st.G_total, st.F_total, h, grid.mark);
  cplx y_end = grid.y[grid.mark];
  cplx c_end = grid.c[grid.mark];
  cplx J = ray_tail_integral(prob, f, y_end, grid.sqrtq[grid.mark]);
  cplx tail = (sign > 0 ? -0.5 * h * J : 0.5 * h * J) -
              0.25 * h * h * c_end;
  sp.g_integral = D_grid + tail;

  sp.log_u = -0.5 * sp.log_sqrt_q +
             double(sign) * sp.action / h + sp.g_integral;
  // S_sign/h = sign sqrt(Q)/h - Q'/(4Q) + sqrt(Q) g
  sp.S_over_h = double(sign) * sp.sqrt_q / h -
                prob.dQ(x) / (4.0 * prob.Q(x)) + sp.sqrt_q * sp.g;
  return sp;
}

class WKBSolution {
 public:
  WKBSolution(const Problem& prob, const ForcingTerm& f,
              const StokesDomain& dom, int sign, double h,
              const std::vector<cplx>& eval_points, SolveParams par = {})
      : prob_(&prob), forcing_(&f), field_(&dom.field), sign_(sign), h_(h),
        par_(par) {
    RegionParams rp;
    rp.delta = par.delta;
    for (cplx x : eval_points) {
      RegionCheck rc = in_region(prob, dom, rp, x);
      if (!rc.inside_omega_delta || !rc.inside_d_epsilon)
        throw config_error(
            "WKBSolution: evaluation point outside Omega_delta");
      points_.push_back(build_point(prob, f, dom.field, sign, h, x, par));
    }
  }

  // extension constructor: membership already vetted by the caller
  WKBSolution(const Problem& prob, const ForcingTerm& f,
              const DomainActionField& field, int sign, double h,
              const std::vector<cplx>& eval_points, SolveParams par)
      : prob_(&prob), forcing_(&f), field_(&field), sign_(sign), h_(h),
        par_(par) {
    for (cplx x : eval_points)
      points_.push_back(build_point(prob, f, field, sign, h, x, par));
  }

  int sign() const { return sign_; }
  double h() const { return h_; }
  const std::vector<SolutionPoint>& points() const { return points_; }
  const SolutionPoint& at(std::size_t i) const { return points_[i]; }
  cplx value(std::size_t i) const { return std::exp(points_[i].log_u); }
  cplx derivative(std::size_t i) const {
    return points_[i].S_over_h * value(i);
  }

 private:
  const Problem* prob_;
  const ForcingTerm* forcing_;
  const DomainActionField* field_;
  int sign_;
  double h_;
  SolveParams par_;
  std::vector<SolutionPoint> points_;
};

// ---------------------------------------------------------------------------
// Residuals of h^2 U'' = Q U, two independent routes.
// ---------------------------------------------------------------------------

struct ResidualReport {
  double finite_difference = 0.0;  // |h^2 U'' - Q U| / (|Q| |U|)
  double riccati = 0.0;            // |h S' + S^2 - Q| / |Q|
  double stencil = 0.0;            // spacing used
};

// The finite-difference second derivative from the 4-point complex stencil
// {x +- d, x +- i d}: the even-order errors through d^4 cancel. Values enter
// as ratios against U(x) so the actions never overflow.
inline double fd_residual_from_logs(double h, cplx Qx, cplx log_u0,
                                    cplx lu_pr, cplx lu_mr, cplx lu_pi,
                                    cplx lu_mi, double d) {
  for (cplx lu : {log_u0, lu_pr, lu_mr, lu_pi, lu_mi})
    if (!std::isfinite(lu.real()) || !std::isfinite(lu.imag()))
      throw numerical_error("residual: non-finite solution value");
  cplx rp = std::exp(lu_pr - log_u0), rm = std::exp(lu_mr - log_u0);
  cplx ip = std::exp(lu_pi - log_u0), im = std::exp(lu_mi - log_u0);
  if (rp == cplx(0.0) || rm == cplx(0.0) || ip == cplx(0.0) ||
      im == cplx(0.0))
    throw numerical_error("residual: vanishing solution value rejected");
  cplx upp_over_u = (rp + rm - ip - im) / (2.0 * d * d);
  return std::abs(h * h * upp_over_u - Qx) / std::abs(Qx);
}

inline ResidualReport residual(const Problem& prob, const ForcingTerm& f,
                               const DomainActionField& field, int sign,
                               double h, cplx x, const SolveParams& par,
                               double stencil = 0.0) {
  if (stencil <= 0.0)
    stencil = 0.018 * h / std::sqrt(std::abs(prob.Q(x)));
  ResidualReport rep;
  rep.stencil = stencil;

  SolutionPoint c = build_point(prob, f, field, sign, h, x, par);
  SolutionPoint pr =
      build_point(prob, f, field, sign, h, x + stencil, par);
  SolutionPoint mr =
      build_point(prob, f, field, sign, h, x - stencil, par);
  SolutionPoint pi =
      build_point(prob, f, field, sign, h, x + cplx(0.0, stencil), par);
  SolutionPoint mi =
      build_point(prob, f, field, sign, h, x - cplx(0.0, stencil), par);

  rep.finite_difference = fd_residual_from_logs(
      h, prob.Q(x), c.log_u, pr.log_u, mr.log_u, pi.log_u, mi.log_u,
      stencil);

  // Riccati route: differentiate S (well scaled) over the same stencil
  cplx S0 = c.S_over_h * h;
  cplx dS_real = (pr.S_over_h - mr.S_over_h) * h / (2.0 * stencil);
  cplx dS_imag = (pi.S_over_h - mi.S_over_h) * h /
                 (2.0 * cplx(0.0, stencil));
  cplx dS = 0.5 * (dS_real + dS_imag);
  rep.riccati = std::abs(h * dS + S0 * S0 - prob.Q(x)) / std::abs(prob.Q(x));
  return rep;
}

// ---------------------------------------------------------------------------
// Wronskian of the pair: W = (S_- - S_+)/h * U_+ U_-. The actions cancel
// inside the log sum, so the product never overflows.
// ---------------------------------------------------------------------------

inline std::vector<cplx> wronskian(const WKBSolution& plus,
                                   const WKBSolution& minus) {
  if (plus.sign() <= 0 || minus.sign() >= 0 ||
      plus.h() != minus.h() ||
      plus.points().size() != minus.points().size())
    throw config_error("wronskian: needs a matched +/- pair");
  std::vector<cplx> w;
  for (std::size_t i = 0; i < plus.points().size(); ++i) {
    const SolutionPoint& p = plus.at(i);
    const SolutionPoint& m = minus.at(i);
    cplx log_prod = p.log_u + m.log_u;
    w.push_back((m.S_over_h - p.S_over_h) * std::exp(log_prod));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Asymptotic expansion of g against the exact Riccati hierarchy.
// ---------------------------------------------------------------------------

struct AsymptoticRow {
  int order = 0;        // n: coefficient a_n of h^n in g
  cplx fitted;
  cplx exact;           // s_{n+1} / sqrt(Q)
  double rel_error = 0.0;
};

struct AsymptoticMatch {
  std::vector<AsymptoticRow> rows;
  std::vector<double> remainder_slopes;  // log-log slope after N terms
};

// least squares fit of K coefficients a_1..a_K of sum a_k h^k
inline std::vector<cplx> fit_h_polynomial(const std::vector<double>& hs,
                                          const std::vector<cplx>& gs,
                                          int K) {
  int n = int(hs.size());
  if (n < K)
    throw config_error("fit_h_polynomial: ladder shorter than the model");
  // normal equations in scaled powers
  double hmax = *std::max_element(hs.begin(), hs.end());
  std::vector<std::vector<cplx>> A(std::size_t(K),
                                   std::vector<cplx>(std::size_t(K), 0.0));
  std::vector<cplx> b(std::size_t(K), 0.0);
  for (int i = 0; i < n; ++i) {
    double hh = hs[std::size_t(i)] / hmax;
    std::vector<double> pows(std::size_t(K));
    double p = hh;
    for (int k = 0; k < K; ++k) {
      pows[std::size_t(k)] = p;
      p *= hh;
    }
    for (int r = 0; r < K; ++r) {
      b[std::size_t(r)] += pows[std::size_t(r)] * gs[std::size_t(i)];
      for (int ccol = 0; ccol < K; ++ccol)
        A[std::size_t(r)][std::size_t(ccol)] +=
            pows[std::size_t(r)] * pows[std::size_t(ccol)];
    }
  }
  // Gaussian elimination with partial pivoting
  std::vector<cplx> sol(std::size_t(K), 0.0);
  for (int col = 0; col < K; ++col) {
    int piv = col;
    for (int r = col + 1; r < K; ++r)
      if (std::abs(A[std::size_t(r)][std::size_t(col)]) >
          std::abs(A[std::size_t(piv)][std::size_t(col)]))
        piv = r;
    std::swap(A[std::size_t(col)], A[std::size_t(piv)]);
    std::swap(b[std::size_t(col)], b[std::size_t(piv)]);
    cplx d = A[std::size_t(col)][std::size_t(col)];
    if (std::abs(d) < 1e-300)
      throw numerical_error("fit_h_polynomial: singular normal equations");
    for (int r = col + 1; r < K; ++r) {
      cplx fac = A[std::size_t(r)][std::size_t(col)] / d;
      for (int cc = col; cc < K; ++cc)
        A[std::size_t(r)][std::size_t(cc)] -=
            fac * A[std::size_t(col)][std::size_t(cc)];
      b[std::size_t(r)] -= fac * b[std::size_t(col)];
    }
  }
  for (int r = K - 1; r >= 0; --r) {
    cplx acc = b[std::size_t(r)];
    for (int cc = r + 1; cc < K; ++cc)
      acc -= A[std::size_t(r)][std::size_t(cc)] * sol[std::size_t(cc)];
    sol[std::size_t(r)] = acc / A[std::size_t(r)][std::size_t(r)];
  }
  // undo the h scaling
  double scale = hmax;
  for (int k = 0; k < K; ++k) {
    sol[std::size_t(k)] /= scale;
    scale *= hmax;
  }
  return sol;
}

inline AsymptoticMatch asymptotic_match(const Problem& prob,
                                        const ForcingTerm& f,
                                        const DomainActionField& field,
                                        cplx x,
                                        const std::vector<double>& h_list,
                                        int N, SolveParams par = {}) {
  if (N < 1 || N > 3)
    throw config_error("asymptotic_match: N must be between 1 and 3");
  if (h_list.size() < 5)
    throw config_error("asymptotic_match: ladder needs at least 5 rungs");

  ActionQuery q = field.query(prob, x);
  double h_max = *std::max_element(h_list.begin(), h_list.end());
  GridParams gp;
  gp.T_total = 0.5 * h_max * std::log(1e16) + 8.0 * h_max + 1.0;
  ConvolutionGrid grid =
      make_grid(prob, f, x, q.sqrt_q, false, gp, par.flow);

  std::vector<cplx> gs;
  for (double h : h_list) {
    if (!iteration_gate(h, grid.theta, par.iteration.rho))
      throw numerical_error("asymptotic_match: ladder exceeds the gate");
    gs.push_back(iterate(grid, h, par.iteration).g);
  }

  // coefficients from an (N+1)-term fit; the extra term absorbs the next
  // order so the reported ones are unbiased at ladder scale
  std::vector<cplx> coef = fit_h_polynomial(h_list, gs, N + 1);

  auto series = riccati_coefficients(prob.Q, +1, N + 1);
  AsymptoticMatch out;
  for (int n = 1; n <= N; ++n) {
    AsymptoticRow row;
    row.order = n;
    row.fitted = coef[std::size_t(n) - 1];
    row.exact = series[std::size_t(n) + 1].eval(x, q.sqrt_q, prob.Q) /
                q.sqrt_q;
    row.rel_error = std::abs(row.fitted - row.exact) /
                    std::max(1e-300, std::abs(row.exact));
    out.rows.push_back(row);
  }

  // remainder slope after subtracting N fitted terms, using a model two
  // orders deeper so the subtracted coefficients are converged
  for (int n = 1; n <= N; ++n) {
    std::vector<cplx> rich = fit_h_polynomial(h_list, gs, std::min(n + 2, 5));
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < h_list.size(); ++i) {
      cplx model(0.0);
      double p = h_list[i];
      for (int k = 1; k <= n; ++k) {
        model += rich[std::size_t(k) - 1] * p;
        p *= h_list[i];
      }
      double rem = std::abs(gs[i] - model);
      if (rem <= 0.0) continue;
      lx.push_back(std::log(h_list[i]));
      ly.push_back(std::log(rem));
    }
    double nn = double(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    out.remainder_slopes.push_back((nn * sxy - sx * sy) /
                                   (nn * sxx - sx * sx));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extension of a solution across an unbounded Stokes curve shared by two
// adjoining domains.
// ---------------------------------------------------------------------------

struct ExtensionRegion {
  int side = +1;        // +1: U_+ extends; -1: U_-
  int reference = 0;    // the shared turning point a
  int curve = -1;       // index of the shared curve in the traced set
  int omega = -1;       // domain id with Im S_a > 0
  int omega_prime = -1; // domain id with Im S_a < 0
  double epsilon = 0.1; // slit reach along Re S_a
  double delta = 0.05;  // slit half-height along Im S_a
  double mu = std::numeric_limits<double>::infinity();
  double mu_prime = -std::numeric_limits<double>::infinity();
  DomainActionField field;  // continued over the union
};

struct ExtensionQuery {
  bool inside = false;
  ActionQuery action;
};

inline ExtensionQuery extension_membership(const Problem& prob,
                                           const ExtensionRegion& reg,
                                           cplx x) {
  ExtensionQuery eq;
  if (prob.distance_to_turning_point(x) <= prob.clearance) return eq;
  try {
    eq.action = reg.field.query(prob, x);
  } catch (const geometry_error&) {
    return eq;
  }
  double re = eq.action.action.real(), im = eq.action.action.imag();
  if (!(im > reg.mu_prime + reg.delta && im < reg.mu - reg.delta)) return eq;
  bool in_slit = reg.side > 0
                     ? (re > -reg.epsilon && std::abs(im) < reg.delta)
                     : (re < reg.epsilon && std::abs(im) < reg.delta);
  eq.inside = !in_slit;
  return eq;
}

// Builds the extension region for the pair of domains adjoining along an
// unbounded curve emanating from a shared turning point. The side is
// dictated by the sign of Re S_a on the curve: negative -> U_+ extends,
// positive -> U_-.
inline ExtensionRegion make_extension_region(
    const Problem& prob, const std::vector<StokesCurve>& curves,
    const std::vector<StokesDomain>& domains, int curve_index,
    double epsilon = 0.1, double delta = 0.05) {
  const StokesCurve& sc = curves[std::size_t(curve_index)];
  if (!sc.ends_at_infinity)
    throw config_error(
        "make_extension_region: the shared curve must end at infinity");

  const StokesDomain* omega = nullptr;
  const StokesDomain* omega_p = nullptr;
  std::vector<const StokesDomain*> adj;
  for (const StokesDomain& d : domains)
    if (std::find(d.boundary_curves.begin(), d.boundary_curves.end(),
                  curve_index) != d.boundary_curves.end())
      adj.push_back(&d);
  if (adj.size() != 2)
    throw geometry_error(
        "make_extension_region: the curve does not separate exactly two "
        "classified domains");

  ExtensionRegion reg;
  reg.curve = curve_index;
  reg.reference = sc.source;
  reg.epsilon = epsilon;
  reg.delta = delta;

  // Continue Omega's field across the curve into the partner component.
  // The union is simply connected, so cell-to-cell continuation is
  // consistent; tube cells near the shared curve are admitted as stepping
  // stones (the action is analytic across a Stokes curve).
  const StokesDomain& base = *adj[0];
  const ProbeGrid& grid = base.field.grid();
  std::vector<FieldCell> cells(std::size_t(grid.nx) * grid.ny);
  std::deque<std::pair<int, int>> bfs;
  for (auto [ix, iy] : base.cells) {
    cells[std::size_t(grid.index(ix, iy))] = base.field.cell(ix, iy);
    bfs.emplace_back(ix, iy);
  }
  auto near_curve = [&](cplx p) {
    double best = std::numeric_limits<double>::infinity();
    const auto& pl = sc.polyline;
    for (std::size_t i = 0; i + 1 < pl.size(); ++i) {
      cplx d = pl[i + 1] - pl[i];
      double len2 = std::norm(d);
      double t = len2 > 0.0
                     ? std::clamp(((p - pl[i]) * std::conj(d)).real() / len2,
                                  0.0, 1.0)
                     : 0.0;
      best = std::min(best, std::abs(p - (pl[i] + t * d)));
    }
    return best <= 3.2 * grid.dx;
  };
  std::vector<char> partner(std::size_t(grid.nx) * grid.ny, 0);
  for (auto [ix, iy] : adj[1]->cells)
    partner[std::size_t(grid.index(ix, iy))] = 1;
  auto admissible = [&](int ix, int iy) {
    cplx c = grid.center(ix, iy);
    if (prob.distance_to_turning_point(c) < 2.5 * prob.clearance)
      return false;
    if (partner[std::size_t(grid.index(ix, iy))]) return true;
    return near_curve(c);
  };
  while (!bfs.empty()) {
    auto [cx, cy] = bfs.front();
    bfs.pop_front();
    const FieldCell fc = cells[std::size_t(grid.index(cx, cy))];
    const int dx4[4] = {1, -1, 0, 0}, dy4[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int jx = cx + dx4[k], jy = cy + dy4[k];
      if (!grid.inside(jx, jy)) continue;
      int jid = grid.index(jx, jy);
      if (cells[std::size_t(jid)].valid) continue;
      if (!admissible(jx, jy)) continue;
      auto [dS, sq] = segment_action(prob, grid.center(cx, cy),
                                     grid.center(jx, jy), fc.sqrt_q);
      FieldCell nc;
      nc.action = fc.action + dS;
      nc.sqrt_q = sq;
      nc.log_sqrt_q = fc.log_sqrt_q + std::log(sq / fc.sqrt_q);
      nc.valid = true;
      cells[std::size_t(jid)] = nc;
      bfs.emplace_back(jx, jy);
    }
  }
  reg.field = DomainActionField(grid, std::move(cells));

  // sign checks on the shared curve and on both sides
  double re_sign = 0.0;
  for (std::size_t i = 4; i < sc.polyline.size(); i += 6) {
    cplx p = sc.polyline[i];
    if (prob.distance_to_turning_point(p) < 4.0 * prob.clearance) continue;
    ActionQuery q = reg.field.query(prob, p, 5);
    if (std::abs(q.action.imag()) >
        1e-6 * std::max(1.0, std::abs(q.action)))
      throw geometry_error(
          "make_extension_region: the shared curve is not a level line of "
          "Im S_a in the continued field");
    if (re_sign == 0.0) re_sign = q.action.real() > 0.0 ? 1.0 : -1.0;
    if (re_sign * q.action.real() <= 0.0)
      throw geometry_error(
          "make_extension_region: Re S_a changes sign along the shared "
          "curve");
  }
  reg.side = re_sign < 0.0 ? +1 : -1;

  // identify which component carries Im > 0 in the continued field
  double im0 = base.field.cell(base.cells.front().first,
                               base.cells.front().second).action.imag();
  const StokesDomain& pos = im0 > 0.0 ? base : *adj[1];
  const StokesDomain& negd = im0 > 0.0 ? *adj[1] : base;
  reg.omega = pos.id;
  reg.omega_prime = negd.id;

  double im_max = -std::numeric_limits<double>::infinity();
  double im_min = std::numeric_limits<double>::infinity();
  for (auto [ix, iy] : pos.cells)
    if (reg.field.has_cell(ix, iy))
      im_max = std::max(im_max, reg.field.cell(ix, iy).action.imag());
  for (auto [ix, iy] : negd.cells)
    if (reg.field.has_cell(ix, iy))
      im_min = std::min(im_min, reg.field.cell(ix, iy).action.imag());
  // one-sided domains have unbounded image; keep the theorem's convention
  reg.mu = pos.kind == DomainKind::type1
               ? std::numeric_limits<double>::infinity()
               : im_max;
  reg.mu_prime = negd.kind == DomainKind::type1
                     ? -std::numeric_limits<double>::infinity()
                     : im_min;
  return reg;
}

// U_side evaluated on the extended region; points must satisfy the region
// membership including the excluded slit.
inline WKBSolution extend_adjoining(const Problem& prob,
                                    const ForcingTerm& f,
                                    const ExtensionRegion& reg, double h,
                                    const std::vector<cplx>& eval_points,
                                    SolveParams par = {}) {
  for (cplx x : eval_points) {
    ExtensionQuery eq = extension_membership(prob, reg, x);
    if (!eq.inside)
      throw config_error(
          "extend_adjoining: evaluation point outside the extended region "
          "(or inside the excluded slit)");
  }
  return WKBSolution(prob, f, reg.field, reg.side, h, eval_points, par);
}

}  // namespace wkb
