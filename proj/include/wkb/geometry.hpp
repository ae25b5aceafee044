#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "wkb/branch.hpp"
#include "wkb/flow.hpp"

namespace wkb {

// ---------------------------------------------------------------------------
// Stokes curves: level lines Im S_a = 0 traced by the real-time flow, which
// preserves Im S_a exactly.
// ---------------------------------------------------------------------------

struct StokesCurve {
  int source = 0;            // index into Problem::turning_points
  int direction_index = 0;   // 0 .. multiplicity+1
  std::vector<cplx> polyline;
  bool ends_at_infinity = true;
  int terminus = -1;         // turning-point index when not unbounded
};

struct CurveTraceParams {
  double R_max = 12.0;
  double step = 0.05;          // target spatial spacing of the polyline
  double seed_distance = 0.0;  // 0: auto
  double capture_factor = 2.0; // times clearance: terminus capture radius
  long max_points = 60000;
};

inline std::vector<StokesCurve> trace_stokes_curves(const Problem& prob,
                                                    int tp_index,
                                                    CurveTraceParams par = {}) {
  const TurningPoint& a = prob.turning_points[std::size_t(tp_index)];
  const int r = a.multiplicity;

  // local model Q(x) ~ c (x - a)^r: the r+2 directions solve
  // arg[c (x-a)^{r+2}] = 0
  ComplexPolynomial shifted = prob.Q.shifted(a.location);
  cplx c_loc = shifted.coefficients()[std::size_t(r)];
  double arg_c = std::arg(c_loc);

  double rho = par.seed_distance;
  if (rho <= 0.0) {
    rho = 0.04 * prob.scale;
    for (std::size_t j = 0; j < prob.turning_points.size(); ++j) {
      if (int(j) == tp_index) continue;
      rho = std::min(rho, 0.25 * std::abs(prob.turning_points[j].location -
                                          a.location));
    }
    rho = std::max(rho, 4.0 * prob.clearance);
  }

  std::vector<StokesCurve> curves;
  for (int k = 0; k < r + 2; ++k) {
    double theta = (2.0 * M_PI * k - arg_c) / double(r + 2);
    cplx p = a.location + std::polar(rho, theta);

    // Newton-correct the seed transversally onto Im S_a = 0
    ActionValue av = action(prob, a, p, +1);
    for (int it = 0; it < 4; ++it) {
      double im = av.value.imag();
      if (std::abs(im) < 1e-13 * std::max(1.0, std::abs(av.value))) break;
      p -= cplx(0.0, 1.0) * im / av.sqrt_at_endpoint;
      av = action(prob, a, p, +1);
    }

    StokesCurve sc;
    sc.source = tp_index;
    sc.direction_index = k;
    sc.polyline.push_back(a.location);
    sc.polyline.push_back(p);

    double flow_dir = av.value.real() >= 0.0 ? +1.0 : -1.0;
    FlowOptions fopts;
    fopts.clearance = 0.45 * prob.clearance;
    FlowIntegrator integ(prob, fopts);
    FlowState st{p, av.sqrt_at_endpoint, cplx(0.0)};
    const double capture = par.capture_factor * prob.clearance;

    for (long n = 0; n < par.max_points; ++n) {
      if (std::abs(st.y) > par.R_max) break;
      bool captured = false;
      for (std::size_t j = 0; j < prob.turning_points.size(); ++j) {
        if (int(j) == tp_index && n < 4) continue;
        if (std::abs(st.y - prob.turning_points[j].location) < capture) {
          sc.ends_at_infinity = false;
          sc.terminus = int(j);
          sc.polyline.push_back(prob.turning_points[j].location);
          captured = true;
          break;
        }
      }
      if (captured) break;
      double dt = par.step * std::abs(st.sqrt_q);
      try {
        st = integ.advance(st, cplx(flow_dir * dt, 0.0));
      } catch (const numerical_error&) {
        // the orbit ran against a clearance disc faster than the capture
        // test fired; attribute the terminus to the nearest turning point
        const TurningPoint* near = prob.nearest_turning_point(st.y);
        sc.ends_at_infinity = false;
        sc.terminus = int(near - prob.turning_points.data());
        sc.polyline.push_back(near->location);
        break;
      }
      sc.polyline.push_back(st.y);
    }
    if (sc.ends_at_infinity && std::abs(sc.polyline.back()) < par.R_max)
      throw geometry_error(
          "trace_stokes_curves: curve stalled before reaching R_max");
    curves.push_back(std::move(sc));
  }
  return curves;
}

inline std::vector<StokesCurve> trace_all_stokes_curves(
    const Problem& prob, CurveTraceParams par = {}) {
  std::vector<StokesCurve> all;
  for (std::size_t i = 0; i < prob.turning_points.size(); ++i) {
    auto cs = trace_stokes_curves(prob, int(i), par);
    all.insert(all.end(), cs.begin(), cs.end());
  }
  return all;
}

// ---------------------------------------------------------------------------
// Probe grid and the per-domain action field. The field carries S_a, the
// branch of sqrt(Q) and a continuous log sqrt(Q) on every free cell of a
// connected component, continued cell-to-cell from a seed next to the
// reference turning point.
// ---------------------------------------------------------------------------

struct ProbeGrid {
  cplx origin;  // lower-left cell center
  double dx = 0.0;
  int nx = 0, ny = 0;

  int index(int ix, int iy) const { return iy * nx + ix; }
  cplx center(int ix, int iy) const {
    return origin + cplx(ix * dx, iy * dx);
  }
  bool inside(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < nx && iy < ny;
  }
  std::pair<int, int> locate(cplx p) const {
    return {int(std::lround((p.real() - origin.real()) / dx)),
            int(std::lround((p.imag() - origin.imag()) / dx))};
  }
};

struct GeometryParams {
  int resolution = 161;
  double window_halfwidth = 0.0;  // 0: auto from the turning points
  cplx window_center = cplx(0.0);
  bool auto_center = true;
  double tube_factor = 1.6;   // times cell diagonal: curve exclusion tube
  CurveTraceParams trace;
};

struct FieldCell {
  cplx action;
  cplx sqrt_q;
  cplx log_sqrt_q;
  bool valid = false;
};

struct ActionQuery {
  cplx action;
  cplx sqrt_q;
  cplx log_sqrt_q;
};

class DomainActionField {
 public:
  DomainActionField() = default;
  DomainActionField(const ProbeGrid& grid, std::vector<FieldCell> cells)
      : grid_(grid), cells_(std::move(cells)) {}

  const ProbeGrid& grid() const { return grid_; }
  bool has_cell(int ix, int iy) const {
    return grid_.inside(ix, iy) &&
           cells_[std::size_t(grid_.index(ix, iy))].valid;
  }
  const FieldCell& cell(int ix, int iy) const {
    return cells_[std::size_t(grid_.index(ix, iy))];
  }

  // Continue the field from the nearest valid cell to x. Works slightly
  // beyond the component (the action is analytic across Stokes curves);
  // throws when no valid cell is within reach.
  ActionQuery query(const Problem& prob, cplx x, int search = 3) const {
    auto [ix, iy] = grid_.locate(x);
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int dy = -search; dy <= search; ++dy)
      for (int dxi = -search; dxi <= search; ++dxi) {
        int jx = ix + dxi, jy = iy + dy;
        if (!has_cell(jx, jy)) continue;
        double d = std::abs(grid_.center(jx, jy) - x);
        if (d < best) {
          best = d;
          bi = jx;
          bj = jy;
        }
      }
    if (bi < 0)
      throw geometry_error(
          "DomainActionField::query: point is not near this Stokes domain");
    const FieldCell& fc = cell(bi, bj);
    auto [dS, sq] = segment_action(prob, grid_.center(bi, bj), x, fc.sqrt_q);
    ActionQuery q;
    q.action = fc.action + dS;
    q.sqrt_q = sq;
    q.log_sqrt_q = fc.log_sqrt_q + std::log(sq / fc.sqrt_q);
    return q;
  }

 private:
  ProbeGrid grid_;
  std::vector<FieldCell> cells_;
};

// ---------------------------------------------------------------------------
// Stokes domains.
// ---------------------------------------------------------------------------

enum class DomainKind { type1, type2 };

struct RegionParams {
  double delta = 0.05;
  double epsilon = 0.0;  // 0: use Problem::clearance
};

struct StokesDomain {
  int id = 0;
  DomainKind kind = DomainKind::type1;
  int reference = 0;            // turning point a
  int secondary = -1;           // turning point b (type 2)
  double mu = std::numeric_limits<double>::infinity();
  double mu_sample = 0.0;       // sup of Im S_a over probes
  std::vector<int> boundary_curves;              // indices into the curve set
  std::vector<std::vector<int>> boundary_groups; // jointed curve groups
  DomainActionField field;
  std::vector<std::pair<int, int>> cells;        // probe cells (ix, iy)
  cplx anchor;                                   // interior reference point
  cplx anchor_action;
  cplx anchor_sqrt_q;

  bool contains_cell_near(cplx x) const {
    auto [ix, iy] = field.grid().locate(x);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (field.has_cell(ix + dx, iy + dy)) return true;
    return false;
  }
};

namespace detail {

inline void stamp_tube(std::vector<char>& blocked, const ProbeGrid& g,
                       const std::vector<cplx>& polyline, double tube) {
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    cplx p0 = polyline[i], p1 = polyline[i + 1];
    double lo_x = std::min(p0.real(), p1.real()) - tube;
    double hi_x = std::max(p0.real(), p1.real()) + tube;
    double lo_y = std::min(p0.imag(), p1.imag()) - tube;
    double hi_y = std::max(p0.imag(), p1.imag()) + tube;
    int ix0 = std::max(0, int(std::floor((lo_x - g.origin.real()) / g.dx)));
    int ix1 = std::min(g.nx - 1,
                       int(std::ceil((hi_x - g.origin.real()) / g.dx)));
    int iy0 = std::max(0, int(std::floor((lo_y - g.origin.imag()) / g.dx)));
    int iy1 = std::min(g.ny - 1,
                       int(std::ceil((hi_y - g.origin.imag()) / g.dx)));
    cplx d = p1 - p0;
    double len2 = std::norm(d);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) {
        cplx c = g.center(ix, iy);
        double t = len2 > 0.0
                       ? std::clamp(((c - p0) * std::conj(d)).real() / len2,
                                    0.0, 1.0)
                       : 0.0;
        if (std::abs(c - (p0 + t * d)) <= tube)
          blocked[std::size_t(g.index(ix, iy))] = 1;
      }
  }
}

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(std::size_t(n)) {
    std::iota(p.begin(), p.end(), 0);
  }
  int find(int a) { return p[std::size_t(a)] == a ? a : p[std::size_t(a)] = find(p[std::size_t(a)]); }
  void unite(int a, int b) { p[std::size_t(find(a))] = find(b); }
};

}  // namespace detail

// Signed action of the reference turning point continued to another turning
// point b through the field: S_a(b) = S_a(b') - S_b(b') for a point b' just
// off b, the second term handled by the endpoint-regularized quadrature.
inline cplx action_at_turning_point(const Problem& prob,
                                    const DomainActionField& field,
                                    int b_index, cplx toward) {
  const TurningPoint& b = prob.turning_points[std::size_t(b_index)];
  cplx dir = toward - b.location;
  dir /= std::abs(dir);
  cplx bp = b.location + dir * std::max(4.0 * prob.clearance,
                                        1.5 * field.grid().dx);
  ActionQuery q = field.query(prob, bp, 5);
  ActionValue local = action(prob, b, bp, +1);
  cplx local_val = local.value;
  if (std::real(local.sqrt_at_endpoint * std::conj(q.sqrt_q)) < 0.0)
    local_val = -local_val;
  return q.action - local_val;
}

inline std::vector<StokesDomain> classify_domains(
    const Problem& prob, const std::vector<StokesCurve>& curves,
    GeometryParams par = {}) {
  // window
  cplx center = par.window_center;
  if (par.auto_center) {
    center = cplx(0.0);
    for (const TurningPoint& tp : prob.turning_points) center += tp.location;
    center /= double(prob.turning_points.size());
  }
  double hw = par.window_halfwidth;
  if (hw <= 0.0) {
    double r = 0.0;
    for (const TurningPoint& tp : prob.turning_points)
      r = std::max(r, std::abs(tp.location - center));
    hw = std::max(2.0, 2.2 * r);
  }
  ProbeGrid grid;
  grid.nx = grid.ny = par.resolution;
  grid.dx = 2.0 * hw / double(par.resolution - 1);
  grid.origin = center - cplx(hw, hw);

  const double tube = par.tube_factor * grid.dx * std::sqrt(2.0);
  std::vector<char> blocked(std::size_t(grid.nx) * grid.ny, 0);
  for (const StokesCurve& sc : curves)
    detail::stamp_tube(blocked, grid, sc.polyline, tube);
  // block turning point neighbourhoods: the branch continuation must not
  // walk through a root of Q
  for (const TurningPoint& tp : prob.turning_points) {
    std::vector<cplx> dot{tp.location, tp.location};
    detail::stamp_tube(blocked, grid, dot,
                       std::max(2.0 * prob.clearance, 1.2 * grid.dx));
  }

  // connected components, 4-neighbour flood fill
  std::vector<int> comp(std::size_t(grid.nx) * grid.ny, -1);
  int n_comp = 0;
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      int id0 = grid.index(ix, iy);
      if (blocked[std::size_t(id0)] || comp[std::size_t(id0)] >= 0) continue;
      std::deque<std::pair<int, int>> bfs{{ix, iy}};
      comp[std::size_t(id0)] = n_comp;
      while (!bfs.empty()) {
        auto [cx, cy] = bfs.front();
        bfs.pop_front();
        const int dx4[4] = {1, -1, 0, 0}, dy4[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int jx = cx + dx4[k], jy = cy + dy4[k];
          if (!grid.inside(jx, jy)) continue;
          int jid = grid.index(jx, jy);
          if (blocked[std::size_t(jid)] || comp[std::size_t(jid)] >= 0)
            continue;
          comp[std::size_t(jid)] = n_comp;
          bfs.emplace_back(jx, jy);
        }
      }
      ++n_comp;
    }

  // curve -> adjacent components, via normal offsets from the polylines
  std::vector<std::vector<int>> curve_adj(curves.size());
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const auto& pl = curves[ci].polyline;
    for (std::size_t i = 1; i + 1 < pl.size(); i += 2) {
      cplx tangent = pl[i + 1] - pl[i - 1];
      double tl = std::abs(tangent);
      if (tl == 0.0) continue;
      cplx nrm = cplx(0.0, 1.0) * tangent / tl;
      for (double side : {1.0, -1.0}) {
        cplx p = pl[i] + side * nrm * (tube + 0.8 * grid.dx);
        auto [ix, iy] = grid.locate(p);
        if (!grid.inside(ix, iy)) continue;
        int cid = comp[std::size_t(grid.index(ix, iy))];
        if (cid >= 0 &&
            std::find(curve_adj[ci].begin(), curve_adj[ci].end(), cid) ==
                curve_adj[ci].end())
          curve_adj[ci].push_back(cid);
      }
    }
  }

  // component sizes; skip slivers
  std::vector<int> comp_size(std::size_t(n_comp), 0);
  for (int v : comp)
    if (v >= 0) ++comp_size[std::size_t(v)];

  std::vector<StokesDomain> domains;
  for (int cid = 0; cid < n_comp; ++cid) {
    if (comp_size[std::size_t(cid)] < 12) continue;

    StokesDomain dom;
    dom.id = int(domains.size());
    for (std::size_t ci = 0; ci < curves.size(); ++ci)
      if (std::find(curve_adj[ci].begin(), curve_adj[ci].end(), cid) !=
          curve_adj[ci].end())
        dom.boundary_curves.push_back(int(ci));
    if (dom.boundary_curves.empty()) continue;  // window-edge sliver

    // reference turning point: the lowest-index source among boundary curves
    dom.reference = curves[std::size_t(dom.boundary_curves.front())].source;
    for (int ci : dom.boundary_curves)
      dom.reference = std::min(dom.reference, curves[std::size_t(ci)].source);

    // jointed curve groups: curves sharing a source/terminus turning point
    {
      int m = int(dom.boundary_curves.size());
      detail::UnionFind uf(m);
      auto tps_of = [&](int ci) {
        std::vector<int> v{curves[std::size_t(ci)].source};
        if (!curves[std::size_t(ci)].ends_at_infinity)
          v.push_back(curves[std::size_t(ci)].terminus);
        return v;
      };
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          auto a = tps_of(dom.boundary_curves[std::size_t(i)]);
          auto b = tps_of(dom.boundary_curves[std::size_t(j)]);
          for (int ta : a)
            for (int tb : b)
              if (ta == tb) uf.unite(i, j);
        }
      std::vector<int> roots;
      for (int i = 0; i < m; ++i) {
        int r = uf.find(i);
        if (std::find(roots.begin(), roots.end(), r) == roots.end())
          roots.push_back(r);
      }
      dom.boundary_groups.assign(roots.size(), {});
      for (int i = 0; i < m; ++i) {
        int r = uf.find(i);
        std::size_t g = std::size_t(
            std::find(roots.begin(), roots.end(), r) - roots.begin());
        dom.boundary_groups[g].push_back(dom.boundary_curves[std::size_t(i)]);
      }
    }
    if (dom.boundary_groups.size() > 2)
      throw geometry_error(
          "classify_domains: a domain bounded by more than two jointed "
          "curve groups is not supported");

    // make sure the reference turning point lies on the group we call C1
    // (any source on the boundary qualifies; keep the chosen one)

    // seed cell: free cell of this component nearest to the reference
    const TurningPoint& a = prob.turning_points[std::size_t(dom.reference)];
    int si = -1, sj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        if (comp[std::size_t(grid.index(ix, iy))] != cid) continue;
        double d = std::abs(grid.center(ix, iy) - a.location);
        if (d < best) {
          best = d;
          si = ix;
          sj = iy;
        }
      }

    // continue the action over the component from the seed
    std::vector<FieldCell> cells(std::size_t(grid.nx) * grid.ny);
    {
      cplx seed_center = grid.center(si, sj);
      ActionValue av = action(prob, a, seed_center, +1);
      FieldCell seed;
      seed.action = av.value;
      seed.sqrt_q = av.sqrt_at_endpoint;
      seed.log_sqrt_q = std::log(av.sqrt_at_endpoint);
      seed.valid = true;
      cells[std::size_t(grid.index(si, sj))] = seed;
      std::deque<std::pair<int, int>> bfs{{si, sj}};
      while (!bfs.empty()) {
        auto [cx, cy] = bfs.front();
        bfs.pop_front();
        const FieldCell& fc = cells[std::size_t(grid.index(cx, cy))];
        const int dx4[4] = {1, -1, 0, 0}, dy4[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int jx = cx + dx4[k], jy = cy + dy4[k];
          if (!grid.inside(jx, jy)) continue;
          int jid = grid.index(jx, jy);
          if (comp[std::size_t(jid)] != cid || cells[std::size_t(jid)].valid)
            continue;
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
    }

    // sign convention: Im S_a > 0 inside
    {
      int pos = 0, neg = 0;
      for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
          const FieldCell& fc = cells[std::size_t(grid.index(ix, iy))];
          if (!fc.valid) continue;
          (fc.action.imag() > 0.0 ? pos : neg)++;
        }
      if (neg > pos) {
        for (FieldCell& fc : cells) {
          if (!fc.valid) continue;
          fc.action = -fc.action;
          fc.sqrt_q = -fc.sqrt_q;
          fc.log_sqrt_q += cplx(0.0, M_PI);
        }
      }
    }

    dom.field = DomainActionField(grid, std::move(cells));
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix)
        if (comp[std::size_t(grid.index(ix, iy))] == cid)
          dom.cells.emplace_back(ix, iy);

    // kind and mu
    if (dom.boundary_groups.size() == 1) {
      dom.kind = DomainKind::type1;
      dom.mu = std::numeric_limits<double>::infinity();
    } else {
      dom.kind = DomainKind::type2;
      // b: a turning point of the group not containing the reference
      int b_idx = -1;
      for (const auto& grp : dom.boundary_groups) {
        bool has_ref = false;
        for (int ci : grp)
          if (curves[std::size_t(ci)].source == dom.reference ||
              (!curves[std::size_t(ci)].ends_at_infinity &&
               curves[std::size_t(ci)].terminus == dom.reference))
            has_ref = true;
        if (!has_ref) {
          b_idx = curves[std::size_t(grp.front())].source;
          break;
        }
      }
      if (b_idx < 0)
        throw geometry_error(
            "classify_domains: could not locate the secondary turning point "
            "of a two-sided domain");
      dom.secondary = b_idx;
      cplx toward = grid.center(si, sj);
      cplx Sb = action_at_turning_point(prob, dom.field, b_idx, toward);
      dom.mu = Sb.imag();
      if (!(dom.mu > 0.0))
        throw geometry_error(
            "classify_domains: two-sided domain with non-positive strip "
            "height");
    }

    // sup of Im S_a over cells plus near-boundary offsets; the field is
    // continued analytically across the exclusion tube, so offsets filter
    // on the image band (0, mu) to stay on this domain's side
    dom.mu_sample = 0.0;
    for (auto [ix, iy] : dom.cells)
      dom.mu_sample =
          std::max(dom.mu_sample, dom.field.cell(ix, iy).action.imag());
    for (int ci : dom.boundary_curves) {
      const auto& pl = curves[std::size_t(ci)].polyline;
      for (std::size_t i = 1; i + 1 < pl.size(); i += 4) {
        cplx tangent = pl[i + 1] - pl[i - 1];
        double tl = std::abs(tangent);
        if (tl == 0.0) continue;
        cplx nrm = cplx(0.0, 1.0) * tangent / tl;
        for (double side : {1.0, -1.0}) {
          cplx p = pl[i] + side * nrm * (0.05 * grid.dx);
          if (prob.distance_to_turning_point(p) < 2.0 * prob.clearance)
            continue;
          try {
            ActionQuery q = dom.field.query(prob, p, 5);
            double im = q.action.imag();
            if (im > 0.0 && im < dom.mu)
              dom.mu_sample = std::max(dom.mu_sample, im);
          } catch (const geometry_error&) {
          }
        }
      }
    }

    // anchor: the free cell farthest from curves/turning points, kept at
    // mid-height for two-sided domains
    {
      double best_score = -1.0;
      for (auto [ix, iy] : dom.cells) {
        cplx c = grid.center(ix, iy);
        double d = prob.distance_to_turning_point(c);
        for (int ci : dom.boundary_curves) {
          const auto& pl = curves[std::size_t(ci)].polyline;
          for (std::size_t i = 0; i < pl.size(); i += 6)
            d = std::min(d, std::abs(c - pl[i]));
        }
        if (dom.kind == DomainKind::type2) {
          double im = dom.field.cell(ix, iy).action.imag();
          d = std::min(d, 2.0 * std::min(im, dom.mu - im));
        }
        if (d > best_score) {
          best_score = d;
          dom.anchor = c;
        }
      }
      const FieldCell& fc = [&]() -> const FieldCell& {
        auto [ix, iy] = grid.locate(dom.anchor);
        return dom.field.cell(ix, iy);
      }();
      dom.anchor_action = fc.action;
      dom.anchor_sqrt_q = fc.sqrt_q;
    }

    domains.push_back(std::move(dom));
  }
  if (domains.empty())
    throw geometry_error(
        "classify_domains: no usable domain found at this probe resolution");
  return domains;
}

// ---------------------------------------------------------------------------
// Region predicates and the conformal round trip.
// ---------------------------------------------------------------------------

struct RegionCheck {
  bool inside_omega_delta = false;
  bool inside_d_epsilon = false;
};

inline RegionCheck in_region(const Problem& prob, const StokesDomain& dom,
                             RegionParams par, cplx x) {
  RegionCheck rc;
  double eps = par.epsilon > 0.0 ? par.epsilon : prob.clearance;
  rc.inside_d_epsilon = prob.distance_to_turning_point(x) > eps;
  if (!dom.contains_cell_near(x)) return rc;
  ActionQuery q = dom.field.query(prob, x);
  double im = q.action.imag();
  rc.inside_omega_delta = im > par.delta && im < dom.mu - par.delta;
  return rc;
}

// |Psi(S_a(x)) - x|: map to the model half-plane/strip and flow back from
// the domain anchor along the straight segment in the action plane.
inline double conformal_roundtrip(const Problem& prob,
                                  const StokesDomain& dom, cplx x,
                                  FlowOptions fopts = {}) {
  ActionQuery q = dom.field.query(prob, x);
  FlowState st{dom.anchor, dom.anchor_sqrt_q, cplx(0.0)};
  FlowState end = advance(prob, st, q.action - dom.anchor_action, fopts);
  return std::abs(end.y - x);
}

}  // namespace wkb
