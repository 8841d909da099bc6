#include "conelab/green.hpp"

#include <algorithm>
#include <cmath>

#include "conelab/quadrature.hpp"

namespace conelab {

namespace {
using FK = FreeSolutionKind;
cplx cpow(double x, cplx e) { return std::exp(e * std::log(x)); }
cplx phi0(double r, cplx l) { return sf::free_fundamental(FK::phi0, r, l); }
cplx phi1(double r, cplx l) { return sf::free_fundamental(FK::phi1, r, l); }
cplx phi1t(double r, cplx l) { return sf::free_fundamental(FK::phi1_tilde, r, l); }
}  // namespace

CutoffSpec::CutoffSpec(double d0, double d1) : delta0(d0), delta1(d1) {
  if (!(0.0 < d1 && d1 < d0)) throw DomainError("CutoffSpec: need 0 < delta1 < delta0");
}

double CutoffSpec::chi(double x) const {
  const double a = std::abs(x);
  if (a <= delta1) return 1.0;
  if (a >= delta0) return 0.0;
  const double t = (a - delta1) / (delta0 - delta1);
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double CutoffSpec::dchi(double x) const {
  const double a = std::abs(x);
  if (a <= delta1 || a >= delta0) return 0.0;
  const double t = (a - delta1) / (delta0 - delta1);
  const double d = -30.0 * t * t * (1.0 - t) * (1.0 - t) / (delta0 - delta1);
  return x < 0 ? -d : d;
}

cplx ResolventRHS::at(double r) const {
  return quad::barycentric_eval(grid->z(), grid->bary(), values,
                                (r / grid->radius()) * (r / grid->radius()));
}

ResolventRHS resolvent_rhs(const StatePair& state, cplx lam) {
  const GridPtr& g = state.grid();
  require_same_grid(state.first, state.second);
  ResolventRHS out;
  out.grid = g;
  out.lam = SpectralParameter(lam);
  const VecC d1 = g->Dr().cast<cplx>() * state.first.values;
  out.values = (lam + 2.5) * state.first.values + g->nodes().cast<cplx>().cwiseProduct(d1) +
               state.second.values;
  return out;
}

cplx green_denominator(cplx lam) { return (3.0 - 2.0 * lam) * (1.0 + 2.0 * lam) * (1.0 - 2.0 * lam); }

cplx green_free_eval(double rho, double s, cplx lam) {
  const cplx den = green_denominator(lam);
  if (std::abs(den) < 1e-10) throw DegenerateError("green: W(lambda) vanishes");
  const cplx pref = std::pow(s, 4) * cpow(1.0 - s * s, lam - 0.5) / den;
  return rho <= s ? pref * phi0(rho, lam) * phi1(s, lam) : pref * phi1(rho, lam) * phi0(s, lam);
}

// ---------------------------------------------------------------------------

GreenKernel::GreenKernel(cplx lam, const PotentialSpec& pot, const CutoffSpec& cut)
    : GreenKernel(build_u_pair(lam, pot, [&] {
        MatchingOptions o;
        o.delta0 = cut.delta0;
        o.delta1 = cut.delta1;
        return o;
      }()),
                  cut) {}

GreenKernel::GreenKernel(FundamentalPair pair, const CutoffSpec& cut)
    : pair_(std::move(pair)), cut_(cut), bracket_(japanese(pair_.lam.imag())) {
  if (std::abs(pair_.w0) < 1e-12) throw DegenerateError("green: w0 vanishes (eigenvalue)");
}

cplx GreenKernel::pref(double s) const {
  return std::pow(s, 4) * cpow(1.0 - s * s, pair_.lam - 0.5) /
         (green_denominator(pair_.lam) * pair_.w0);
}

cplx GreenKernel::eval(double rho, double s) const {
  return rho <= s ? pref(s) * pair_.u0(rho) * pair_.u1(s) : pref(s) * pair_.u1(rho) * pair_.u0(s);
}

cplx GreenKernel::h1(double r) const {
  if (r >= pair_.rho_1) return pair_.outer->h1(r);
  return pair_.u1(r) / phi1(r, pair_.lam);
}
cplx GreenKernel::h1t(double r) const { return pair_.outer_t->h1(r); }
cplx GreenKernel::h0(double r) const { return pair_.inner->h0(r); }

bool GreenKernel::in_support(int n, double rho, double s) const {
  const double cr = cut_.chi(rho * bracket_), cs = cut_.chi(s * bracket_);
  switch (n) {
    case 1: return rho <= s && cr > 0.0;
    case 2:
    case 3: return rho <= s && cr < 1.0;
    case 4: return rho > s && cs > 0.0;
    case 5:
    case 6: return rho > s && cs < 1.0;
    default: throw DomainError("green: component index must be 1..6");
  }
}

cplx GreenKernel::gamma(int n, double rho, double s) const {
  if (!in_support(n, rho, s)) return 0.0;
  const cplx w0 = pair_.w0;
  switch (n) {
    case 1: return h0(rho) * h1(s) / w0 - 1.0;
    case 2: return pair_.A * h1(rho) * h1(s) / w0 - 1.0;
    case 3: return pair_.B * h1t(rho) * h1(s) / w0 + 1.0;
    case 4: return h1(rho) * h0(s) / w0 - 1.0;
    case 5: return pair_.A * h1(rho) * h1(s) / w0 - 1.0;
    case 6: return pair_.B * h1(rho) * h1t(s) / w0 + 1.0;
  }
  return 0.0;
}

cplx GreenKernel::component(int n, double rho, double s) const {
  if (!in_support(n, rho, s)) return 0.0;
  const cplx lam = pair_.lam;
  const cplx p = std::pow(s, 4) * cpow(1.0 - s * s, lam - 0.5) / green_denominator(lam);
  const double cr = cut_.chi(rho * bracket_), cs = cut_.chi(s * bracket_);
  const cplx g = gamma(n, rho, s);
  switch (n) {
    case 1: return cr * p * phi0(rho, lam) * phi1(s, lam) * g;
    case 2: return (1.0 - cr) * p * phi1(rho, lam) * phi1(s, lam) * g;
    case 3: return (1.0 - cr) * p * phi1t(rho, lam) * phi1(s, lam) * g;
    case 4: return cs * p * phi1(rho, lam) * phi0(s, lam) * g;
    case 5: return (1.0 - cs) * p * phi1(rho, lam) * phi1(s, lam) * g;
    case 6: return (1.0 - cs) * p * phi1(rho, lam) * phi1t(s, lam) * g;
  }
  return 0.0;
}

void GreenKernel::components(double rho, double s, cplx* out) const {
  const cplx lam = pair_.lam;
  const double cr = cut_.chi(rho * bracket_), cs = cut_.chi(s * bracket_);
  for (int n = 0; n < 6; ++n) out[n] = 0.0;
  const cplx p = std::pow(s, 4) * cpow(1.0 - s * s, lam - 0.5) / green_denominator(lam);
  const cplx w0 = pair_.w0;
  if (rho <= s) {
    const cplx h1s = h1(s), f1s = phi1(s, lam);
    if (cr > 0.0) out[0] = cr * p * phi0(rho, lam) * f1s * (h0(rho) * h1s / w0 - 1.0);
    if (cr < 1.0) {
      out[1] = (1.0 - cr) * p * phi1(rho, lam) * f1s * (pair_.A * h1(rho) * h1s / w0 - 1.0);
      out[2] = (1.0 - cr) * p * phi1t(rho, lam) * f1s * (pair_.B * h1t(rho) * h1s / w0 + 1.0);
    }
  } else {
    const cplx h1r = h1(rho), f1r = phi1(rho, lam);
    if (cs > 0.0) out[3] = cs * p * f1r * phi0(s, lam) * (h1r * h0(s) / w0 - 1.0);
    if (cs < 1.0) {
      out[4] = (1.0 - cs) * p * f1r * phi1(s, lam) * (pair_.A * h1r * h1(s) / w0 - 1.0);
      out[5] = (1.0 - cs) * p * f1r * phi1t(s, lam) * (pair_.B * h1r * h1t(s) / w0 + 1.0);
    }
  }
}

cplx green_eval(double rho, double s, cplx lam, const PotentialSpec& pot) {
  return GreenKernel(lam, pot).eval(rho, s);
}

cplx green_component(int n, double rho, double s, cplx lam, const PotentialSpec& pot) {
  return GreenKernel(lam, pot).component(n, rho, s);
}

// ---------------------------------------------------------------------------

namespace {

// One quadrature segment in s with integrand factors on its nodes.
struct Segment {
  bool end = false;
  double lo, hi, ylo, yhi, eta = 0;
  PanelMap map = PanelMap::identity;
  std::vector<double> s;
  VecR jac;  // ds per unit local coordinate (gl only)
};

Segment from_panel(const VolterraSolution::Panel& p) {
  Segment g;
  g.end = p.power_end;
  g.lo = p.lo;
  g.hi = p.hi;
  g.ylo = p.ylo;
  g.yhi = p.yhi;
  g.eta = p.eta;
  g.map = p.map;
  g.s = p.s;
  const int n = static_cast<int>(p.s.size());
  g.jac.resize(n);
  for (int j = 0; j < n; ++j) {
    const double dy = 0.5 * (p.yhi - p.ylo);
    g.jac[j] = p.map == PanelMap::identity ? dy : std::exp(-p.y[j]) * dy;
  }
  return g;
}

double local_u(const Segment& g, double x) {
  const double y = g.map == PanelMap::identity ? x : -std::log1p(-x);
  return std::clamp((2.0 * y - g.ylo - g.yhi) / (g.yhi - g.ylo), -1.0, 1.0);
}

// int_{lo}^{x} of a gl segment whose factor values already include jac.
cplx gl_left(const Segment& g, const VecC& q, double x) {
  const VecR P = quad::gl_partial_weights(static_cast<int>(q.size()), local_u(g, x));
  return (P.cast<cplx>().transpose() * q)(0);
}
cplx gl_total(const VecC& q) {
  const quad::Rule& r = quad::gauss_legendre(static_cast<int>(q.size()));
  return (r.w.cast<cplx>().transpose() * q)(0);
}

}  // namespace

RadialField resolvent_apply(const StatePair& state, const FundamentalPair& fp) {
  const GridPtr& grid = state.grid();
  if (grid->radius() != 1.0) throw DomainError("resolvent_apply: unit-ball grid required");
  const cplx lam = fp.lam;
  const ResolventRHS F = resolvent_rhs(state, lam);
  const cplx den = green_denominator(lam) * fp.w0;
  const int n = fp.inner->h.panels().front().s.size();
  const cplx mu = lam - 0.5;

  // inner panels: u0 = phi0 h0, u1 = a u0 + b u0 J with J = int_s^{rho_m} v0^{-2}
  const auto& ip = fp.inner->h.panels();
  std::vector<Segment> segs;
  std::vector<VecC> q0, q1;  // pref*u0*F*jac, pref*u1*F*jac
  {
    const int P = static_cast<int>(ip.size());
    std::vector<VecC> u0(P, VecC(n)), ginv(P, VecC(n));
    for (int pi = 0; pi < P; ++pi)
      for (int j = 0; j < n; ++j) {
        const double s = ip[pi].s[j];
        u0[pi][j] = phi0(s, lam) * ip[pi].h[j];
        const cplx v = sf::free_fundamental(FK::psi0, s, lam) * ip[pi].h[j];
        ginv[pi][j] = 1.0 / (v * v);
      }
    // backward cumulative J from rho_m
    std::vector<VecC> J(P, VecC(n));
    const MatR& S = quad::gl_cumulative(n);
    const quad::Rule& gl = quad::gauss_legendre(n);
    cplx above = 0.0;
    for (int pi = P - 1; pi >= 1; --pi) {
      const double half = 0.5 * (ip[pi].hi - ip[pi].lo);
      for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        for (int j = 0; j < n; ++j) acc += (gl.w[j] - S(i, j)) * ginv[pi][j];
        J[pi][i] = above + half * acc;
      }
      cplx tot = 0.0;
      for (int j = 0; j < n; ++j) tot += gl.w[j] * ginv[pi][j];
      above += half * tot;
    }
    // first panel: v0 ~ c s^2 to relative O(s^2), so J is elementary there
    const double h0 = ip[0].hi;
    if (P > 1 && h0 < 1e-6 * fp.rho_m) {
      const cplx v = fp.inner->v0(h0);
      for (int i = 0; i < n; ++i) {
        const double s = ip[0].s[i];
        J[0][i] = above + std::pow(h0, 4) / (3.0 * v * v) * (std::pow(s, -3) - std::pow(h0, -3));
      }
    } else {
      for (int i = 0; i < n; ++i) J[0][i] = fp.v0_inv_sq_integral(ip[0].s[i]);
    }
    for (int pi = 0; pi < P; ++pi) {
      Segment g = from_panel(ip[pi]);
      VecC a0(n), a1(n);
      for (int j = 0; j < n; ++j) {
        const double s = g.s[j];
        const cplx w = std::pow(s, 4) * cpow(1.0 - s * s, mu) * F.at(s) * g.jac[j];
        const cplx u1 = fp.a * u0[pi][j] + fp.b * u0[pi][j] * J[pi][j];
        a0[j] = w * u0[pi][j];
        a1[j] = w * u1;
      }
      segs.push_back(std::move(g));
      q0.push_back(std::move(a0));
      q1.push_back(std::move(a1));
    }
  }
  // outer panels above rho_m; end panel keeps (1-s)^mu out of the factors
  const auto& op = fp.outer->h.panels();
  const auto& ot = fp.outer_t->h.panels();
  const bool aligned = op.size() == ot.size();
  VecC endA, endB, end1;
  for (size_t pi = 0; pi < op.size(); ++pi) {
    if (op[pi].hi <= fp.rho_m * (1.0 + 1e-14)) continue;
    Segment g = from_panel(op[pi]);
    const bool same = aligned && ot[pi].lo == op[pi].lo && ot[pi].hi == op[pi].hi;
    VecC a0(n), a1(n);
    for (int j = 0; j < n; ++j) {
      const double s = g.s[j];
      const cplx h1 = op[pi].h[j];
      const cplx h1t = same ? ot[pi].h[j] : fp.outer_t->h1(s);
      const cplx u1 = phi1(s, lam) * h1;
      const cplx Fs = F.at(s);
      if (g.end) {
        // pref = (1-s)^mu (1+s)^mu s^4;  pref * u1~ is smooth
        const cplx smooth = std::pow(s, 4) * cpow(1.0 + s, mu) * Fs;
        const cplx ut_smooth = (2.0 + s * (1.0 - 2.0 * lam)) / std::pow(s, 3) * h1t;
        a1[j] = smooth * u1;
        a0[j] = smooth * ut_smooth;  // B part, weight t^0
      } else {
        const cplx w = std::pow(s, 4) * cpow(1.0 - s * s, mu) * Fs * g.jac[j];
        const cplx u1t = phi1t(s, lam) * h1t;
        a0[j] = w * (fp.A * u1 + fp.B * u1t);
        a1[j] = w * u1;
      }
    }
    if (g.end) {
      end1 = a1;
      endA = fp.A * a1;
      endB = fp.B * a0;
    }
    segs.push_back(std::move(g));
    q0.push_back(std::move(a0));
    q1.push_back(std::move(a1));
  }
  const int S_ = static_cast<int>(segs.size());
  const Segment& es = segs.back();
  if (!es.end) throw DomainError("resolvent_apply: missing end panel");
  const quad::PowerEndRule rule_mu = quad::power_end_rule(n, es.eta, mu);
  const quad::PowerEndRule rule_0 = quad::power_end_rule(n, es.eta, 0.0);
  // totals
  std::vector<cplx> t0(S_), t1(S_);
  for (int k = 0; k < S_; ++k) {
    if (segs[k].end) {
      t0[k] = (rule_mu.total.transpose() * endA)(0) + (rule_0.total.transpose() * endB)(0);
      t1[k] = (rule_mu.total.transpose() * end1)(0);
    } else {
      t0[k] = gl_total(q0[k]);
      t1[k] = gl_total(q1[k]);
    }
  }
  std::vector<cplx> below(S_ + 1, 0.0), above(S_ + 1, 0.0);
  for (int k = 0; k < S_; ++k) below[k + 1] = below[k] + t0[k];
  for (int k = S_ - 1; k >= 0; --k) above[k] = above[k + 1] + t1[k];

  VecC out(grid->size());
  for (int i = 0; i < grid->size(); ++i) {
    const double r = grid->nodes()[i];
    int k = 0;
    while (k < S_ - 1 && segs[k].hi < r) ++k;
    cplx I0, I1;
    const Segment& g = segs[k];
    if (g.end) {
      const double t = std::clamp(1.0 - r, 0.0, g.eta);
      const VecC rm = quad::power_end_row(n, g.eta, mu, t);
      const VecC r0 = quad::power_end_row(n, g.eta, 0.0, t);
      const cplx right0 = (rm.transpose() * endA)(0) + (r0.transpose() * endB)(0);
      I0 = below[k] + t0[k] - right0;
      I1 = (rm.transpose() * end1)(0);
    } else {
      const cplx left0 = gl_left(g, q0[k], r), left1 = gl_left(g, q1[k], r);
      I0 = below[k] + left0;
      I1 = above[k + 1] + t1[k] - left1;
    }
    out[i] = (fp.u1(r) * I0 + fp.u0(r) * I1) / den;
  }
  return RadialField(grid, out);
}

RadialField resolvent_apply(const StatePair& state, cplx lam, const PotentialSpec& pot,
                            const ResolventOptions& opt) {
  for (cplx e : opt.eigenvalues)
    if (std::abs(lam - e) < opt.spectrum_guard)
      throw DomainError("resolvent_apply: lambda too close to an eigenvalue");
  FundamentalPair fp = build_u_pair(lam, pot, opt.matching);
  if (std::abs(fp.w0) < opt.min_w0) throw DegenerateError("resolvent_apply: w0 too small");
  return resolvent_apply(state, fp);
}

// ---------------------------------------------------------------------------

MatC bvp_operator(const RadialGrid& g, cplx lam, const PotentialSpec& pot) {
  if (g.radius() != 1.0) throw DomainError("bvp: unit-ball grid required");
  const int n = g.size();
  const MatR& D = g.Dz();
  const MatR D2 = D * D;
  const VecR& z = g.z();
  MatC A(n, n);
  const cplx K0 = (lam + 2.5) * (lam + 1.5);
  for (int i = 0; i < n; ++i) {
    const double zi = z[i];
    const cplx c1 = -10.0 + (4.0 * lam + 12.0) * zi;
    for (int j = 0; j < n; ++j) A(i, j) = -4.0 * zi * (1.0 - zi) * D2(i, j) + c1 * D(i, j);
    A(i, i) += K0 + pot(g.nodes()[i]);
  }
  return A;
}

BvpResult bvp_solve_direct(const StatePair& state, cplx lam, const PotentialSpec& pot) {
  const GridPtr& g = state.grid();
  const MatC A = bvp_operator(*g, lam, pot);
  const ResolventRHS F = resolvent_rhs(state, lam);
  Eigen::PartialPivLU<MatC> lu(A);
  BvpResult r;
  r.rcond = lu.rcond();
  if (!(r.rcond > 1e-15)) throw ConvergenceError("bvp_solve_direct: ill-conditioned system");
  r.u = RadialField(g, lu.solve(F.values));
  return r;
}

}  // namespace conelab
