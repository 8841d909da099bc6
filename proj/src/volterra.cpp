#include "conelab/volterra.hpp"

#include <algorithm>
#include <cmath>

#include "conelab/quadrature.hpp"

namespace conelab {

PotentialSpec PotentialSpec::none() {
  PotentialSpec p;
  p.zero = true;
  return p;
}

PotentialSpec PotentialSpec::constant_value(double v) {
  PotentialSpec p;
  p.constant = true;
  p.value = v;
  p.zero = (v == 0.0);
  return p;
}

PotentialSpec PotentialSpec::from_function(std::function<double(double)> f) {
  PotentialSpec p;
  p.V = std::move(f);
  return p;
}

double PotentialSpec::a1(double rho) const {
  if (zero) return 0.0;
  if (constant) return -value * (1.0 - rho);
  return -quad::integrate_real(V, rho, 1.0, 1e-15, 1e-13);
}

// ---------------------------------------------------------------------------

namespace {

double map_s(PanelMap m, double y) { return m == PanelMap::identity ? y : -std::expm1(-y); }
double map_jac(PanelMap m, double y) { return m == PanelMap::identity ? 1.0 : std::exp(-y); }
double map_inv(PanelMap m, double s) { return m == PanelMap::identity ? s : -std::log1p(-s); }

cplx cpow(double x, cplx e) { return std::exp(e * std::log(x)); }

}  // namespace

const VolterraSolution::Panel& VolterraSolution::locate(double x) const {
  if (panels_.empty()) throw DomainError("VolterraSolution: empty");
  auto it = std::upper_bound(panels_.begin(), panels_.end(), x,
                             [](double v, const Panel& p) { return v < p.hi; });
  if (it == panels_.end()) return panels_.back();
  return *it;
}

// Integral of b_k h over the part of panel p lying on the integration side of x.
cplx VolterraSolution::within(const Panel& p, int k, double x) const {
  const int n = prob_.nodes;
  const VecC& beta = p.beta[k];
  if (p.power_end) {
    const double t = std::clamp(1.0 - x, 0.0, p.eta);
    const VecC row = quad::power_end_row(n, p.eta, prob_.separable.end_exponents[k], t);
    cplx s = 0.0;
    for (int j = 0; j < n; ++j) s += row[j] * beta[j] * p.h[j];
    return s;
  }
  const double y = map_inv(p.map, std::clamp(x, p.lo, p.hi));
  const double u = std::clamp((2.0 * y - p.ylo - p.yhi) / (p.yhi - p.ylo), -1.0, 1.0);
  const VecR P = quad::gl_partial_weights(n, u);
  const quad::Rule& g = quad::gauss_legendre(n);
  cplx s = 0.0;
  if (prob_.orientation == Orientation::forward) {
    for (int j = 0; j < n; ++j) s += P[j] * beta[j] * p.h[j];
  } else {
    for (int j = 0; j < n; ++j) s += (g.w[j] - P[j]) * beta[j] * p.h[j];
  }
  return s;
}

cplx VolterraSolution::integral(int k, double x) const {
  const Panel& p = locate(x);
  return p.start[k] + within(p, k, x);
}

cplx VolterraSolution::value(double x) const {
  const cplx f = prob_.inhom ? prob_.inhom(x) : cplx(1.0);
  if (general_) {
    // Nystrom interpolation h(x) = f(x) + sum_j w_j(x) K(x, s_j) h_j
    cplx acc = 0.0;
    const int n = prob_.nodes;
    const quad::Rule& g = quad::gauss_legendre(n);
    for (const Panel& p : panels_) {
      const bool fw = prob_.orientation == Orientation::forward;
      const bool full = fw ? (p.hi <= x) : (p.lo >= x);
      const bool none = fw ? (p.lo >= x) : (p.hi <= x);
      if (none) continue;
      VecR wr(n);
      if (full) {
        for (int j = 0; j < n; ++j) wr[j] = g.w[j];
      } else {
        const double y = map_inv(p.map, x);
        const double u = std::clamp((2.0 * y - p.ylo - p.yhi) / (p.yhi - p.ylo), -1.0, 1.0);
        const VecR P = quad::gl_partial_weights(n, u);
        for (int j = 0; j < n; ++j) wr[j] = fw ? P[j] : g.w[j] - P[j];
      }
      for (int j = 0; j < n; ++j) acc += wr[j] * p.beta[0][j] * prob_.general(x, p.s[j]) * p.h[j];
    }
    return f + acc;
  }
  const int r = prob_.separable.rank;
  std::vector<cplx> a(r), da(r);
  prob_.separable.a(x, a.data(), da.data());
  const Panel& p = locate(x);
  cplx acc = f;
  for (int k = 0; k < r; ++k) acc += a[k] * (p.start[k] + within(p, k, x));
  return acc;
}

cplx VolterraSolution::deriv(double x) const {
  if (general_) throw DomainError("VolterraSolution::deriv: separable kernels only");
  const int r = prob_.separable.rank;
  std::vector<cplx> a(r), da(r);
  prob_.separable.a(x, a.data(), da.data());
  const Panel& p = locate(x);
  cplx acc = 0.0;
  for (int k = 0; k < r; ++k) acc += da[k] * (p.start[k] + within(p, k, x));
  if (!prob_.separable.diagonal_vanishes) {
    std::vector<cplx> b(r);
    prob_.separable.b(x, b.data());
    cplx kxx = 0.0;
    for (int k = 0; k < r; ++k) kxx += a[k] * b[k];
    const cplx hx = value(x);
    acc += prob_.orientation == Orientation::forward ? kxx * hx : -kxx * hx;
  }
  return acc;
}

// ---------------------------------------------------------------------------

namespace {

struct Solver {
  const VolterraProblem& prob;
  int n;
  int r;
  std::vector<quad::PowerEndRule> end_rules;
  std::vector<cplx> carry;  // running integrals
  std::vector<VolterraSolution::Panel> out;
  double worst_norm = 0.0;
  double worst_res = 0.0;
  double end_rules_eta = 1.0;

  bool forward() const { return prob.orientation == Orientation::forward; }

  VolterraSolution::Panel make_panel(double ylo, double yhi, PanelMap map, bool end) {
    VolterraSolution::Panel p;
    p.map = map;
    p.power_end = end;
    p.s.resize(n);
    p.y.resize(n);
    p.beta.assign(r, VecC(n));
    std::vector<cplx> b(r);
    if (end) {
      p.lo = ylo;
      p.hi = yhi;
      p.eta = yhi - ylo;
      p.ylo = 0.0;
      p.yhi = p.eta;
      const quad::PowerEndRule& er = end_rules.front();
      for (int j = 0; j < n; ++j) {
        const double t = er.t[j];
        p.y[j] = t;
        p.s[j] = 1.0 - t;
        prob.separable.b(p.s[j], b.data());
        for (int k = 0; k < r; ++k)
          p.beta[k][j] = b[k] * cpow(t, -prob.separable.end_exponents[k]);
      }
      return p;
    }
    p.ylo = ylo;
    p.yhi = yhi;
    p.lo = map_s(map, ylo);
    p.hi = map_s(map, yhi);
    const quad::Rule& g = quad::gauss_legendre(n);
    const double half = 0.5 * (yhi - ylo), mid = 0.5 * (yhi + ylo);
    for (int j = 0; j < n; ++j) {
      p.y[j] = mid + half * g.x[j];
      p.s[j] = map_s(map, p.y[j]);
      const double jac = map_jac(map, p.y[j]) * half;
      prob.separable.b(p.s[j], b.data());
      for (int k = 0; k < r; ++k) p.beta[k][j] = b[k] * jac;
    }
    return p;
  }

  // Within-panel integration matrix towards x_i for rank k.
  MatC local_weights(const VolterraSolution::Panel& p, int k) const {
    if (p.power_end) return end_rules[k].cum;
    const MatR& S = quad::gl_cumulative(n);
    const quad::Rule& g = quad::gauss_legendre(n);
    MatC Wm(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Wm(i, j) = forward() ? S(i, j) : g.w[j] - S(i, j);
    return Wm;
  }
  VecC total_weights(const VolterraSolution::Panel& p, int k) const {
    if (p.power_end) return end_rules[k].total;
    const quad::Rule& g = quad::gauss_legendre(n);
    VecC w(n);
    for (int j = 0; j < n; ++j) w[j] = g.w[j];
    return w;
  }

  void process(double ylo, double yhi, PanelMap map, bool end, int depth) {
    VolterraSolution::Panel p = make_panel(ylo, yhi, map, end);
    std::vector<std::vector<cplx>> a(n, std::vector<cplx>(r)), da(n, std::vector<cplx>(r));
    for (int i = 0; i < n; ++i) prob.separable.a(p.s[i], a[i].data(), da[i].data());
    std::vector<MatC> Wk(r);
    MatC M = MatC::Zero(n, n);
    for (int k = 0; k < r; ++k) {
      Wk[k] = local_weights(p, k);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) += a[i][k] * Wk[k](i, j) * p.beta[k][j];
    }
    const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
    if (!std::isfinite(norm)) throw DomainError("volterra: kernel not integrable on panel");
    if (norm > prob.max_panel_norm && !end && depth < 40) {
      const double ym = 0.5 * (ylo + yhi);
      if (forward()) {
        process(ylo, ym, map, end, depth + 1);
        process(ym, yhi, map, end, depth + 1);
      } else {
        process(ym, yhi, map, end, depth + 1);
        process(ylo, ym, map, end, depth + 1);
      }
      return;
    }
    worst_norm = std::max(worst_norm, norm);
    VecC rhs(n);
    for (int i = 0; i < n; ++i) {
      cplx v = prob.inhom ? prob.inhom(p.s[i]) : cplx(1.0);
      for (int k = 0; k < r; ++k) v += a[i][k] * carry[k];
      rhs[i] = v;
    }
    const MatC A = MatC::Identity(n, n) - M;
    p.h = A.partialPivLu().solve(rhs);
    worst_res = std::max(worst_res, (A * p.h - rhs).cwiseAbs().maxCoeff() /
                                        std::max(1.0, rhs.cwiseAbs().maxCoeff()));
    p.start = carry;
    p.inode.assign(r, VecC(n));
    p.through.assign(r, 0.0);
    for (int k = 0; k < r; ++k) {
      const VecC bh = p.beta[k].cwiseProduct(p.h);
      p.inode[k] = (Wk[k] * bh).array() + carry[k];
      p.through[k] = (total_weights(p, k).transpose() * bh)(0);
      carry[k] += p.through[k];
    }
    out.push_back(std::move(p));
  }
};

}  // namespace

VolterraSolution VolterraSolution::solve_general(const VolterraProblem& prob, const VolterraOptions& opt) {
  VolterraSolution sol;
  const int n = prob.nodes;
  const quad::Rule& g = quad::gauss_legendre(n);
  const MatR& S = quad::gl_cumulative(n);
  const bool fw = prob.orientation == Orientation::forward;
  std::vector<VolterraSolution::Panel> panels;
  for (const PanelSpec& ps : prob.panels) {
    if (ps.power_end) throw DomainError("volterra: power_end panels need a separable kernel");
    VolterraSolution::Panel p;
    p.map = ps.map;
    p.power_end = false;
    p.ylo = ps.lo;
    p.yhi = ps.hi;
    p.lo = map_s(ps.map, ps.lo);
    p.hi = map_s(ps.map, ps.hi);
    const double half = 0.5 * (ps.hi - ps.lo), mid = 0.5 * (ps.hi + ps.lo);
    p.s.resize(n);
    p.y.resize(n);
    p.beta.assign(1, VecC(n));
    for (int j = 0; j < n; ++j) {
      p.y[j] = mid + half * g.x[j];
      p.s[j] = map_s(ps.map, p.y[j]);
      p.beta[0][j] = map_jac(ps.map, p.y[j]) * half;
    }
    panels.push_back(std::move(p));
  }
  const int P = static_cast<int>(panels.size());
  const int N = P * n;
  MatC A = MatC::Zero(N, N);
  VecC f(N);
  for (int pi = 0; pi < P; ++pi) {
    for (int i = 0; i < n; ++i) {
      const double x = panels[pi].s[i];
      f[pi * n + i] = prob.inhom ? prob.inhom(x) : cplx(1.0);
      for (int pj = 0; pj < P; ++pj) {
        const bool own = pj == pi;
        const bool counted = fw ? (pj < pi) : (pj > pi);
        if (!own && !counted) continue;
        for (int j = 0; j < n; ++j) {
          const double w = own ? (fw ? S(i, j) : g.w[j] - S(i, j)) : g.w[j];
          A(pi * n + i, pj * n + j) =
              w * panels[pj].beta[0][j] * prob.general(x, panels[pj].s[j]);
        }
      }
    }
  }
  VecC h = f;
  int it = 0;
  double change = 0.0;
  for (; it < opt.max_iter; ++it) {
    VecC next = f + A * h;
    change = (next - h).cwiseAbs().maxCoeff();
    h = next;
    if (change <= opt.tol * std::max(1.0, h.cwiseAbs().maxCoeff())) break;
  }
  if (it == opt.max_iter)
    throw ConvergenceError("volterra: Picard iteration did not converge (change " +
                           std::to_string(change) + ")");
  for (int pi = 0; pi < P; ++pi) panels[pi].h = h.segment(pi * n, n);
  sol.residual_ = (f + A * h - h).cwiseAbs().maxCoeff();
  sol.iterations_ = it + 1;
  sol.kernel_norm_ = A.cwiseAbs().rowwise().sum().maxCoeff();
  sol.panels_ = std::move(panels);
  return sol;
}

VolterraSolution volterra_solve(const VolterraProblem& prob, const VolterraOptions& opt) {
  if (prob.panels.empty()) throw DomainError("volterra: no panels");
  for (size_t i = 0; i + 1 < prob.panels.size(); ++i) {
    const PanelSpec& a = prob.panels[i];
    const PanelSpec& b = prob.panels[i + 1];
    const double ahi = a.power_end ? a.hi : map_s(a.map, a.hi);
    const double blo = b.power_end ? b.lo : map_s(b.map, b.lo);
    if (std::abs(ahi - blo) > 1e-13 * std::max(1.0, std::abs(ahi)))
      throw DomainError("volterra: panels must be contiguous");
  }
  VolterraSolution sol;
  if (prob.general) {
    sol = VolterraSolution::solve_general(prob, opt);
    sol.general_ = true;
  } else {
    const int r = prob.separable.rank;
    if (r <= 0 || !prob.separable.a || !prob.separable.b)
      throw DomainError("volterra: kernel missing");
    Solver sv{prob, prob.nodes, r, {}, std::vector<cplx>(r, 0.0), {}, 0.0, 0.0, 1.0};
    for (const PanelSpec& ps : prob.panels) {
      if (!ps.power_end) continue;
      if (prob.orientation != Orientation::backward)
        throw DomainError("volterra: power_end panel requires backward orientation");
      if (static_cast<int>(prob.separable.end_exponents.size()) != r)
        throw DomainError("volterra: end exponents missing");
      sv.end_rules_eta = ps.hi - ps.lo;
      for (int k = 0; k < r; ++k)
        sv.end_rules.push_back(
            quad::power_end_rule(prob.nodes, sv.end_rules_eta, prob.separable.end_exponents[k]));
    }
    if (prob.orientation == Orientation::forward) {
      for (const PanelSpec& ps : prob.panels) sv.process(ps.lo, ps.hi, ps.map, ps.power_end, 0);
    } else {
      for (auto it = prob.panels.rbegin(); it != prob.panels.rend(); ++it)
        sv.process(it->lo, it->hi, it->map, it->power_end, 0);
    }
    std::sort(sv.out.begin(), sv.out.end(),
              [](const VolterraSolution::Panel& a, const VolterraSolution::Panel& b) {
                return a.lo < b.lo;
              });
    sol.panels_ = std::move(sv.out);
    sol.max_panel_norm_ = sv.worst_norm;
    sol.residual_ = sv.worst_res;
    sol.iterations_ = 1;
    // int sup_x |K(x, s)| ds over the admissible x (x >= s forward, x <= s backward)
    const int P = static_cast<int>(sol.panels_.size());
    std::vector<std::vector<double>> amax(P, std::vector<double>(r, 0.0));
    std::vector<cplx> a(r), da(r);
    for (int pi = 0; pi < P; ++pi)
      for (double s : sol.panels_[pi].s) {
        prob.separable.a(s, a.data(), da.data());
        for (int k = 0; k < r; ++k) amax[pi][k] = std::max(amax[pi][k], std::abs(a[k]));
      }
    std::vector<double> run(r, 0.0);
    double kn = 0.0;
    const quad::Rule& g = quad::gauss_legendre(prob.nodes);
    auto visit = [&](int pi) {
      const auto& p = sol.panels_[pi];
      for (int k = 0; k < r; ++k) {
        run[k] = std::max(run[k], amax[pi][k]);
        double s = 0.0;
        for (int j = 0; j < prob.nodes; ++j) {
          const double w = p.power_end ? std::abs(sv.end_rules[k].total[j]) : g.w[j];
          s += w * std::abs(p.beta[k][j]);
        }
        kn += run[k] * s;
      }
    };
    if (prob.orientation == Orientation::forward)
      for (int pi = P - 1; pi >= 0; --pi) visit(pi);
    else
      for (int pi = 0; pi < P; ++pi) visit(pi);
    if (!std::isfinite(kn)) throw DomainError("volterra: kernel not integrable");
    sol.kernel_norm_ = kn;
  }
  sol.prob_ = prob;
  sol.lo_ = sol.panels_.front().lo;
  sol.hi_ = sol.panels_.back().hi;
  for (const auto& p : sol.panels_)
    for (int j = 0; j < static_cast<int>(p.s.size()); ++j) {
      sol.s_all_.push_back(p.s[j]);
      sol.h_all_.push_back(p.h[j]);
    }
  if (sol.panels_.front().power_end || sol.panels_.back().power_end) {
    // end panel nodes run downwards in s
    std::vector<size_t> idx(sol.s_all_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return sol.s_all_[a] < sol.s_all_[b]; });
    std::vector<double> s2;
    std::vector<cplx> h2;
    for (size_t i : idx) {
      s2.push_back(sol.s_all_[i]);
      h2.push_back(sol.h_all_[i]);
    }
    sol.s_all_ = std::move(s2);
    sol.h_all_ = std::move(h2);
  }
  return sol;
}

// ---------------------------------------------------------------------------

namespace {

double bracket(cplx lam) { return japanese(lam.imag()); }

using sf::free_fundamental;
using sf::free_fundamental_deriv;
using FK = FreeSolutionKind;

void check_lambda(cplx lam) {
  if (std::abs(sf::wronskian_free(lam)) < 1e-10)
    throw DegenerateError("fundamental system: W(lambda) vanishes");
}

}  // namespace

double matching_radius(cplx lam, const MatchingOptions& o) { return o.delta0 / bracket(lam); }
double outer_radius(cplx lam, const MatchingOptions& o) { return o.delta1 / bracket(lam); }

std::vector<PanelSpec> outer_panels(cplx lam, const MatchingOptions& o) {
  const double r1 = outer_radius(lam, o), rm = matching_radius(lam, o);
  const double eta = std::min(o.end_eta_max, o.end_eta_scale / bracket(lam));
  if (!(rm < 1.0 - eta) || !(r1 < rm)) throw DomainError("outer_panels: bad matching radii");
  const double y1 = -std::log1p(-r1), ym = -std::log1p(-rm), ye = -std::log(eta);
  const double w = std::abs(lam.imag());
  const double dmax = std::min(o.max_outer_step, w > 0 ? o.outer_phase / w : o.max_outer_step);
  std::vector<PanelSpec> ps;
  auto march = [&](double a, double b) {
    double y = a;
    while (y < b - 1e-15) {
      double step = std::min({y, dmax, b - y});
      if (b - (y + step) < 0.25 * step) step = b - y;
      ps.push_back({y, y + step, PanelMap::log1m, false});
      y += step;
    }
  };
  march(y1, ym);
  march(ym, ye);
  ps.back().hi = ye;
  ps.push_back({1.0 - eta, 1.0, PanelMap::identity, true});
  return ps;
}

InnerSolution build_v0(cplx lam, const PotentialSpec& pot, const MatchingOptions& o) {
  check_lambda(lam);
  InnerSolution in;
  in.lam = lam;
  in.rho_m = matching_radius(lam, o);
  VolterraProblem p;
  p.orientation = Orientation::forward;
  p.nodes = o.nodes;
  const double rmin = std::ldexp(in.rho_m, -o.inner_levels);
  p.panels.push_back({0.0, rmin});
  for (int k = o.inner_levels; k >= 1; --k)
    p.panels.push_back({std::ldexp(in.rho_m, -k), std::ldexp(in.rho_m, -k + 1)});
  const cplx W = sf::wronskian_free(lam);
  p.separable.rank = 2;
  p.separable.diagonal_vanishes = true;
  p.separable.a = [lam, W](double x, cplx* a, cplx* da) {
    const cplx p0 = free_fundamental(FK::psi0, x, lam), p1 = free_fundamental(FK::psi1, x, lam);
    const cplx d0 = free_fundamental_deriv(FK::psi0, x, lam);
    const cplx d1 = free_fundamental_deriv(FK::psi1, x, lam);
    a[0] = p1 / (W * p0);
    da[0] = (d1 * p0 - p1 * d0) / (W * p0 * p0);
    a[1] = -1.0 / W;
    da[1] = 0.0;
  };
  p.separable.b = [lam, pot](double s, cplx* b) {
    const cplx p0 = free_fundamental(FK::psi0, s, lam), p1 = free_fundamental(FK::psi1, s, lam);
    const double R = pot(s) / (1.0 - s * s);
    b[0] = p0 * p0 * R;
    b[1] = p0 * p1 * R;
  };
  if (pot.zero) p.separable.b = [](double, cplx* b) { b[0] = b[1] = 0.0; };
  in.h = volterra_solve(p);
  return in;
}

cplx InnerSolution::v0(double r) const { return free_fundamental(FK::psi0, r, lam) * h.value(r); }
cplx InnerSolution::dv0(double r) const {
  return free_fundamental_deriv(FK::psi0, r, lam) * h.value(r) +
         free_fundamental(FK::psi0, r, lam) * h.deriv(r);
}

namespace {

// r(x) = psi1~/psi1 and its derivative.
void ratio_outer(double x, cplx lam, cplx* r, cplx* dr) {
  const cplx c = 0.5 - lam;
  const cplx p = 2.0 + x * (2.0 * lam - 1.0), pt = 2.0 + x * (1.0 - 2.0 * lam);
  const cplx v = cpow((1.0 - x) / (1.0 + x), c) * pt / p;
  *r = v;
  *dr = v * (-2.0 * c / (1.0 - x * x) + (1.0 - 2.0 * lam) / pt - (2.0 * lam - 1.0) / p);
}

}  // namespace

OuterSolution build_v1_on(cplx lam, const PotentialSpec& pot, const MatchingOptions& o,
                          const std::vector<PanelSpec>& panels) {
  check_lambda(lam);
  OuterSolution out;
  out.lam = lam;
  out.rho_1 = outer_radius(lam, o);
  out.eta = panels.back().hi - panels.back().lo;
  VolterraProblem p;
  p.orientation = Orientation::backward;
  p.nodes = o.nodes;
  p.panels = panels;
  const cplx W = sf::wronskian_free(lam);
  p.separable.rank = 2;
  p.separable.diagonal_vanishes = true;
  p.separable.end_exponents = {0.0, lam - 0.5};
  p.separable.a = [lam, W](double x, cplx* a, cplx* da) {
    cplx r, dr;
    ratio_outer(x, lam, &r, &dr);
    a[0] = 1.0 / W;
    da[0] = 0.0;
    a[1] = -r / W;
    da[1] = -dr / W;
  };
  p.separable.b = [lam, pot](double s, cplx* b) {
    const double V = pot(s);
    const cplx q = 2.0 * lam - 1.0;
    const cplx pp = 2.0 + s * q, pt = 2.0 - s * q;
    b[0] = pp * pt * V / (s * s);
    b[1] = cpow((1.0 - s) / (1.0 + s), lam - 0.5) * pp * pp * V / (s * s);
  };
  if (pot.zero) p.separable.b = [](double, cplx* b) { b[0] = b[1] = 0.0; };
  out.h = volterra_solve(p);
  return out;
}

OuterSolution build_v1(cplx lam, const PotentialSpec& pot, const MatchingOptions& o) {
  return build_v1_on(lam, pot, o, outer_panels(lam, o));
}

cplx OuterSolution::v1(double r) const { return free_fundamental(FK::psi1, r, lam) * h1(r); }
cplx OuterSolution::dv1(double r) const {
  return free_fundamental_deriv(FK::psi1, r, lam) * h1(r) +
         free_fundamental(FK::psi1, r, lam) * h.deriv(r);
}

// ---------------------------------------------------------------------------

FundamentalPair build_u_pair(cplx lam, const PotentialSpec& pot, const MatchingOptions& o) {
  FundamentalPair fp;
  fp.lam = lam;
  fp.W = sf::wronskian_free(lam);
  fp.rho_m = matching_radius(lam, o);
  fp.rho_1 = outer_radius(lam, o);
  const auto panels = outer_panels(lam, o);
  auto in = std::make_shared<InnerSolution>(build_v0(lam, pot, o));
  auto out = std::make_shared<OuterSolution>(build_v1_on(lam, pot, o, panels));
  auto out_t = std::make_shared<OuterSolution>(build_v1_on(1.0 - lam, pot, o, panels));
  const double rm = fp.rho_m;
  const cplx v0 = in->v0(rm), dv0 = in->dv0(rm);
  const cplx v1 = out->v1(rm), dv1 = out->dv1(rm);
  const cplx vt = out_t->v1(rm), dvt = out_t->dv1(rm);
  if (std::abs(v0) == 0.0) throw DegenerateError("build_u_pair: v0 vanishes at the matching radius");
  fp.a = v1 / v0;
  fp.b = v1 * dv0 - dv1 * v0;
  const cplx w01 = v0 * dv1 - dv0 * v1;
  fp.W_v1_v1t = v1 * dvt - dv1 * vt;
  fp.A = (v0 * dvt - dv0 * vt) / fp.W_v1_v1t;
  fp.B = -w01 / fp.W_v1_v1t;
  fp.w0 = w01 / fp.W;
  fp.inner = in;
  fp.outer = out;
  fp.outer_t = out_t;
  return fp;
}

cplx compute_w0(cplx lam, const PotentialSpec& pot, const MatchingOptions& o) {
  if (pot.zero) {
    check_lambda(lam);
    return 1.0;
  }
  return build_u_pair(lam, pot, o).w0;
}

namespace {
cplx weight(double r, cplx lam) { return r * r * cpow(1.0 - r * r, 0.25 + 0.5 * lam); }
cplx dweight(double r, cplx lam) {
  const cplx al = 0.25 + 0.5 * lam;
  const double q = 1.0 - r * r;
  return cpow(q, al) * (2.0 * r - 2.0 * al * r * r * r / q);
}
}  // namespace

cplx FundamentalPair::v0_inv_sq_integral(double r) const {
  const InnerSolution& in = *inner;
  if (r >= rho_m) return 0.0;
  const int n = 16;
  const quad::Rule& g = quad::gauss_legendre(n);
  auto f = [&](double s) {
    const cplx v = in.v0(s);
    return 1.0 / (v * v);
  };
  auto gl = [&](double a, double b) {
    cplx acc = 0.0;
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    for (int j = 0; j < n; ++j) acc += g.w[j] * f(m + h * g.x[j]);
    return acc * h;
  };
  // dyadic panels down from rho_m; below 2^-30 rho_m use s = 1/t
  cplx acc = 0.0;
  double hi = rho_m;
  int level = 0;
  while (hi * 0.5 > r && level < 30) {
    acc += gl(0.5 * hi, hi);
    hi *= 0.5;
    ++level;
  }
  if (hi * 0.5 > r) {
    const double t0 = 1.0 / hi, t1 = 1.0 / r;
    const double h = 0.5 * (t1 - t0), m = 0.5 * (t0 + t1);
    cplx tail = 0.0;
    for (int j = 0; j < n; ++j) {
      const double t = m + h * g.x[j];
      tail += g.w[j] * f(1.0 / t) / (t * t);
    }
    return acc + tail * h;
  }
  return acc + gl(r, hi);
}

cplx FundamentalPair::v0(double r) const {
  if (r <= rho_m) return inner->v0(r);
  return A * outer->v1(r) + B * outer_t->v1(r);
}
cplx FundamentalPair::dv0(double r) const {
  if (r <= rho_m) return inner->dv0(r);
  return A * outer->dv1(r) + B * outer_t->dv1(r);
}
cplx FundamentalPair::v1(double r) const {
  if (r >= rho_m) return outer->v1(r);
  const cplx v = inner->v0(r);
  return a * v + b * v * v0_inv_sq_integral(r);
}
cplx FundamentalPair::dv1(double r) const {
  if (r >= rho_m) return outer->dv1(r);
  const cplx v = inner->v0(r), dv = inner->dv0(r);
  return a * dv + b * (dv * v0_inv_sq_integral(r) - 1.0 / v);
}

cplx FundamentalPair::u0(double r) const {
  if (r <= rho_m) return free_fundamental(FK::phi0, r, lam) * inner->h0(r);
  return A * outer->h1(r) * free_fundamental(FK::phi1, r, lam) + B * u1_tilde(r);
}
cplx FundamentalPair::u1_tilde(double r) const {
  return free_fundamental(FK::phi1_tilde, r, lam) * outer_t->h1(r);
}
cplx FundamentalPair::u1(double r) const {
  if (r >= rho_m) return free_fundamental(FK::phi1, r, lam) * outer->h1(r);
  const cplx u = free_fundamental(FK::phi0, r, lam) * inner->h0(r);
  return a * u + b * u * v0_inv_sq_integral(r);
}
cplx FundamentalPair::du0(double r) const {
  if (r <= rho_m)
    return free_fundamental_deriv(FK::phi0, r, lam) * inner->h0(r) +
           free_fundamental(FK::phi0, r, lam) * inner->dh0(r);
  const cplx d1 = free_fundamental_deriv(FK::phi1, r, lam) * outer->h1(r) +
                  free_fundamental(FK::phi1, r, lam) * outer->dh1(r);
  const cplx dt = free_fundamental_deriv(FK::phi1_tilde, r, lam) * outer_t->h1(r) +
                  free_fundamental(FK::phi1_tilde, r, lam) * outer_t->dh1(r);
  return A * d1 + B * dt;
}
cplx FundamentalPair::du1(double r) const {
  if (r >= rho_m)
    return free_fundamental_deriv(FK::phi1, r, lam) * outer->h1(r) +
           free_fundamental(FK::phi1, r, lam) * outer->dh1(r);
  // u1 = v1 / weight
  const cplx w = weight(r, lam), dw = dweight(r, lam);
  return (dv1(r) * w - v1(r) * dw) / (w * w);
}

cplx FundamentalPair::rescaled_wronskian(double r) const {
  const cplx w = u0(r) * du1(r) - du0(r) * u1(r);
  return std::pow(r, 4) * cpow(1.0 - r * r, 0.5 + lam) * w;
}

}  // namespace conelab
