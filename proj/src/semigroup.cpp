#include "conelab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include <Eigen/Eigenvalues>

#include "conelab/quadrature.hpp"
#include "conelab/specfun.hpp"

namespace conelab {

namespace {

VecR potential_at_nodes(const RadialGrid& g, const PotentialSpec& pot) {
  VecR v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = pot(g.nodes()[i]);
  return v;
}

// Real work array [Re | Im] for a set of stacked states.
MatR to_real_block(const std::vector<StatePair>& s) {
  const int n = static_cast<int>(s.front().stacked().size());
  const int m = static_cast<int>(s.size());
  MatR X(n, 2 * m);
  for (int k = 0; k < m; ++k) {
    const VecC v = s[k].stacked();
    X.col(2 * k) = v.real();
    X.col(2 * k + 1) = v.imag();
  }
  return X;
}

StatePair from_real_block(const GridPtr& g, const MatR& X, int k) {
  VecC v = X.col(2 * k).cast<cplx>() + cplx(0.0, 1.0) * X.col(2 * k + 1).cast<cplx>();
  return StatePair::from_stacked(g, v);
}

template <class F>
void parallel_for(int n, int workers, F&& f) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) f(i);
    });
  for (auto& t : pool) t.join();
}

VecR inverse_iteration(const MatR& A, double sigma, int iters = 4) {
  const int n = static_cast<int>(A.rows());
  Eigen::PartialPivLU<MatR> lu(A - sigma * MatR::Identity(n, n));
  VecR x = VecR::Ones(n);
  for (int k = 0; k < iters; ++k) {
    x = lu.solve(x);
    x /= x.norm();
  }
  return x;
}

}  // namespace

// ---- operator ---------------------------------------------------------------

MatR linear_operator(const RadialGrid& g, const PotentialSpec& pot) {
  const int n = g.size();
  const MatR& D = g.Dz();
  const MatR zD = g.z().asDiagonal() * D;
  const MatR I = MatR::Identity(n, n);
  MatR A(2 * n, 2 * n);
  // r d/dr = 2 z d/dz,  d^2/dr^2 + (4/r) d/dr = 4 z d^2/dz^2 + 10 d/dz
  A.topLeftCorner(n, n) = -2.0 * zD - 1.5 * I;
  A.topRightCorner(n, n) = I;
  A.bottomLeftCorner(n, n) = 4.0 * zD * D + 10.0 * D;
  A.bottomLeftCorner(n, n).diagonal() -= potential_at_nodes(g, pot);
  A.bottomRightCorner(n, n) = -2.0 * zD - 2.5 * I;
  return A;
}

StatePair apply_linear_operator(const StatePair& f, const PotentialSpec& pot) {
  const MatR A = linear_operator(*f.grid(), pot);
  return StatePair::from_stacked(f.grid(), A.cast<cplx>() * f.stacked());
}

// ---- projection -------------------------------------------------------------

cplx ProjectionData::coefficient(const StatePair& f) const { return inner_H(f, g_star); }

StatePair ProjectionData::project(const StatePair& f) const { return g * coefficient(f); }

StatePair ProjectionData::complement(const StatePair& f) const { return f - project(f); }

ProjectionData riesz_setup(const GridPtr& grid, const PotentialSpec& pot) {
  const int n = grid->size();
  const MatR A = linear_operator(*grid, pot);
  Eigen::EigenSolver<MatR> es(A, false);
  const VecC ev = es.eigenvalues();
  int best = 0;
  for (int i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i] - 1.0) < std::abs(ev[best] - 1.0)) best = i;
  double gap = 1e300;
  for (int i = 0; i < ev.size(); ++i)
    if (i != best) gap = std::min(gap, std::abs(ev[i] - ev[best]));
  if (gap < 1e-2) throw DegenerateError("riesz_setup: eigenvalue near 1 is not isolated");

  ProjectionData P;
  P.eigenvalue = ev[best];
  P.gap = gap;
  P.g = {RadialField::constant(grid, 2.0), RadialField::constant(grid, 5.0)};

  // the shift keeps the LU factorisation away from exact singularity
  const double sigma = ev[best].real() + 1e-9;
  VecR x = inverse_iteration(A, sigma);
  x *= 2.0 / x[0];
  double dev = 0.0;
  for (int i = 0; i < n; ++i)
    dev = std::max({dev, std::abs(x[i] - 2.0), std::abs(x[n + i] - 5.0)});
  P.eigvec_deviation = dev;

  const VecR y = inverse_iteration(A.transpose(), sigma);
  const VecR gv = P.g.stacked().real();
  const double yg = y.dot(gv);
  if (std::abs(yg) < 1e-300) throw DegenerateError("riesz_setup: adjoint eigenvector orthogonal to g");
  const VecR gs = gram_H(*grid).llt().solve(y) / yg;
  P.g_star = StatePair::from_stacked(grid, gs.cast<cplx>());
  return P;
}

// ---- Laplace inversion ------------------------------------------------------

void ContourSpec::validate() const {
  if (!(eps > 0.0 && eps <= 0.25)) throw DomainError("ContourSpec: eps must lie in (0, 1/4]");
  if (!(omega_max > 0.0)) throw DomainError("ContourSpec: omega_max must be positive");
  if (!(shift < eps)) throw DomainError("ContourSpec: shift must lie left of the contour");
  if (n_points != 0 && n_points < 5) throw DomainError("ContourSpec: too few nodes");
}

InversionResult laplace_invert(const StatePair& state, const std::vector<double>& taus,
                               const ContourSpec& c, const PotentialSpec& pot, int parallelism) {
  c.validate();
  if (taus.empty()) throw DomainError("laplace_invert: no times");
  double tmax = 0.0;
  for (double t : taus) {
    if (!(t >= 0.0)) throw DomainError("laplace_invert: tau must be >= 0");
    tmax = std::max(tmax, t);
  }
  const GridPtr& g = state.grid();
  const MatC A = linear_operator(*g, pot).cast<cplx>();
  const VecC f = state.stacked();
  const VecC g1 = A * f - c.shift * f;
  const VecC g2 = A * g1 - c.shift * g1;
  const StatePair rem = StatePair::from_stacked(g, g2);
  const int n = g->size();

  // trapezoid nodes; an even number of intervals per side so that the
  // half-range rule is a sub-rule
  int m;
  if (c.n_points > 0) {
    m = std::max(2, (c.n_points - 1) / 2);
  } else {
    const double h = std::min(kPi / (4.0 * tmax + 1.0), kPi / 9.0);
    m = static_cast<int>(std::ceil(c.omega_max / h));
  }
  if (m % 2) ++m;
  const double h = c.omega_max / m;
  const int total = 2 * m + 1;

  // the potential is real, so R(conj lambda) f = conj(R(lambda) conj f):
  // one fundamental system serves both omega and -omega
  const StatePair rem_c = StatePair::from_stacked(g, g2.conjugate());
  std::vector<VecC> vals(total);
  parallel_for(m + 1, parallelism, [&](int j) {
    const cplx lam(c.eps, j * h);
    FundamentalPair fp = build_u_pair(lam, pot, c.matching);
    vals[m + j] = resolvent_apply(rem, fp).values / ((lam - c.shift) * (lam - c.shift));
    if (j > 0) {
      const cplx lc = std::conj(lam);
      vals[m - j] = resolvent_apply(rem_c, fp).values.conjugate() / ((lc - c.shift) * (lc - c.shift));
    }
  });

  InversionResult out;
  out.nodes = total;
  out.tau = taus;
  for (double t : taus) {
    VecC full = VecC::Zero(n), half = VecC::Zero(n);
    for (int k = 0; k < total; ++k) {
      const int j = k - m;
      const double w = j * h;
      const cplx e = std::exp(cplx(c.eps, w) * t);
      const double wf = (std::abs(j) == m ? 0.5 : 1.0) * h;
      full += (wf * e) * vals[k];
      if (std::abs(j) <= m / 2) half += ((std::abs(j) == m / 2 ? 0.5 : 1.0) * h * e) * vals[k];
    }
    full /= 2.0 * kPi;
    half /= 2.0 * kPi;
    const double ec = std::exp(c.shift * t);
    VecC u = ec * f.head(n) + (t * ec) * g1.head(n) + full;
    const double scale = std::max(u.norm(), 1e-300);
    out.tail_change = std::max(out.tail_change, (full - half).norm() / scale);
    out.values.emplace_back(g, std::move(u));
  }
  if (out.tail_change > 10.0 * c.tol)
    throw ConvergenceError("laplace_invert: contour tail has not converged");
  return out;
}

RadialField laplace_invert(const StatePair& state, double tau, const ContourSpec& c,
                           const PotentialSpec& pot) {
  return laplace_invert(state, std::vector<double>{tau}, c, pot).values.front();
}

// ---- time stepping ----------------------------------------------------------

double default_time_step(const RadialGrid& g) {
  const VecR& r = g.nodes();
  double h = std::min(r[0], 1.0 - r[r.size() - 1]);
  for (int i = 1; i < r.size(); ++i) h = std::min(h, r[i] - r[i - 1]);
  return 0.5 * h;
}

std::vector<Trajectory> linear_evolve_batch(const std::vector<StatePair>& states, double tau_max,
                                            const PotentialSpec& pot, const EvolveOptions& opt) {
  if (states.empty()) return {};
  if (!(tau_max > 0.0)) throw DomainError("linear_evolve: tau_max must be positive");
  if (!(opt.sample_every > 0.0)) throw DomainError("linear_evolve: bad sampling interval");
  const GridPtr& g = states.front().grid();
  for (const auto& s : states) require_same_grid(s.first, states.front().first);
  const double dt0 = opt.dt > 0.0 ? opt.dt : default_time_step(*g);
  const int nsamp = std::max(1, static_cast<int>(std::ceil(tau_max / opt.sample_every - 1e-9)));
  const double hs = tau_max / nsamp;
  const int sub = std::max(1, static_cast<int>(std::ceil(hs / dt0 - 1e-9)));
  const double dt = hs / sub;

  const MatR A = linear_operator(*g, pot);
  MatR X = to_real_block(states);
  const int m = static_cast<int>(states.size());
  std::vector<Trajectory> out(m);
  std::vector<double> n0(m);
  for (int k = 0; k < m; ++k) {
    out[k].times.push_back(0.0);
    out[k].states.push_back(states[k]);
    out[k].meta.dt = dt;
    out[k].meta.max_growth = 1.0;
    n0[k] = norm_state_H(states[k]);
  }
  MatR k1, k2, k3, k4;
  for (int s = 1; s <= nsamp; ++s) {
    for (int j = 0; j < sub; ++j) {
      k1 = A * X;
      k2 = A * (X + 0.5 * dt * k1);
      k3 = A * (X + 0.5 * dt * k2);
      k4 = A * (X + dt * k3);
      X += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double t = s * hs;
    for (int k = 0; k < m; ++k) {
      StatePair st = from_real_block(g, X, k);
      const double nk = norm_state_H(st);
      out[k].times.push_back(t);
      out[k].states.push_back(std::move(st));
      out[k].meta.steps = static_cast<long>(s) * sub;
      if (n0[k] > 0.0) {
        out[k].meta.max_growth = std::max(out[k].meta.max_growth, nk / n0[k]);
        if (!std::isfinite(nk) || nk > opt.growth_slack * std::exp(2.0 * t) * n0[k])
          throw ConvergenceError("linear_evolve: norm growth exceeds e^{2 tau}; unstable step");
      } else if (nk != 0.0) {
        out[k].meta.max_growth = 1e300;
      }
    }
  }
  return out;
}

Trajectory linear_evolve(const StatePair& state, double tau_max, double dt, const PotentialSpec& pot,
                         const EvolveOptions& opt) {
  EvolveOptions o = opt;
  if (dt > 0.0) o.dt = dt;
  return linear_evolve_batch({state}, tau_max, pot, o).front();
}

double log_norm_slope(const Trajectory& t) {
  std::vector<double> x, y;
  for (size_t i = 0; i < t.times.size(); ++i) {
    const double nv = norm_state_H(t.states[i]);
    if (nv > 0.0) {
      x.push_back(t.times[i]);
      y.push_back(std::log(nv));
    }
  }
  if (x.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// ---- kernel bounds ----------------------------------------------------------

double kernel_bound(double tau, double s) {
  if (!(tau >= 0.0) || !(s > 0.0 && s < 1.0)) throw DomainError("kernel_bound: need tau >= 0, s in (0,1)");
  const double x = tau + std::log1p(-s);
  if (x == 0.0) throw DomainError("kernel_bound: singular locus tau + log(1-s) = 0");
  return s * s / std::sqrt(1.0 - s) * std::pow(std::abs(x), -0.1) / japanese(x);
}

KernelTable::KernelTable(const PotentialSpec& pot, const KernelQuadrature& q, int parallelism)
    : q_(q), zero_(pot.zero) {
  if (!(q.omega_max > 0.0) || !(q.panel > 0.0) || q.nodes < 2 || q.rho_panels < 1 || q.rho_nodes < 2)
    throw DomainError("KernelQuadrature: invalid parameters");
  if (zero_) return;
  const quad::Rule& gl = quad::gauss_legendre(q.nodes);
  const int panels = std::max(1, static_cast<int>(std::ceil(q.omega_max / q.panel)));
  const double d = q.omega_max / panels;
  for (int p = 0; p < panels; ++p)
    for (int j = 0; j < q.nodes; ++j) {
      omega_.push_back(d * (p + 0.5 * (1.0 + gl.x[j])));
      weight_.push_back(0.5 * d * gl.w[j]);
    }
  // the cutoff pieces live on the matching overlap, so the radii must agree
  MatchingOptions mo = q.matching;
  mo.delta0 = q.cutoff.delta0;
  mo.delta1 = q.cutoff.delta1;
  std::vector<std::unique_ptr<GreenKernel>> tmp(omega_.size());
  parallel_for(static_cast<int>(omega_.size()), parallelism, [&](int k) {
    tmp[k] = std::make_unique<GreenKernel>(build_u_pair(cplx(q.eps, omega_[k]), pot, mo), q.cutoff);
  });
  kernels_.reserve(tmp.size());
  for (auto& k : tmp) kernels_.push_back(std::move(*k));
}

std::vector<std::vector<double>> KernelTable::kernel_norms(double s, const std::vector<double>& taus) const {
  for (double t : taus) kernel_bound(t, s);  // validates the arguments
  std::vector<std::vector<double>> out(6, std::vector<double>(taus.size(), 0.0));
  if (zero_) return out;
  const int nt = static_cast<int>(taus.size());
  const int nw = static_cast<int>(omega_.size());
  // phase table e^{lambda tau} times the omega weight
  MatC ph(nw, nt);
  for (int i = 0; i < nw; ++i)
    for (int t = 0; t < nt; ++t) ph(i, t) = weight_[i] * std::exp(cplx(q_.eps, omega_[i]) * taus[t]);
  // composite Gauss rule in rho with a break at the diagonal
  std::vector<double> edges;
  for (int i = 0; i <= q_.rho_panels; ++i) edges.push_back(static_cast<double>(i) / q_.rho_panels);
  edges.push_back(s);
  std::sort(edges.begin(), edges.end());
  const quad::Rule& gr = quad::gauss_legendre(q_.rho_nodes);
  std::vector<std::vector<double>> acc(6, std::vector<double>(nt, 0.0));
  MatC comp(nw, 6);
  for (size_t e = 0; e + 1 < edges.size(); ++e) {
    const double lo = edges[e], hi = edges[e + 1];
    if (hi - lo < 1e-14) continue;
    for (int j = 0; j < q_.rho_nodes; ++j) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gr.x[j];
      const double wr = 0.5 * (hi - lo) * gr.w[j] * std::pow(r, 4);
      for (int i = 0; i < nw; ++i) {
        cplx c[6];
        kernels_[i].components(r, s, c);
        for (int n = 0; n < 6; ++n) comp(i, n) = c[n];
      }
      const MatC K = comp.transpose() * ph;  // 6 x nt
      for (int n = 0; n < 6; ++n)
        for (int t = 0; t < nt; ++t) {
          const double kr = 2.0 * K(n, t).real();  // the omega < 0 half is the conjugate
          acc[n][t] += wr * std::pow(std::abs(kr), 5.0);
        }
    }
  }
  for (int n = 0; n < 6; ++n)
    for (int t = 0; t < nt; ++t) out[n][t] = std::pow(acc[n][t], 0.2);
  return out;
}

double KernelTable::kernel_norm(int n, double tau, double s) const {
  if (n < 1 || n > 6) throw DomainError("kernel_norm: n must be in 1..6");
  return kernel_norms(s, {tau})[n - 1][0];
}

double kernel_bound_ratio(int n, double tau, double s, const KernelQuadrature& q,
                          const PotentialSpec& pot) {
  return KernelTable(pot, q).ratio(n, tau, s);
}

// ---- oscillatory integrals --------------------------------------------------

std::string symbol_family_name(SymbolFamily f) {
  switch (f) {
    case SymbolFamily::odd_rational: return "odd_rational";
    case SymbolFamily::odd_rational_sq: return "odd_rational_sq";
    case SymbolFamily::mixed: return "mixed";
    case SymbolFamily::even_alpha: return "even_alpha";
    case SymbolFamily::even_alpha_fp: return "even_alpha_fp";
    case SymbolFamily::cutoff_rho1: return "cutoff_rho1";
    case SymbolFamily::cutoff_rho2: return "cutoff_rho2";
  }
  return "unknown";
}

OscResult osc_decay_check(SymbolFamily fam, double a, double param) {
  if (a == 0.0 || !std::isfinite(a)) throw DomainError("osc_decay_check: a must be nonzero");
  const double aa = std::abs(a);
  const double ja = japanese(a);
  std::function<cplx(double)> f;
  std::vector<double> breaks;
  quad::FourierOptions fo;
  fo.max_cycles = 20000;
  double bound = 1.0 / (ja * ja);
  const CutoffSpec chi;
  switch (fam) {
    case SymbolFamily::odd_rational:
      f = [](double w) { return cplx(w / (1.0 + w * w)); };
      break;
    case SymbolFamily::odd_rational_sq:
      f = [](double w) { return cplx(w / ((1.0 + w * w) * (1.0 + w * w))); };
      break;
    case SymbolFamily::mixed:
      f = [](double w) { return cplx((w + 1.0) / (1.0 + w * w)); };
      break;
    case SymbolFamily::even_alpha:
    case SymbolFamily::even_alpha_fp: {
      const double al = param;
      if (!(al > 0.0 && al < 1.0)) throw DomainError("osc_decay_check: alpha must lie in (0,1)");
      // the a -> 0 limit of the transform of <w>^{-alpha} minus its leading
      // power is sqrt(pi) Gamma(-mu)/Gamma(alpha/2), mu = (1-alpha)/2
      const double kappa =
          fam == SymbolFamily::even_alpha_fp ? std::tgamma(-(1.0 - al) / 2.0) / std::tgamma(al / 2.0) : 0.0;
      f = [al, kappa](double w) { return cplx(std::pow(1.0 + w * w, -al / 2.0) - kappa * std::exp(-w * w)); };
      bound = std::pow(aa, -1.0 + al) / (ja * ja);
      break;
    }
    case SymbolFamily::cutoff_rho1:
    case SymbolFamily::cutoff_rho2: {
      const double rho = param;
      if (!(rho > 0.0 && rho < 1.0)) throw DomainError("osc_decay_check: rho must lie in (0,1)");
      const int n = fam == SymbolFamily::cutoff_rho1 ? 1 : 2;
      const int p = fam == SymbolFamily::cutoff_rho1 ? n + 1 : n;
      f = [rho, n, p, chi](double w) {
        const double jw = japanese(w);
        return cplx(std::pow(rho, -n) * (1.0 - chi.chi(rho * jw)) * std::pow(jw, -p));
      };
      for (double d : {chi.delta1, chi.delta0}) {
        const double q = d / rho;
        if (q > 1.0) {
          breaks.push_back(std::sqrt(q * q - 1.0));
          breaks.push_back(-std::sqrt(q * q - 1.0));
        }
      }
      if (fam == SymbolFamily::cutoff_rho2) bound = 1.0 / (aa * ja * ja);
      break;
    }
  }
  const quad::FourierResult r = quad::fourier_integral(f, a, breaks, fo);
  OscResult out;
  out.integral = std::abs(r.value);
  out.bound = bound;
  out.ratio = out.integral / bound;
  out.converged = r.converged;
  return out;
}

// ---- weighted norms ---------------------------------------------------------

WeightedNormReport weighted_norm_inequalities(const RadialField& f) {
  WeightedNormReport rep{};
  const double h1 = norm_h1(f);
  if (!(h1 > 0.0)) throw DomainError("weighted_norm_inequalities: zero H^1 norm");
  rep.l2_ratio = norm_r_l2_01(f) / h1;
  rep.l5_ratio = norm_r_l5(f) / h1;
  const int n = f.grid->size();
  if (n >= 4) {
    const GridPtr coarse = RadialGrid::make(n / 2, f.grid->radius());
    const RadialField back = f.resample(coarse).resample(f.grid);
    rep.resolution_defect = norm_h1(f - back) / h1;
  }
  rep.near_extremal = rep.resolution_defect > 1e-3;
  return rep;
}

}  // namespace conelab
