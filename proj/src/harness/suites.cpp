#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include "conelab/evolve.hpp"
#include "conelab/harness.hpp"
#include "conelab/quadrature.hpp"
#include "conelab/rng.hpp"
#include "conelab/specfun.hpp"

namespace conelab::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%g", v);
  return b;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

double l2rel(const RadialField& a, const RadialField& b) { return norm_l2(a - b) / norm_l2(b); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

template <class F>
void parallel_for(int n, int workers, F&& f) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> err(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) f(i);
      } catch (...) {
        err[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
}

// Collects rows for one suite and records the tolerances it used.
class Rows {
 public:
  Rows(std::string suite, const Config& cfg, RunManifest& m) : suite_(std::move(suite)), cfg_(cfg), m_(m) {}

  double tol(const std::string& key) {
    const double v = cfg_.num(suite_, key);
    m_.tolerances[suite_ + "." + key] = v;
    return v;
  }

  ReportRow& le(const std::string& id, const std::string& in, double v, double bound) {
    return add(id, in, v, "<= " + fmt(bound), !std::isnan(v) && v != INFINITY && v <= bound);
  }
  ReportRow& ge(const std::string& id, const std::string& in, double v, double bound) {
    return add(id, in, v, ">= " + fmt(bound), !std::isnan(v) && v >= bound);
  }
  ReportRow& in(const std::string& id, const std::string& in, double v, double lo, double hi) {
    return add(id, in, v, "in [" + fmt(lo) + ", " + fmt(hi) + "]", v >= lo && v <= hi);
  }
  ReportRow& eq(const std::string& id, const std::string& in, double v, double target) {
    return add(id, in, v, "== " + fmt(target), v == target);
  }
  ReportRow& truth(const std::string& id, const std::string& in, double v, const std::string& target, bool ok) {
    return add(id, in, v, target, ok);
  }
  ReportRow& info(const std::string& id, const std::string& in, double v) {
    rows_.push_back({id, in, v, "", Status::info, {}});
    return rows_.back();
  }

  SuiteReport done() { return {suite_, std::move(rows_)}; }

 private:
  ReportRow& add(const std::string& id, const std::string& in, double v, std::string target, bool ok) {
    rows_.push_back({id, in, v, std::move(target), ok ? Status::pass : Status::fail, {}});
    return rows_.back();
  }
  std::string suite_;
  const Config& cfg_;
  RunManifest& m_;
  std::vector<ReportRow> rows_;
};

int positive_int(const Config& c, const std::string& s, const std::string& k, int lo = 1) {
  const long v = c.integer(s, k);
  if (v < lo || v > 100000) throw ConfigError(s + "." + k + ": out of range");
  return static_cast<int>(v);
}

std::vector<int> orders(const Config& c, const std::string& s, const std::string& k) {
  std::vector<int> out;
  for (double v : c.list(s, k)) {
    if (v < 4 || v > 4096 || v != std::floor(v)) throw ConfigError(s + "." + k + ": bad grid order");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError(s + "." + k + ": empty list");
  return out;
}

// Free radial wave equation in five dimensions by d'Alembert on
// w = 3 r u + r^2 u_r, with r^3 u = int_0^r s w ds.
struct FreeWave5D {
  std::function<double(double)> f, df, d2f, g, dg;
  double W0(double x) const { return 3 * x * f(x) + x * x * df(x); }
  double dW0(double x) const { return 3 * f(x) + 5 * x * df(x) + x * x * d2f(x); }
  double W1(double x) const { return 3 * x * g(x) + x * x * dg(x); }
  double w(double t, double r) const {
    return 0.5 * (W0(r + t) + W0(r - t)) + 0.5 * quad::integrate_real([&](double y) { return W1(y); }, r - t, r + t);
  }
  double wt(double t, double r) const { return 0.5 * (dW0(r + t) - dW0(r - t)) + 0.5 * (W1(r + t) + W1(r - t)); }
  double u(double t, double r) const {
    return quad::integrate_real([&](double s) { return s * w(t, s); }, 0.0, r) / (r * r * r);
  }
  double ut(double t, double r) const {
    return quad::integrate_real([&](double s) { return s * wt(t, s); }, 0.0, r) / (r * r * r);
  }
};

std::vector<StatePair> smooth_states(const GridPtr& g) {
  auto F = [&](auto f) { return RadialField::from_function(g, f); };
  return {
      {F([](double r) { return cplx(1.0 + r * r); }), F([](double) { return cplx(0.3); })},
      {F([](double r) { return cplx(std::exp(-r * r)); }), F([](double r) { return cplx(r * r, -0.5 * r * r); })},
      {F([](double r) { return cplx(std::cos(2.0 * r * r)); }), F([](double r) { return cplx(1.0 / (2.0 + r * r)); })},
      {F([](double) { return cplx(0.0); }), F([](double r) { return cplx(std::pow(1.0 - r * r, 3)); })},
      {F([](double r) { return cplx(r * r * r * r, 1.0); }), F([](double r) { return cplx(0.0, std::sin(r * r)); })},
  };
}

// ---- spectrum-scan ---------------------------------------------------------

struct SpectrumParams {
  sf::Rect box;
  std::vector<double> z, rho;
  int samples;
};

SpectrumParams spectrum_params(const Config& c) {
  const std::string s = "spectrum-scan";
  SpectrumParams p{{c.num(s, "re_min"), c.num(s, "re_max"), c.num(s, "im_min"), c.num(s, "im_max")},
                   c.list(s, "connection_z"), c.list(s, "phi0_rho"),
                   positive_int(c, s, "connection_samples")};
  if (!(p.box.re1 > p.box.re0 && p.box.im1 > p.box.im0)) throw ConfigError(s + ": empty scan rectangle");
  for (double z : p.z)
    if (!(z > 0 && z < 1)) throw ConfigError(s + ".connection_z: values must lie in (0, 1)");
  for (double r : p.rho)
    if (!(r > 0 && r < 1)) throw ConfigError(s + ".phi0_rho: values must lie in (0, 1)");
  c.num(s, "locate_tol"), c.num(s, "runtime_limit");
  c.num(s, "connection_tol"), c.num(s, "phi0_tol");
  return p;
}

SuiteReport spectrum_scan_suite(const RunContext& ctx, RunManifest& m) {
  const Config& c = *ctx.cfg;
  const SpectrumParams p = spectrum_params(c);
  Rows R("spectrum-scan", c, m);
  if (ctx.validate_only) return R.done();

  const auto t0 = Clock::now();
  const sf::ScanResult scan = sf::spectrum_scan(p.box);
  const double elapsed = seconds_since(t0);
  const std::string box = "re=[" + fmt(p.box.re0) + "," + fmt(p.box.re1) + "];im=[" + fmt(p.box.im0) + "," +
                          fmt(p.box.im1) + "]";
  R.eq("A.zero_count", box, static_cast<double>(scan.zeros.size()), 1);
  R.eq("A.winding_number", box, scan.total_count, 1);
  double dist = INFINITY;
  for (const auto& z : scan.zeros) dist = std::min(dist, std::abs(z.location - 1.0));
  R.le("A.zero_location", box, dist, R.tol("locate_tol"));
  if (ctx.timed) R.le("A.runtime_seconds", box, elapsed, R.tol("runtime_limit"));

  // connection formula at random admissible lambda
  const CounterRng rng(ctx.seed, 0xD);
  double worst = 0.0;
  int used = 0;
  for (std::uint64_t k = 0; used < p.samples && k < 100000; ++k) {
    const cplx lam(0.25 * rng.uniform(2 * k), -10.0 + 20.0 * rng.uniform(2 * k + 1));
    try {
      const auto q = sf::spectral_params(lam);
      double w = 0.0;
      for (double z : p.z) {
        const cplx lhs = sf::hyp2f1({q.a, q.b, lam + 0.5}, 1.0 - z);
        const cplx rhs = sf::connection_coefficient_h0(lam) * sf::hyp2f1(q, z) +
                         sf::connection_coefficient(lam) * std::pow(z, -1.5) *
                             sf::hyp2f1({q.a - 1.5, q.b - 1.5, -0.5}, z);
        w = std::max(w, rel(lhs, rhs));
      }
      worst = std::max(worst, w);
      ++used;
    } catch (const DegenerateError&) {
    }
  }
  R.le("D.connection_formula", "samples=" + std::to_string(used) + ";z=" + c.str("spectrum-scan", "connection_z"),
       worst, R.tol("connection_tol"));

  // phi0 representations pairwise
  const std::vector<cplx> lams = {cplx(1.0), cplx(0.0, 1.0), cplx(0.1, 5.0), cplx(0.25, -2.0), cplx(2.0, 0.5)};
  double pw = 0.0;
  for (double r : p.rho)
    for (cplx lam : lams) {
      const cplx d = sf::phi0_via_representation(r, lam, Phi0Rep::direct);
      const cplx s1 = sf::phi0_via_representation(r, lam, Phi0Rep::single_integral);
      const cplx s2 = sf::phi0_via_representation(r, lam, Phi0Rep::double_integral);
      pw = std::max({pw, rel(s1, d), rel(s2, d), rel(s1, s2)});
    }
  R.le("E.phi0_representations", "grid=" + std::to_string(p.rho.size()) + "x" + std::to_string(lams.size()), pw,
       R.tol("phi0_tol"));
  return R.done();
}

// ---- green-verify ----------------------------------------------------------

SuiteReport green_verify_suite(const RunContext& ctx, RunManifest& m) {
  const Config& c = *ctx.cfg;
  const std::string S = "green-verify";
  const int samples = positive_int(c, S, "w0_samples");
  const double omax = c.num(S, "omega_max");
  const int order = positive_int(c, S, "resolvent_order", 4);
  const double deps = c.num(S, "decay_eps");
  const std::vector<double> domegas = c.list(S, "decay_omegas");
  if (domegas.size() < 2) throw ConfigError(S + ".decay_omegas: need at least two values");
  Rows R(S, c, m);
  m.grid_orders[S] = {order};
  if (ctx.validate_only) return R.done();
  const PotentialSpec V = PotentialSpec::linearised();

  const CounterRng rng(ctx.seed, 0xC);
  std::vector<cplx> lams;
  for (std::uint64_t k = 0; static_cast<int>(lams.size()) < samples; ++k) {
    const cplx lam(0.25 * rng.uniform(2 * k), omax * (2.0 * rng.uniform(2 * k + 1) - 1.0));
    if (std::abs(lam - 0.5) < 1e-3) continue;
    lams.push_back(lam);
  }
  std::vector<double> wdev(lams.size()), w0abs(lams.size());
  parallel_for(static_cast<int>(lams.size()), ctx.parallelism, [&](int i) {
    const FundamentalPair fp = build_u_pair(lams[i], V);
    const cplx ref = fp.W * fp.w0;
    double d = 0.0;
    for (double r : {0.02, 0.1, fp.rho_m, 0.4, 0.75, 0.97})
      d = std::max(d, std::abs(fp.rescaled_wronskian(r) - ref) / std::abs(ref));
    wdev[i] = d;
    w0abs[i] = std::abs(fp.w0);
  });
  const std::string in = "samples=" + std::to_string(samples) + ";eps=[0,0.25];|omega|<=" + fmt(omax);
  R.le("C.wronskian_constancy", in, *std::max_element(wdev.begin(), wdev.end()), R.tol("wronskian_tol"));
  const auto mi = std::min_element(w0abs.begin(), w0abs.end()) - w0abs.begin();
  R.ge("C.min_abs_w0", in + ";argmin=" + fmt(lams[mi].real()) + "+" + fmt(lams[mi].imag()) + "i", w0abs[mi],
       R.tol("min_w0"));

  std::vector<double> lx, ly;
  for (double w : domegas) {
    lx.push_back(std::log(w));
    ly.push_back(std::log(std::abs(compute_w0(cplx(deps, w), V) - 1.0)));
  }
  R.in("C.w0_decay_exponent", "eps=" + fmt(deps) + ";omega=" + c.str(S, "decay_omegas"), fit_slope(lx, ly),
       R.tol("decay_lo"), R.tol("decay_hi"));

  const GridPtr g = RadialGrid::make(order);
  double worst = 0.0;
  for (cplx lam : {cplx(0.5, 3.0), cplx(0.5, -3.0), cplx(0.1, 10.0)}) {
    const FundamentalPair fp = build_u_pair(lam, V);
    for (const StatePair& st : smooth_states(g))
      worst = std::max(worst, l2rel(resolvent_apply(st, fp), bvp_solve_direct(st, lam, V).u));
  }
  R.le("F.resolvent_vs_bvp", "order=" + std::to_string(order) + ";data=5;lambda=3", worst, R.tol("resolvent_tol"));

  const GreenKernel G(cplx(0.1, 10.0), V);
  double re = 0.0;
  for (int i = 1; i < 40; ++i)
    for (int j = 1; j < 40; ++j) {
      const double r = i / 40.0, s = j / 40.0;
      cplx sum = G.free_eval(r, s);
      for (int n = 1; n <= 6; ++n) sum += G.component(n, r, s);
      re = std::max(re, std::abs(G.eval(r, s) - sum) / std::max(1.0, std::abs(G.eval(r, s))));
    }
  R.le("F.green_reassembly", "lambda=0.1+10i;grid=39x39", re, R.tol("reassembly_tol"));
  return R.done();
}

// ---- semigroup-verify ------------------------------------------------------

SuiteReport semigroup_verify_suite(const RunContext& ctx, RunManifest& m) {
  const Config& c = *ctx.cfg;
  const std::string S = "semigroup-verify";
  const int order = positive_int(c, S, "order", 4), free_order = positive_int(c, S, "free_order", 4);
  const int stable_order = positive_int(c, S, "stable_order", 4), samples = positive_int(c, S, "stable_samples");
  std::vector<double> taus = c.list(S, "taus");
  const double tau_max = c.num(S, "tau_max");
  for (double t : taus)
    if (!(t > 0.0)) throw ConfigError(S + ".taus: values must be positive");
  if (!(tau_max > 0.0)) throw ConfigError(S + ".tau_max: must be positive");
  Rows R(S, c, m);
  const std::vector<int> eig_orders = orders(c, S, "eig_orders");
  m.grid_orders[S] = {order, free_order, stable_order};
  m.grid_orders[S].insert(m.grid_orders[S].end(), eig_orders.begin(), eig_orders.end());
  const double tol = R.tol("tol");
  const double step = 0.5;
  for (double t : taus)
    if (std::abs(t / step - std::round(t / step)) > 1e-12) throw ConfigError(S + ".taus: must be multiples of 0.5");
  if (ctx.validate_only) return R.done();
  const double tmax = *std::max_element(taus.begin(), taus.end());

  {
    const double etol = R.tol("eig_tol");
    std::vector<double> dev_val, dev_vec;
    for (int n : eig_orders) {
      const ProjectionData pd = riesz_setup(RadialGrid::make(n));
      const std::string in = "order=" + std::to_string(n);
      dev_val.push_back(std::abs(pd.eigenvalue - 1.0));
      dev_vec.push_back(pd.eigvec_deviation);
      R.le("B.eigenvalue", in, dev_val.back(), etol);
      R.le("B.eigenvector", in, dev_vec.back(), etol);
      R.info("B.spectral_gap", in, pd.gap);
    }
    if (eig_orders.size() >= 2) {
      const double shrink = R.tol("shrink_factor");
      const std::string in = "orders=" + std::to_string(eig_orders.front()) + "->" + std::to_string(eig_orders.back());
      auto ratio = [](double a, double b) { return b > 0 ? a / b : (a > 0 ? INFINITY : 1.0); };
      R.ge("B.eigenvalue_shrink", in, ratio(dev_val.front(), dev_val.back()), shrink);
      R.ge("B.eigenvector_shrink", in, ratio(dev_vec.front(), dev_vec.back()), shrink);
    }
  }

  {
    const GridPtr g = RadialGrid::make(order);
    const ProjectionData P = riesz_setup(g);
    const StatePair f = P.complement(random_shape(ctx.seed ^ 0x6, order, 1.0));
    std::vector<double> all = {0.0};
    all.insert(all.end(), taus.begin(), taus.end());
    const InversionResult inv = laplace_invert(f, all, ContourSpec{}, PotentialSpec::linearised(), ctx.parallelism);
    EvolveOptions o;
    o.sample_every = step;
    const Trajectory tr = linear_evolve(f, tmax, 0.0, PotentialSpec::linearised(), o);
    R.le("G.identity_at_zero", "order=" + std::to_string(order), l2rel(inv.values[0], f.first), tol);
    double w = 0.0;
    for (size_t k = 0; k < taus.size(); ++k)
      w = std::max(w, l2rel(inv.values[k + 1], tr.states[static_cast<size_t>(std::lround(taus[k] / step))].first));
    R.le("G.inversion_vs_stepping", "order=" + std::to_string(order) + ";taus=" + c.str(S, "taus"), w, tol);
    R.info("G.contour_tail_change", "omega_max=200", inv.tail_change);
  }

  {
    const GridPtr g = RadialGrid::make(free_order);
    FreeWave5D fw;
    fw.f = [](double r) { return 1.0 + 0.5 * r * r - 0.2 * std::pow(r, 4); };
    fw.df = [](double r) { return r - 0.8 * std::pow(r, 3); };
    fw.d2f = [](double r) { return 1.0 - 2.4 * r * r; };
    fw.g = [](double r) { return 0.3 - r * r; };
    fw.dg = [](double r) { return -2.0 * r; };
    const StatePair st{RadialField::from_function(g, [&](double r) { return cplx(fw.f(r)); }),
                       RadialField::from_function(g, [&](double r) { return cplx(fw.g(r)); })};
    const InversionResult inv = laplace_invert(st, taus, ContourSpec{}, PotentialSpec::none(), ctx.parallelism);
    EvolveOptions o;
    o.sample_every = step;
    const Trajectory tr = linear_evolve(st, tmax, 0.0, PotentialSpec::none(), o);
    double a = 0, b = 0, d = 0;
    for (size_t k = 0; k < taus.size(); ++k) {
      const double L = std::exp(-taus[k]), t = 1.0 - L;
      const RadialField phys =
          RadialField::from_function(g, [&](double r) { return cplx(std::pow(L, 1.5) * fw.u(t, L * r)); });
      const StatePair& ev = tr.states[static_cast<size_t>(std::lround(taus[k] / step))];
      a = std::max(a, l2rel(inv.values[k], phys));
      b = std::max(b, l2rel(ev.first, phys));
      d = std::max(d, l2rel(inv.values[k], ev.first));
    }
    const std::string in = "V=0;order=" + std::to_string(free_order);
    R.le("G.free_inversion_vs_physical", in, a, tol);
    R.le("G.free_stepping_vs_physical", in, b, tol);
    R.le("G.free_inversion_vs_stepping", in, d, tol);
  }

  {
    const GridPtr g = RadialGrid::make(stable_order);
    const ProjectionData P = riesz_setup(g);
    std::vector<StatePair> data;
    for (int k = 0; k < samples; ++k)
      data.push_back(P.complement(random_shape(splitmix64(ctx.seed + 0x4800 + k), stable_order, 1.0)));
    EvolveOptions o;
    o.sample_every = 0.1;
    const auto tr = linear_evolve_batch(data, tau_max, PotentialSpec::linearised(), o);
    double slope = -INFINITY, growth = 0.0;
    for (const auto& t : tr) {
      slope = std::max(slope, log_norm_slope(t));
      growth = std::max(growth, t.meta.max_growth);
    }
    const std::string in = "samples=" + std::to_string(samples) + ";order=" + std::to_string(stable_order) +
                           ";tau_max=" + fmt(tau_max);
    R.le("H.max_log_norm_slope", in, slope, R.tol("slope_max"));
    R.le("H.max_growth", in, growth, R.tol("growth_max"));
  }
  return R.done();
}

// ---- kernel-bounds ---------------------------------------------------------

SuiteReport kernel_bounds_suite(const RunContext& ctx, RunManifest& m) {
  const Config& c = *ctx.cfg;
  const std::string S = "kernel-bounds";
  const std::vector<double> taus = c.list(S, "taus"), ss = c.list(S, "s_values");
  const double om = c.num(S, "omega_max"), omc = c.num(S, "omega_check"), fit_s = c.num(S, "fit_s");
  if (!(om > 0 && omc > om)) throw ConfigError(S + ": need 0 < omega_max < omega_check");
  for (double s : ss)
    if (!(s > 0 && s < 1)) throw ConfigError(S + ".s_values: values must lie in (0, 1)");
  if (std::find(ss.begin(), ss.end(), fit_s) == ss.end()) throw ConfigError(S + ".fit_s: must be one of s_values");
  Rows R(S, c, m);

  if (ctx.validate_only) return R.done();
  KernelQuadrature q;
  q.omega_max = om;
  KernelQuadrature qc = q;
  qc.omega_max = omc;
  const KernelTable A(PotentialSpec::linearised(), q, ctx.parallelism);
  const KernelTable B(PotentialSpec::linearised(), qc, ctx.parallelism);

  double max_ratio = 0.0, change = 0.0;
  int nonfinite = 0, cells = 0;
  std::vector<std::vector<double>> fit;
  for (double s : ss) {
    const auto Ka = A.kernel_norms(s, taus), Kb = B.kernel_norms(s, taus);
    double kmax = 0.0;
    for (int n = 0; n < 6; ++n)
      for (double v : Kb[n]) kmax = std::max(kmax, v);
    for (int n = 0; n < 6; ++n)
      for (size_t k = 0; k < taus.size(); ++k) {
        ++cells;
        const double r = Ka[n][k] / kernel_bound(taus[k], s);
        if (!std::isfinite(r)) ++nonfinite;
        else max_ratio = std::max(max_ratio, r);
        if (Kb[n][k] > 1e-9 * kmax) change = std::max(change, std::abs(Ka[n][k] - Kb[n][k]) / Kb[n][k]);
      }
    for (int n = 0; n < 6; ++n) {
      std::vector<double> x, y;
      bool zero = true;
      for (size_t k = 0; k < taus.size(); ++k) {
        x.push_back(std::log(japanese(taus[k])));
        y.push_back(std::log(Ka[n][k]));
        zero = zero && Ka[n][k] == 0.0;
      }
      const std::string in = "n=" + std::to_string(n + 1) + ";s=" + fmt(s) + ";taus=" + c.str(S, "taus") +
                             (zero ? ";identically_zero" : "");
      const double slope = zero ? -INFINITY : fit_slope(x, y);
      if (s == fit_s) R.le("I.decay_exponent", in, slope, R.tol("decay_max"));
      else R.info("I.decay_exponent", in, slope);
    }
  }
  const std::string grid = "n=1..6;taus=" + c.str(S, "taus") + ";s=" + c.str(S, "s_values");
  R.truth("I.ratio_finite", grid + ";nonfinite=" + std::to_string(nonfinite) + "/" + std::to_string(cells), max_ratio,
          "all finite", nonfinite == 0);
  R.le("I.refinement_change", grid + ";omega_max=" + fmt(om) + "->" + fmt(omc), change, R.tol("refine_tol"));
  return R.done();
}

// ---- osc-check -------------------------------------------------------------

SuiteReport osc_check_suite(const RunContext& ctx, RunManifest& m) {
  const Config& c = *ctx.cfg;
  const std::string S = "osc-check";
  const std::vector<double> alphas = c.list(S, "alphas"), rhos = c.list(S, "rhos"), ea = c.list(S, "exponent_a");
  const double a0 = c.num(S, "a_min"), a1 = c.num(S, "a_max");
  const int np = positive_int(c, S, "a_points", 2);
  const std::vector<int> eorders = orders(c, S, "envelope_orders");
  const int esamples = positive_int(c, S, "envelope_samples"), worder = positive_int(c, S, "weighted_order", 4);
  if (!(a0 > 0 && a1 > a0)) throw ConfigError(S + ": need 0 < a_min < a_max");
  if (ea.size() != 2 || !(ea[0] > 0 && ea[1] > ea[0])) throw ConfigError(S + ".exponent_a: need two increasing values");
  for (double a : alphas)
    if (!(a > 0 && a < 1)) throw ConfigError(S + ".alphas: values must lie in (0, 1)");
  Rows R(S, c, m);
  m.grid_orders[S] = {eorders.begin(), eorders.end()};
  m.grid_orders[S].push_back(worder);

  if (ctx.validate_only) return R.done();
  std::vector<double> as;
  for (int i = 0; i < np; ++i) as.push_back(a0 * std::pow(a1 / a0, static_cast<double>(i) / (np - 1)));
  const std::string arange = "a=[" + fmt(a0) + "," + fmt(a1) + "];points=" + std::to_string(np);
  auto sweep = [&](SymbolFamily f, double param, const std::string& label) {
    double sup = 0.0;
    bool ok = true;
    for (double a : as) {
      const OscResult r = osc_decay_check(f, a, param);
      ok = ok && r.converged && std::isfinite(r.ratio);
      sup = std::max(sup, r.ratio);
    }
    R.truth("J.bounded." + symbol_family_name(f), arange + label, sup, "finite, converged", ok);
  };
  sweep(SymbolFamily::odd_rational, 0.5, "");
  sweep(SymbolFamily::odd_rational_sq, 0.5, "");
  sweep(SymbolFamily::mixed, 0.5, "");
  for (double al : alphas) {
    sweep(SymbolFamily::even_alpha, al, ";alpha=" + fmt(al));
    sweep(SymbolFamily::even_alpha_fp, al, ";alpha=" + fmt(al));
  }
  for (double rho : rhos) {
    sweep(SymbolFamily::cutoff_rho1, rho, ";rho=" + fmt(rho));
    sweep(SymbolFamily::cutoff_rho2, rho, ";rho=" + fmt(rho));
  }
  const double etol = R.tol("exponent_tol");
  for (double al : alphas) {
    const double i1 = osc_decay_check(SymbolFamily::even_alpha_fp, ea[0], al).integral;
    const double i2 = osc_decay_check(SymbolFamily::even_alpha_fp, ea[1], al).integral;
    const double slope = std::log(i2 / i1) / std::log(ea[1] / ea[0]);
    R.in("J.small_a_exponent", "alpha=" + fmt(al) + ";a=" + c.str(S, "exponent_a"), slope, -(1 - al) - etol,
         -(1 - al) + etol);
  }

  std::vector<NormEnvelope> env;
  for (int n : eorders) {
    env.push_back(energy_equivalence_envelope(ctx.seed ^ 0x22, esamples, n));
    R.info("L.energy_ratio_min", "order=" + std::to_string(n), env.back().lo);
    R.info("L.energy_ratio_max", "order=" + std::to_string(n), env.back().hi);
  }
  double drift = 0.0;
  for (size_t k = 1; k < env.size(); ++k)
    drift = std::max({drift, std::abs(env[k].lo - env[k - 1].lo) / env[k].lo,
                      std::abs(env[k].hi - env[k - 1].hi) / env[k].hi});
  R.le("L.envelope_drift", "samples=" + std::to_string(esamples) + ";orders=" + c.str(S, "envelope_orders"), drift,
       R.tol("envelope_drift"));

  double l2 = 0.0, l5 = 0.0;
  bool finite = true;
  for (int k = 0; k < esamples; ++k) {
    const StatePair s = random_shape(splitmix64(ctx.seed + 0x4700 + k), worder, 1.0);
    const WeightedNormReport w = weighted_norm_inequalities(s.first);
    finite = finite && std::isfinite(w.l2_ratio) && std::isfinite(w.l5_ratio);
    l2 = std::max(l2, w.l2_ratio);
    l5 = std::max(l5, w.l5_ratio);
  }
  const std::string win = "samples=" + std::to_string(esamples) + ";order=" + std::to_string(worder);
  R.truth("L.weighted_l2_ratio", win, l2, "finite", finite && std::isfinite(l2));
  R.truth("L.weighted_l5_ratio", win, l5, "finite", finite && std::isfinite(l5));

  // change of variables: cylinder integral vs physical cone integral
  const GridPtr g = RadialGrid::make(16);
  const double T = 1.2, amp = 0.3, tmax = 1.5;
  auto f = [&](double tau, double rho) { return amp * std::exp(-tau) * (1.0 + rho * rho); };
  Trajectory tr;
  for (int k = 0; k <= 2000; ++k) {
    const double tau = tmax * k / 2000;
    tr.times.push_back(tau);
    tr.states.push_back(StatePair(RadialField::from_function(g, [&](double r) { return cplx(f(tau, r)); }),
                                  RadialField::zero(g)));
  }
  const double cyl = strichartz_diagnostic(tr);
  const BlowupProfile prof{T};
  const double phys = cone_strichartz_integral(
      [&](double t, double r) {
        const double L = T - t;
        return prof.u(t) + std::pow(L, -1.5) * f(std::log(T / L), r / L);
      },
      T, T * (1.0 - std::exp(-tmax)));
  R.le("L.strichartz_identity", "T=1.2;tau_max=1.5", std::abs(cyl - phys) / phys, R.tol("identity_tol"));
  return R.done();
}

// ---- stability-sweep -------------------------------------------------------

SuiteReport stability_sweep_suite(const RunContext& ctx, RunManifest& m) {
  const Config& c = *ctx.cfg;
  const std::string S = "stability-sweep";
  const std::vector<double> deltas = c.list(S, "deltas"), probes = c.list(S, "probe_deltas");
  long order = c.integer(S, "grid_order");
  if (order == 0) order = c.integer("run", "grid_order");
  if (order < 4 || order > 1024) throw ConfigError(S + ": bad grid order");
  const double window = c.num(S, "window"), tau_max = c.num(S, "tau_max"), detune = c.num(S, "detune");
  const double detune_tau = c.num(S, "detune_tau");
  for (double d : deltas)
    if (!(d > 0)) throw ConfigError(S + ".deltas: values must be positive");
  for (double d : probes)
    if (!(d > 0)) throw ConfigError(S + ".probe_deltas: values must be positive");
  if (!(window > 0 && window < 1)) throw ConfigError(S + ".window: must lie in (0, 1)");
  if (!(tau_max > 0 && detune_tau > 0 && detune > 0)) throw ConfigError(S + ": times and detuning must be positive");
  Rows R(S, c, m);
  m.grid_orders[S] = {order};
  const double rlo = R.tol("ratio_lo"), rhi = R.tol("ratio_hi"), dfac = R.tol("detune_factor"),
               bfac = R.tol("bound_factor");
  const double runtime_limit = R.tol("runtime_limit");
  if (ctx.validate_only) return R.done();

  ExperimentConfig base;
  base.grid_order = static_cast<int>(order);
  base.window = window;
  base.tau_max = tau_max;
  base.seed = ctx.seed;
  base.shape = random_shape(ctx.seed, static_cast<int>(order), base.data_radius());
  const ProjectionData pd = riesz_setup(RadialGrid::make(static_cast<int>(order)));

  struct Out {
    StabilityReport rep;
    bool ok = false;
    std::string error;
    double tuned5 = 0.0, off5 = INFINITY;
  };
  const auto t0 = Clock::now();
  std::vector<Out> out(deltas.size());
  parallel_for(static_cast<int>(deltas.size()), ctx.parallelism, [&](int i) {
    ExperimentConfig cfg = base;
    cfg.amplitude = deltas[i];
    try {
      out[i].rep = tune_blowup_time(cfg);
      out[i].ok = true;
    } catch (const ConvergenceError& e) {
      out[i].error = e.what();
      return;
    }
    cfg.tau_max = detune_tau;
    auto coef = [&](double T) {
      const Trajectory t = evolve_nonlinear(cfg, T);
      return std::abs(pd.coefficient(t.states.back()).real());
    };
    out[i].tuned5 = coef(out[i].rep.T_star);
    for (double s : {-1.0, 1.0}) {
      const double T = out[i].rep.T_star + s * detune;
      if (std::abs(T - 1.0) <= window) out[i].off5 = std::min(out[i].off5, coef(T));
    }
  });
  const double elapsed = seconds_since(t0);

  for (size_t i = 0; i < deltas.size(); ++i) {
    const std::string in = "delta=" + fmt(deltas[i]) + ";order=" + std::to_string(order) + ";tau_max=" + fmt(tau_max);
    const Out& o = out[i];
    if (!o.ok) {
      R.truth("K.tune", in + ";error=" + o.error, NAN, "converged, T* in [0.9, 1.1]", false);
      continue;
    }
    const StabilityReport& r = o.rep;
    R.truth("K.tune", in, r.T_star, "converged, T* in [0.9, 1.1]",
            r.converged && r.T_star >= 0.9 && r.T_star <= 1.1)
        .extras = {{"delta", deltas[i]}, {"T_star", r.T_star}, {"strichartz_integral", r.strichartz_integral}};
    R.le("K.bounded", in, r.sup_H_norm / r.initial_H_norm, bfac);
    R.ge("K.detuned_growth", in + ";detune=" + fmt(detune) + ";tau=" + fmt(detune_tau), o.off5 / o.tuned5, dfac);
    R.le("K.tail_fraction", in, r.tail_fraction, 0.5);
    R.info("K.quadratic_constant", in, r.strichartz_integral / (deltas[i] * deltas[i]));
    R.info("K.correction_norm", in, r.correction);
    R.info("K.bisection_window", in, r.bracket);
  }
  for (size_t i = 0; i + 1 < deltas.size(); ++i) {
    if (!out[i].ok || !out[i + 1].ok) continue;
    const double ratio = out[i].rep.strichartz_integral / out[i + 1].rep.strichartz_integral;
    const double scale = std::pow(deltas[i] / deltas[i + 1], 2) / 4.0;  // window is stated for delta -> delta/2
    R.in("K.strichartz_ratio", "delta=" + fmt(deltas[i]) + "/" + fmt(deltas[i + 1]), ratio, rlo * scale, rhi * scale)
        .extras = {{"delta", deltas[i]}, {"ratio", ratio}};
  }
  if (ctx.timed) R.le("K.runtime_seconds", "order=" + std::to_string(order), elapsed, runtime_limit);

  // largest amplitude for which tuning still succeeds
  std::vector<double> cand = deltas;
  cand.insert(cand.end(), probes.begin(), probes.end());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::vector<int> ok(cand.size(), 0);
  parallel_for(static_cast<int>(cand.size()), ctx.parallelism, [&](int i) {
    for (size_t j = 0; j < deltas.size(); ++j)
      if (deltas[j] == cand[i]) {
        ok[i] = out[j].ok && out[j].rep.converged;
        return;
      }
    ExperimentConfig cfg = base;
    cfg.amplitude = cand[i];
    try {
      ok[i] = tune_blowup_time(cfg).converged;
    } catch (const ConvergenceError&) {
      ok[i] = 0;
    }
  });
  double largest = 0.0;
  for (size_t i = 0; i < cand.size(); ++i)
    if (ok[i]) largest = cand[i];
  R.info("K.largest_tunable_delta", "candidates=" + std::to_string(cand.size()) + ";order=" + std::to_string(order),
         largest);
  return R.done();
}

using SuiteFn = SuiteReport (*)(const RunContext&, RunManifest&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"spectrum-scan", spectrum_scan_suite},   {"green-verify", green_verify_suite},
      {"semigroup-verify", semigroup_verify_suite}, {"kernel-bounds", kernel_bounds_suite},
      {"osc-check", osc_check_suite},           {"stability-sweep", stability_sweep_suite},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> n = [] {
    std::vector<std::string> v;
    for (const auto& [k, f] : registry()) v.push_back(k);
    return v;
  }();
  return n;
}

std::vector<std::string> expand_suites(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  for (const auto& n : names) {
    if (n == "all") {
      for (const auto& s : suite_names()) add(s);
    } else if (std::find(suite_names().begin(), suite_names().end(), n) != suite_names().end()) {
      add(n);
    } else {
      throw ConfigError("unknown suite '" + n + "'");
    }
  }
  return out;
}

SuiteReport run_suite(const std::string& name, const RunContext& ctx, RunManifest& m) {
  for (const auto& [k, f] : registry())
    if (k == name) return f(ctx, m);
  throw ConfigError("unknown suite '" + name + "'");
}

RunManifest run_experiment(const Config& cfg, const std::vector<std::string>& suites) {
  const auto t0 = Clock::now();
  const std::vector<std::string> names = expand_suites(suites);
  RunManifest m;
  m.version = tool_version();
  m.seed = cfg.u64("run", "seed");
  m.config = cfg.values();
  m.timed = cfg.flag("run", "record_timing");
  const long par = cfg.integer("run", "parallelism");
  if (par < 1 || par > 1024) throw ConfigError("run.parallelism: out of range");
  const long go = cfg.integer("run", "grid_order");
  if (go < 4 || go > 1024) throw ConfigError("run.grid_order: out of range");
  // every numeric default must stay numeric
  for (const auto& [sec, keys] : config_defaults())
    for (const auto& [key, def] : keys) {
      if (key == "suites" || key == "record_timing") continue;
      cfg.list(sec, key);
    }
  RunContext ctx{&cfg, m.seed, static_cast<int>(par), m.timed, true};
  RunManifest scratch;
  for (const auto& n : names) run_suite(n, ctx, scratch);
  ctx.validate_only = false;
  for (const auto& n : names) m.suites.push_back(run_suite(n, ctx, m));
  if (m.timed) m.wall_clock_seconds = seconds_since(t0);
  return m;
}

}  // namespace conelab::harness
