#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "conelab/quadrature.hpp"
#include "conelab/semigroup.hpp"

using namespace conelab;

namespace {

using Fn = std::function<double(double)>;

double l2rel(const RadialField& a, const RadialField& b) { return norm_l2(a - b) / norm_l2(b); }

// even polynomial data in r with random coefficients
StatePair random_state(const GridPtr& g, std::mt19937_64& rng, int deg = 6) {
  std::normal_distribution<double> nd;
  std::vector<double> c1(deg), c2(deg);
  for (int i = 0; i < deg; ++i) {
    c1[i] = nd(rng) / (1.0 + i);
    c2[i] = nd(rng) / (1.0 + i);
  }
  auto poly = [](const std::vector<double>& c) {
    return [c](double r) {
      double s = 0, p = 1;
      for (double ci : c) s += ci * p, p *= r * r;
      return cplx(s);
    };
  };
  return {RadialField::from_function(g, poly(c1)), RadialField::from_function(g, poly(c2))};
}

// Free radial wave equation in five dimensions, u_tt = u_rr + (4/r) u_r, from
// u(0) = f, u_t(0) = g.  w = 3 r u + r^2 u_r solves the 1D wave equation, so
// d'Alembert gives w and r^3 u = int_0^r s w(s) ds recovers u.
struct FreeWave5D {
  Fn f, df, d2f, g, dg;
  double W0(double x) const { return 3 * x * f(x) + x * x * df(x); }
  double dW0(double x) const { return 3 * f(x) + 5 * x * df(x) + x * x * d2f(x); }
  double W1(double x) const { return 3 * x * g(x) + x * x * dg(x); }
  double w(double t, double r) const {
    const double I = quad::integrate_real([&](double y) { return W1(y); }, r - t, r + t);
    return 0.5 * (W0(r + t) + W0(r - t)) + 0.5 * I;
  }
  double wt(double t, double r) const {
    return 0.5 * (dW0(r + t) - dW0(r - t)) + 0.5 * (W1(r + t) + W1(r - t));
  }
  double u(double t, double r) const {
    return quad::integrate_real([&](double s) { return s * w(t, s); }, 0.0, r) / (r * r * r);
  }
  double ut(double t, double r) const {
    return quad::integrate_real([&](double s) { return s * wt(t, s); }, 0.0, r) / (r * r * r);
  }
};

}  // namespace

TEST_CASE("operator: constants map to the eigenfunction relation") {
  GridPtr g = RadialGrid::make(12);
  const StatePair e{RadialField::constant(g, 2.0), RadialField::constant(g, 5.0)};
  const StatePair Le = apply_linear_operator(e, PotentialSpec::linearised());
  CHECK(norm_state_H(Le - e) < 1e-10);
  // free operator: L (1, 0) = (-3/2, 0)
  const StatePair one{RadialField::constant(g, 1.0), RadialField::zero(g)};
  const StatePair L1 = apply_linear_operator(one, PotentialSpec::none());
  CHECK(norm_state_H(L1 - one * (-1.5)) < 1e-10);
}

TEST_CASE("riesz projection: algebra and the eigenvalue at 1") {
  GridPtr g = RadialGrid::make(32);
  const ProjectionData P = riesz_setup(g);
  CHECK(std::abs(P.eigenvalue - 1.0) < 1e-6);
  CHECK(P.gap > 1.0);
  CHECK(P.eigvec_deviation < 1e-6);
  CHECK(std::abs(P.coefficient(P.g) - 1.0) < 1e-10);
  CHECK(norm_state_H(P.project(P.g) - P.g) < 1e-10);
  CHECK(norm_state_H(P.complement(P.g)) < 1e-10);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 5; ++k) {
    const StatePair f = random_state(g, rng);
    const double nf = norm_state_H(f);
    CHECK(norm_state_H(P.project(P.complement(f))) < 1e-10 * nf);
    CHECK(norm_state_H(P.project(P.project(f)) - P.project(f)) < 1e-10 * nf);
  }
  for (int n : {64, 128}) {
    const ProjectionData Q = riesz_setup(RadialGrid::make(n));
    CAPTURE(n);
    CHECK(std::abs(Q.eigenvalue - 1.0) < 1e-6);
    CHECK(Q.eigvec_deviation < 1e-6);
  }
}

TEST_CASE("linear_evolve: unstable mode, zero state, semigroup property") {
  GridPtr g = RadialGrid::make(16);
  const PotentialSpec V = PotentialSpec::linearised();
  const StatePair e{RadialField::constant(g, 2.0), RadialField::constant(g, 5.0)};
  const Trajectory te = linear_evolve(e, 3.0, 0.0, V);
  CHECK(std::abs(log_norm_slope(te) - 1.0) < 0.01);
  CHECK(std::abs(norm_state_H(te.states.back()) / norm_state_H(e) - std::exp(3.0)) < 1e-6 * std::exp(3.0));

  const Trajectory tz = linear_evolve(StatePair::zero(g), 1.0, 0.0, V);
  for (const auto& s : tz.states) CHECK(norm_state_H(s) == 0.0);

  std::mt19937_64 rng(11);
  const StatePair f = random_state(g, rng);
  EvolveOptions o;
  o.sample_every = 0.25;
  const Trajectory a = linear_evolve(f, 1.5, 0.0, V, o);
  const Trajectory b1 = linear_evolve(f, 0.5, 0.0, V, o);
  const Trajectory b2 = linear_evolve(b1.states.back(), 1.0, 0.0, V, o);
  CHECK(a.meta.dt == doctest::Approx(b1.meta.dt));
  CHECK(norm_state_H(a.states.back() - b2.states.back()) < 1e-10 * norm_state_H(a.states.back()));
  for (size_t i = 1; i < a.times.size(); ++i) CHECK(a.times[i] > a.times[i - 1]);
}

TEST_CASE("linear_evolve: stable subspace stays bounded") {
  GridPtr g = RadialGrid::make(16);
  const ProjectionData P = riesz_setup(g);
  std::mt19937_64 rng(3);
  std::vector<StatePair> data;
  for (int k = 0; k < 6; ++k) data.push_back(P.complement(random_state(g, rng)));
  const auto tr = linear_evolve_batch(data, 10.0);
  for (const auto& t : tr) {
    CHECK(log_norm_slope(t) <= 0.01);
    CHECK(t.meta.max_growth <= 5.0);
  }
}

TEST_CASE("linear_evolve: instability detector") {
  GridPtr g = RadialGrid::make(16);
  std::mt19937_64 rng(5);
  const StatePair f = random_state(g, rng);
  EvolveOptions o;
  o.sample_every = 0.5;
  CHECK_THROWS_AS(linear_evolve(f, 2.0, 0.2, PotentialSpec::linearised(), o), ConvergenceError);
}

TEST_CASE("laplace_invert: identity at 0 and agreement with time stepping") {
  GridPtr g = RadialGrid::make(16);
  const ProjectionData P = riesz_setup(g);
  std::mt19937_64 rng(21);
  const StatePair f = P.complement(random_state(g, rng));
  const std::vector<double> taus = {0.0, 0.5, 1.0, 2.0};
  const InversionResult inv = laplace_invert(f, taus);
  CHECK(inv.tail_change < 1e-3);
  EvolveOptions o;
  o.sample_every = 0.5;
  const Trajectory tr = linear_evolve(f, 2.0, 0.0, PotentialSpec::linearised(), o);
  CHECK(l2rel(inv.values[0], f.first) < 1e-3);
  for (int k = 1; k < 4; ++k) {
    CAPTURE(taus[k]);
    CHECK(l2rel(inv.values[k], tr.states[static_cast<size_t>(taus[k] / 0.5)].first) < 1e-3);
  }
}

TEST_CASE("laplace_invert: free case matches the physical wave evolution") {
  GridPtr g = RadialGrid::make(12);
  FreeWave5D fw;
  fw.f = [](double r) { return 1.0 + 0.5 * r * r - 0.2 * std::pow(r, 4); };
  fw.df = [](double r) { return r - 0.8 * std::pow(r, 3); };
  fw.d2f = [](double r) { return 1.0 - 2.4 * r * r; };
  fw.g = [](double r) { return 0.3 - r * r; };
  fw.dg = [](double r) { return -2.0 * r; };
  const StatePair st{RadialField::from_function(g, [&](double r) { return cplx(fw.f(r)); }),
                     RadialField::from_function(g, [&](double r) { return cplx(fw.g(r)); })};
  const std::vector<double> taus = {0.5, 1.0, 2.0};
  ContourSpec c;
  const InversionResult inv = laplace_invert(st, taus, c, PotentialSpec::none());
  EvolveOptions o;
  o.sample_every = 0.5;
  const Trajectory tr = linear_evolve(st, 2.0, 0.0, PotentialSpec::none(), o);
  for (size_t k = 0; k < taus.size(); ++k) {
    const double tau = taus[k], L = std::exp(-tau), t = 1.0 - L;
    const RadialField phys = RadialField::from_function(
        g, [&](double r) { return cplx(std::pow(L, 1.5) * fw.u(t, L * r)); });
    const RadialField phys2 = RadialField::from_function(
        g, [&](double r) { return cplx(std::pow(L, 2.5) * fw.ut(t, L * r)); });
    const StatePair& ev = tr.states[static_cast<size_t>(tau / 0.5)];
    CAPTURE(tau);
    CHECK(l2rel(inv.values[k], phys) < 1e-3);
    CHECK(l2rel(ev.first, phys) < 1e-3);
    CHECK(l2rel(ev.second, phys2) < 1e-3);
    CHECK(l2rel(inv.values[k], ev.first) < 1e-3);
  }
}

TEST_CASE("laplace_invert: contour validation") {
  GridPtr g = RadialGrid::make(8);
  ContourSpec c;
  c.eps = 0.0;
  CHECK_THROWS_AS(laplace_invert(StatePair::zero(g), 1.0, c), DomainError);
  c = ContourSpec{};
  c.omega_max = -1;
  CHECK_THROWS_AS(laplace_invert(StatePair::zero(g), 1.0, c), DomainError);
  CHECK_THROWS_AS(laplace_invert(StatePair::zero(g), -1.0), DomainError);
}

TEST_CASE("kernel bounds: formula, zero potential, finiteness") {
  CHECK(kernel_bound(1.0, 0.5) ==
        doctest::Approx(0.25 / std::sqrt(0.5) * std::pow(1.0 - std::log(2.0), -0.1) /
                        std::sqrt(1.0 + std::pow(1.0 - std::log(2.0), 2))));
  CHECK_THROWS_AS(kernel_bound(-std::log1p(-0.5), 0.5), DomainError);
  CHECK_THROWS_AS(kernel_bound(1.0, 1.0), DomainError);

  KernelQuadrature q;
  q.omega_max = 30.0;
  q.rho_panels = 8;
  KernelTable zero(PotentialSpec::none(), q);
  for (int n = 1; n <= 6; ++n) CHECK(zero.ratio(n, 1.0, 0.5) == 0.0);

  KernelTable T(PotentialSpec::linearised(), q);
  const auto K = T.kernel_norms(0.5, {0.5, 1.0, 2.0});
  for (int n = 0; n < 6; ++n)
    for (double v : K[n]) CHECK(std::isfinite(v));
  CHECK(T.kernel_norm(2, 1.0, 0.5) == doctest::Approx(K[1][1]).epsilon(1e-12));
  // piece 4 needs s <omega> < delta0, impossible at s = 0.5
  for (double v : K[3]) CHECK(v == 0.0);
  CHECK_THROWS_AS(T.kernel_norm(7, 1.0, 0.5), DomainError);
}

TEST_CASE("oscillatory integrals: closed forms") {
  for (double a : {0.01, 0.3, 1.0, 5.0, 30.0}) {
    CAPTURE(a);
    // int e^{iaw} w/(1+w^2)^2 dw = i pi a e^{-|a|} / 2
    const OscResult r = osc_decay_check(SymbolFamily::odd_rational_sq, a);
    CHECK(r.converged);
    CHECK(std::abs(r.integral - kPi * a * std::exp(-a) / 2.0) < 1e-7 * kPi * a * std::exp(-a) + 1e-15);
    // int e^{iaw} w/(1+w^2) dw = i pi sign(a) e^{-|a|}
    const OscResult o = osc_decay_check(SymbolFamily::odd_rational, a);
    CHECK(std::abs(o.integral - kPi * std::exp(-a)) < 1e-6 * kPi * std::exp(-a) + 1e-15);
  }
  // <w>^{-alpha}: 2 sqrt(pi)/Gamma(alpha/2) (a/2)^{(alpha-1)/2} K_{(1-alpha)/2}(a)
  for (double al : {0.3, 0.9})
    for (double a : {0.01, 0.1, 1.0, 4.0}) {
      const double nu = (1.0 - al) / 2.0;
      const double exact = 2.0 * std::sqrt(kPi) / std::tgamma(al / 2.0) * std::pow(a / 2.0, -nu) *
                           std::cyl_bessel_k(nu, a);
      const OscResult r = osc_decay_check(SymbolFamily::even_alpha, a, al);
      CAPTURE(al);
      CAPTURE(a);
      CHECK(r.integral == doctest::Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("oscillatory integrals: rates") {
  for (double al : {0.3, 0.9}) {
    const double a1 = 1e-3, a2 = 1e-2;
    const double i1 = osc_decay_check(SymbolFamily::even_alpha_fp, a1, al).integral;
    const double i2 = osc_decay_check(SymbolFamily::even_alpha_fp, a2, al).integral;
    const double slope = std::log(i2 / i1) / std::log(a2 / a1);
    CAPTURE(al);
    CHECK(std::abs(slope + (1.0 - al)) < 0.03);
  }
  // smooth symbol: decay faster than <a>^{-2}
  CHECK(osc_decay_check(SymbolFamily::mixed, 50.0).ratio < 1e-10);
  for (double rho : {0.05, 0.3, 0.8})
    for (double a : {0.01, 1.0, 100.0}) {
      CHECK(std::isfinite(osc_decay_check(SymbolFamily::cutoff_rho1, a, rho).ratio));
      CHECK(osc_decay_check(SymbolFamily::cutoff_rho2, a, rho).converged);
    }
  CHECK_THROWS_AS(osc_decay_check(SymbolFamily::odd_rational, 0.0), DomainError);
}

TEST_CASE("weighted norms") {
  GridPtr g = RadialGrid::make(24);
  const WeightedNormReport one = weighted_norm_inequalities(RadialField::constant(g, 1.0));
  CHECK(one.l2_ratio == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(std::isfinite(one.l5_ratio));
  CHECK_FALSE(one.near_extremal);
  const WeightedNormReport rough =
      weighted_norm_inequalities(RadialField::from_function(g, [](double r) { return cplx(std::pow(r, -0.25)); }));
  CHECK(std::isfinite(rough.l2_ratio));
  CHECK(std::isfinite(rough.l5_ratio));
  CHECK(rough.near_extremal);
}
