#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "conelab/specfun.hpp"
#include "conelab/volterra.hpp"

using namespace conelab;

namespace {
double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

std::vector<PanelSpec> uniform(double a, double b, int m) {
  std::vector<PanelSpec> p;
  for (int i = 0; i < m; ++i) p.push_back({a + (b - a) * i / m, a + (b - a) * (i + 1) / m});
  return p;
}

// Closed form for the constant potential -35/4: with a = (lambda+5)/2,
// b = (lambda-1)/2,  w0 = 2^{-1/2-lambda} (1 + 2 lambda) Gamma(3/2) Gamma(lambda+1/2)
// / (Gamma(a) Gamma(b)).  Computed from Gamma alone, independently of 2F1.
cplx w0_oracle(cplx lam) {
  const cplx a = 0.5 * (lam + 5.0), b = 0.5 * (lam - 1.0);
  return std::exp(-(0.5 + lam) * std::log(2.0)) * (1.0 + 2.0 * lam) * sf::gamma_fn(1.5) *
         sf::gamma_fn(lam + 0.5) * sf::rgamma(a) * sf::rgamma(b);
}
}  // namespace

TEST_CASE("volterra: constant general kernel, both orientations") {
  const double k = 1.3, X = 1.7;
  for (Orientation o : {Orientation::forward, Orientation::backward}) {
    VolterraProblem p;
    p.orientation = o;
    p.panels = uniform(0.0, X, 4);
    p.general = [k](double, double) { return cplx(k); };
    VolterraSolution s = volterra_solve(p);
    for (double x : {0.0, 0.3, 0.91, 1.4, X}) {
      const double expect = o == Orientation::forward ? std::exp(k * x) : std::exp(k * (X - x));
      CHECK(rel(s.value(x), expect) < 1e-12);
    }
    CHECK(s.iterations() > 1);
  }
}

TEST_CASE("volterra: separable rank-one kernel with derivative") {
  const cplx k(0.7, -2.0);
  VolterraProblem p;
  p.orientation = Orientation::backward;
  p.panels = uniform(0.0, 2.0, 3);
  p.separable.rank = 1;
  p.separable.a = [](double, cplx* a, cplx* da) { a[0] = 1.0; da[0] = 0.0; };
  p.separable.b = [k](double, cplx* b) { b[0] = k; };
  VolterraSolution s = volterra_solve(p);
  for (double x : {0.0, 0.5, 1.25, 2.0}) {
    CHECK(rel(s.value(x), std::exp(k * (2.0 - x))) < 1e-12);
    CHECK(rel(s.deriv(x), -k * std::exp(k * (2.0 - x))) < 1e-11);
  }
}

TEST_CASE("volterra: power-weighted end panel") {
  // h(x) = 1 + (1-x)^{1/2} int_x^1 (1-s)^{-1/2} h(s) ds has the smooth solution
  // h = 1 + sqrt(pi t) e^t erf(sqrt t),  t = 1 - x.
  VolterraProblem p;
  p.orientation = Orientation::backward;
  p.panels = uniform(0.0, 0.9, 3);
  p.panels.push_back({0.9, 1.0, PanelMap::identity, true});
  p.separable.rank = 1;
  p.separable.end_exponents = {-0.5};
  p.separable.a = [](double x, cplx* a, cplx* da) {
    a[0] = std::sqrt(1.0 - x);
    da[0] = -0.5 / std::sqrt(1.0 - x);
  };
  p.separable.b = [](double s, cplx* b) { b[0] = 1.0 / std::sqrt(1.0 - s); };
  VolterraSolution s = volterra_solve(p);
  for (double x : {0.0, 0.5, 0.9, 0.95, 0.999}) {
    const double t = 1.0 - x;
    CHECK(rel(s.value(x), 1.0 + std::sqrt(kPi * t) * std::exp(t) * std::erf(std::sqrt(t))) < 1e-12);
  }
}

TEST_CASE("volterra: panels must be contiguous") {
  VolterraProblem p;
  p.panels = {{0.0, 0.5}, {0.6, 1.0}};
  p.general = [](double, double) { return cplx(1.0); };
  CHECK_THROWS_AS(volterra_solve(p), DomainError);
}

TEST_CASE("fundamental: zero potential reduces to the free system") {
  const cplx lam(0.12, 3.0);
  FundamentalPair fp = build_u_pair(lam, PotentialSpec::none());
  CHECK(rel(fp.w0, 1.0) < 1e-12);
  CHECK(rel(compute_w0(lam, PotentialSpec::none()), 1.0) < 1e-15);
  for (double r : {0.05, 0.3, 0.7, 0.95}) {
    CHECK(rel(fp.u1(r), sf::free_fundamental(FreeSolutionKind::phi1, r, lam)) < 1e-10);
    CHECK(rel(fp.u0(r), sf::free_fundamental(FreeSolutionKind::phi0, r, lam)) < 1e-9);
  }
}

TEST_CASE("fundamental: w0 agrees with the Gamma closed form") {
  const PotentialSpec V = PotentialSpec::linearised();
  for (cplx lam : {cplx(0.0, 0.5), cplx(0.1, 1.0), cplx(0.25, 5.0), cplx(0.0, 20.0),
                   cplx(0.2, -7.0), cplx(0.25, 80.0), cplx(0.7, 0.0), cplx(2.2, 0.3)}) {
    const cplx w = compute_w0(lam, V);
    CAPTURE(lam);
    CHECK(std::abs(w - w0_oracle(lam)) < 1e-9 * std::max(1.0, std::abs(w0_oracle(lam))));
  }
  CHECK(std::abs(compute_w0(1.0, V)) < 1e-10);  // lambda = 1 is an eigenvalue
}

TEST_CASE("fundamental: solutions match the hypergeometric ones") {
  const PotentialSpec V = PotentialSpec::linearised();
  for (cplx lam : {cplx(0.15, 2.0), cplx(0.05, 12.0)}) {
    FundamentalPair fp = build_u_pair(lam, V);
    const cplx k1 = std::exp((0.5 - lam) * std::log(2.0)) * (1.0 + 2.0 * lam);
    const cplx k0 = -sf::wronskian_free(lam) / 6.0;
    for (double r : {0.01, 0.03, 0.2, 0.5, 0.8, 0.99}) {
      CAPTURE(r);
      CHECK(rel(fp.u1(r), k1 * sf::h1(r * r, lam)) < 1e-9);
      CHECK(rel(fp.u0(r), k0 * sf::h0(r * r, lam)) < 1e-9);
    }
  }
}

TEST_CASE("fundamental: Wronskian is constant and derivatives are consistent") {
  const PotentialSpec V = PotentialSpec::from_function([](double r) { return -8.75 + 2.0 * r * r; });
  const cplx lam(0.2, 4.0);
  FundamentalPair fp = build_u_pair(lam, V);
  const cplx ref = fp.W * fp.w0;
  for (double r : {0.02, 0.1, fp.rho_m, 0.4, 0.75, 0.97})
    CHECK(std::abs(fp.rescaled_wronskian(r) - ref) < 1e-9 * std::abs(ref));
  CHECK(rel(fp.W_v1_v1t, fp.W) < 1e-10);
  const double h = 1e-5;
  for (double r : {0.05, 0.3, 0.6, 0.9}) {
    CHECK(rel(fp.du0(r), (fp.u0(r + h) - fp.u0(r - h)) / (2 * h)) < 1e-6);
    CHECK(rel(fp.du1(r), (fp.u1(r + h) - fp.u1(r - h)) / (2 * h)) < 1e-6);
  }
  // continuity across the matching radius
  const double rm = fp.rho_m;
  CHECK(rel(fp.u0(rm * (1 + 1e-12)), fp.u0(rm)) < 1e-8);
  CHECK(rel(fp.u1(rm * (1 - 1e-12)), fp.u1(rm)) < 1e-8);
}

TEST_CASE("fundamental: degenerate lambda is rejected") {
  CHECK_THROWS_AS(build_u_pair(0.5, PotentialSpec::linearised()), DegenerateError);
}
