#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conelab/quadrature.hpp"

using namespace conelab;
using namespace conelab::quad;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  for (int n : {1, 2, 5, 16, 40}) {
    const Rule& g = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.w[i] * std::pow(g.x[i], k);
      double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("gauss-jacobi moments on [0,1]") {
  for (double beta : {0.5, 1.5, -0.5, 0.0}) {
    for (int n : {3, 20, 64}) {
      Rule r = gauss_jacobi_unit(n, beta);
      for (int k = 0; k <= 2 * n - 1; k += 3) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += r.w[i] * std::pow(r.x[i], k);
        CHECK(s == doctest::Approx(1.0 / (k + beta + 1.0)).epsilon(1e-12));
      }
      for (int i = 1; i < n; ++i) CHECK(r.x[i] > r.x[i - 1]);
    }
  }
}

TEST_CASE("cumulative GL matrix integrates the interpolant") {
  const int n = 12;
  const Rule& g = gauss_legendre(n);
  const MatR& S = gl_cumulative(n);
  VecR f(n);
  for (int i = 0; i < n; ++i) f[i] = std::cos(g.x[i]);
  VecR F = S * f;
  for (int i = 0; i < n; ++i) CHECK(F[i] == doctest::Approx(std::sin(g.x[i]) + std::sin(1.0)).epsilon(1e-12));
  VecR p = gl_partial_weights(n, 0.3);
  CHECK(p.dot(f) == doctest::Approx(std::sin(0.3) + std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("barycentric interpolation and differentiation") {
  const int n = 20;
  Rule r = gauss_jacobi_unit(n, 1.5);
  VecR w = barycentric_weights(r.x);
  VecR f = r.x.array().exp();
  CHECK(barycentric_eval(r.x, w, f, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  MatR D = differentiation_matrix(r.x, w);
  VecR df = D * f;
  CHECK((df - f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("adaptive integrators") {
  CHECK(integrate_real([](double x) { return std::exp(x); }, 0, 1) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  cplx v = integrate([](double x) { return std::exp(cplx(0, 5 * x)); }, 0, kPi);
  cplx ex = (std::exp(cplx(0, 5 * kPi)) - 1.0) / cplx(0, 5);
  CHECK(std::abs(v - ex) < 1e-13);
  // integrable endpoint singularities
  double a = integrate_tanh_sinh([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(a == doctest::Approx(2.0).epsilon(1e-12));
  // Near the right end the abscissae round onto b; the lost mass is ~sqrt(ulp).
  double b = integrate_tanh_sinh([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0);
  CHECK(b == doctest::Approx(2.0).epsilon(1e-7));
  double c = integrate_tanh_sinh([](double x) { return std::log(x); }, 0.0, 1.0);
  CHECK(c == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("power end rule reproduces weighted moments") {
  const double eta = 0.1;
  for (cplx mu : {cplx(-0.5, 0.0), cplx(-0.3, 20.0), cplx(0.0, 0.0)}) {
    PowerEndRule r = power_end_rule(16, eta, mu);
    // int_0^eta t^mu cos(t) dt against adaptive oracle in y = t^{mu+1}-free form
    VecC f(16);
    for (int j = 0; j < 16; ++j) f[j] = std::cos(r.t[j]);
    cplx got = r.total.dot(f.conjugate().conjugate());
    got = (r.total.array() * f.array()).sum();
    // substitution t = eta u^{1/(Re mu + 1)} removes the singularity
    const double p = 1.0 / (mu.real() + 1.0);
    cplx oracle = integrate(
        [&](double u) {
          if (u <= 0) return cplx(0.0);
          double t = eta * std::pow(u, p);
          double dt = eta * p * std::pow(u, p - 1.0);
          return std::exp(mu * std::log(t)) * std::cos(t) * dt;
        },
        0.0, 1.0, 1e-15, 1e-14);
    CHECK(std::abs(got - oracle) < 1e-12 * std::abs(oracle) + 1e-14);
    cplx half = (r.cum.row(7).transpose().array() * f.array()).sum();
    cplx oh = integrate(
        [&](double u) {
          if (u <= 0) return cplx(0.0);
          double t = r.t[7] * std::pow(u, p);
          double dt = r.t[7] * p * std::pow(u, p - 1.0);
          return std::exp(mu * std::log(t)) * std::cos(t) * dt;
        },
        0.0, 1.0, 1e-15, 1e-14);
    CHECK(std::abs(half - oh) < 1e-11 * std::abs(oh) + 1e-14);
  }
}

TEST_CASE("wynn epsilon accelerates an alternating series") {
  std::vector<cplx> s;
  cplx acc = 0.0;
  for (int k = 0; k < 20; ++k) {
    acc += (k % 2 == 0 ? 1.0 : -1.0) / (k + 1.0);
    s.push_back(acc);
  }
  double err = 0.0;
  cplx v = wynn_epsilon(s, &err);
  CHECK(std::abs(v - std::log(2.0)) < 1e-12);
}

TEST_CASE("fourier integral of a rational symbol") {
  // int e^{i a w} / (1 + w^2) dw = pi e^{-|a|}
  for (double a : {0.5, 2.0, 10.0}) {
    FourierResult r = fourier_integral([](double w) { return cplx(1.0 / (1.0 + w * w)); }, a, {});
    CHECK(std::abs(r.value - kPi * std::exp(-a)) < 1e-10);
  }
  // odd symbol: int e^{i a w} w/(1+w^2)^2 dw = (i pi a / 2) e^{-|a|}
  FourierResult r = fourier_integral([](double w) { return cplx(w / std::pow(1.0 + w * w, 2)); }, 1.5, {});
  CHECK(std::abs(r.value - cplx(0, kPi * 1.5 / 2 * std::exp(-1.5))) < 1e-11);
}
