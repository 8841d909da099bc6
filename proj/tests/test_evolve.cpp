#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "conelab/evolve.hpp"

using namespace conelab;

namespace {

const double kA = 0.75 * c5();  // d/dT of U(T, 0) at T = 1, along g

double sup_diff(const StatePair& a, const StatePair& b) {
  return (a.stacked() - b.stacked()).cwiseAbs().maxCoeff();
}

// exact perturbation of the ODE blowup at time 1 seen in the cone of T
double ode_phi1(double T, double tau) {
  const double L = T * std::exp(-tau);
  return c5() * (std::pow(L / (1.0 - T + L), 1.5) - 1.0);
}

StatePair constant_state(const GridPtr& g, double a, double b) {
  return StatePair(RadialField::constant(g, a), RadialField::constant(g, b));
}

ExperimentConfig small_config(int order, double delta, std::uint64_t seed = 7) {
  ExperimentConfig c;
  c.grid_order = order;
  c.amplitude = delta;
  c.shape = random_shape(seed, order, c.data_radius());
  return c;
}

}  // namespace

TEST_CASE("nonlinearity and its quadratic bound") {
  CHECK(std::abs(c5() - std::pow(15.0 / 4.0, 0.75)) < 1e-14);
  CHECK(nonlinearity(0.0) == 0.0);
  CHECK(std::abs(nonlinearity_derivative(0.0)) < 1e-13);
  // series branch and closed form agree where they meet
  for (double x : {0.0269, 0.02699, 0.027, -0.0269, -0.027}) {
    const double u = c5() + x;
    const double direct = std::pow(u, 7.0 / 3.0) - std::pow(c5(), 7.0 / 3.0) - 8.75 * x;
    CHECK(std::abs(nonlinearity(x) - direct) < 1e-12 * std::abs(direct) + 1e-15);
  }
  // derivative by central differences
  for (double x : {-1.5, -0.3, 0.4, 3.0, 9.0}) {
    const double h = 1e-5;
    const double fd = (nonlinearity(x + h) - nonlinearity(x - h)) / (2 * h);
    CHECK(std::abs(fd - nonlinearity_derivative(x)) < 1e-7 * (1 + std::abs(fd)));
  }
  // past the origin F(u) = -|u|^{7/3}
  CHECK(std::abs(nonlinearity(-c5() - 1.0) - (-1.0 - std::pow(c5(), 7.0 / 3.0) + 8.75 * (c5() + 1.0))) <
        1e-12);
  const auto b = nonlinearity_bound();
  CHECK(std::isfinite(b.sup));
  // the sup is the x -> 0 limit N''(0)/2 = (14/9) c5^{1/3}
  CHECK(b.sup == doctest::Approx(14.0 / 9.0 * std::cbrt(c5())).epsilon(1e-12));
  CHECK(b.argmax == 0.0);
  for (double x = -2.0; x <= 10.0; x += 0.01)
    CHECK(std::abs(nonlinearity(x)) <= b.sup * (x * x + std::pow(std::abs(x), 7.0 / 3.0)) + 1e-300);
  CHECK_THROWS_AS(nonlinearity_bound(1.0, 1.0), DomainError);
}

TEST_CASE("blowup profile") {
  BlowupProfile p{1.3};
  CHECK(p.u(0.3) == doctest::Approx(c5()).epsilon(1e-15));
  // u'' = u^{7/3}
  const double t = 0.4, h = 1e-4;
  const double upp = (p.u(t + h) - 2 * p.u(t) + p.u(t - h)) / (h * h);
  CHECK(upp == doctest::Approx(std::pow(p.u(t), 7.0 / 3.0)).epsilon(1e-6));
  CHECK((p.u(t + h) - p.u(t - h)) / (2 * h) == doctest::Approx(p.ut(t)).epsilon(1e-7));
}

TEST_CASE("U(T, v) data map") {
  const int N = 16;
  const double w = 0.1;
  auto zero = StatePair::zero(RadialGrid::make(N, 1 + w));
  CHECK(initial_from_physical(zero, 1.0, N, w).stacked().norm() == 0.0);

  // tangent direction (3/4) c5 g, error O(h^2)
  auto unit = RadialGrid::make(N);
  const StatePair g = constant_state(unit, 2.0, 5.0);
  double prev = 0.0;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const double err = sup_diff(initial_from_physical(zero, 1.0 + h, N, w), g * (kA * h));
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }

  // continuity in T
  const StatePair v = random_shape(3, N, 1 + w) * 0.1;
  for (double T : {0.93, 1.0, 1.07}) {
    const double d = sup_diff(initial_from_physical(v, T, N, w), initial_from_physical(v, T + 1e-6, N, w));
    CHECK(d < 1e-4 * norm_state_H(v) + 1e-5);
  }

  // pure resampling at T = 1: the unit-ball restriction of v
  const StatePair r = initial_from_physical(v, 1.0, N, w);
  for (double x : {0.1, 0.5, 0.9})
    CHECK(std::abs(r.first.at(x) - v.first.at(x)) < 1e-10);

  CHECK_THROWS_AS(initial_from_physical(zero, 1.2, N, w), DomainError);
  CHECK_THROWS_AS(initial_from_physical(StatePair::zero(unit), 1.05, N, w), DomainError);
}

TEST_CASE("perturbation corpus") {
  const double R = 1.1;
  const StatePair a = random_shape(11, 24, R), b = random_shape(11, 24, R), c = random_shape(12, 24, R);
  CHECK(norm_state_H(a) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sup_diff(a, b) == 0.0);
  CHECK(sup_diff(a, c) > 1e-3);
  // stable shape carries no g-component once mapped at T = 1
  const StatePair s = stable_shape(5, 24, R);
  const ProjectionData pd = riesz_setup(RadialGrid::make(24));
  CHECK(norm_state_H(s) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(pd.coefficient(initial_from_physical(s, 1.0, 24, 0.1))) < 1e-10);
}

TEST_CASE("nonlinear evolution: exact solutions") {
  const int N = 16;
  auto unit = RadialGrid::make(N);
  CHECK(stable_time_step(*unit) > default_time_step(*unit));

  // zero perturbation is the blowup solution itself
  Trajectory z = evolve_nonlinear(StatePair::zero(unit), 5.0);
  for (const auto& s : z.states) CHECK(s.stacked().norm() == 0.0);
  CHECK_FALSE(z.meta.aborted);

  // the ODE blowup at time 1 in the cone of T: spatially constant, explicit
  for (double T : {0.95, 1.04}) {
    const StatePair u0 = initial_from_physical(StatePair::zero(RadialGrid::make(N, 1.1)), T, N, 0.1);
    // default step, and a 4x finer one (RK4: error / 256)
    double errs[2];
    for (int j = 0; j < 2; ++j) {
      Trajectory t = evolve_nonlinear(u0, 1.5, j == 0 ? 0.0 : 0.25 * stable_time_step(*unit));
      REQUIRE_FALSE(t.meta.aborted);
      double err = 0.0;
      for (size_t k = 0; k < t.times.size(); ++k) {
        const double ex = ode_phi1(T, t.times[k]);
        err = std::max(err, (t.states[k].first.values.array() - ex).abs().maxCoeff() / (1 + std::abs(ex)));
      }
      errs[j] = err;
    }
    CHECK(errs[0] < 1e-7);
    CHECK(errs[1] < 1e-10);
  }

  // running into the earlier blowup aborts with a partial trajectory
  const StatePair u0 = initial_from_physical(StatePair::zero(RadialGrid::make(N, 1.1)), 1.05, N, 0.1);
  Trajectory t = evolve_nonlinear(u0, 10.0);
  CHECK(t.meta.aborted);
  CHECK(t.times.back() < std::log(1.05 / 0.05));
  CHECK(norm_state_H(t.states.back()) > 10.0);
  CHECK_THROWS_AS(evolve_nonlinear(u0, -1.0), DomainError);
}

TEST_CASE("nonlinear evolution: stable data and the unstable mode") {
  // tiny stable-subspace data: norm stays bounded, two grids agree
  std::vector<Trajectory> runs;
  for (int N : {16, 32}) {
    ExperimentConfig c;
    c.grid_order = N;
    c.amplitude = 1e-3;
    c.tau_max = 5.0;
    c.shape = stable_shape(21, 32, c.data_radius());
    runs.push_back(evolve_nonlinear(c, 1.0));
    CHECK(runs.back().meta.max_growth <= 3.0);
  }
  const double n16 = norm_state_H(runs[0].states.back()), n32 = norm_state_H(runs[1].states.back());
  CHECK(std::abs(n16 - n32) < 1e-3 * n32);
  for (double x : {0.0, 0.5, 0.9})
    CHECK(std::abs(runs[0].states.back().first.at(x) - runs[1].states.back().first.at(x)) <
          1e-3 * norm_state_H(runs[1].states.back()));

  // g-component with untuned T grows like e^tau
  ExperimentConfig c = small_config(16, 1e-4);
  c.tau_max = 5.0;
  Trajectory t = evolve_nonlinear(c, 1.0);
  const auto p = projection_trace(t, riesz_setup(RadialGrid::make(16)));
  std::vector<double> x, y;
  for (size_t k = 0; k < t.times.size(); ++k)
    if (t.times[k] >= 1.0) x.push_back(t.times[k]), y.push_back(std::log(std::abs(p[k])));
  double mx = 0, my = 0, sxy = 0, sxx = 0;
  for (size_t k = 0; k < x.size(); ++k) mx += x[k] / x.size(), my += y[k] / y.size();
  for (size_t k = 0; k < x.size(); ++k) sxy += (x[k] - mx) * (y[k] - my), sxx += (x[k] - mx) * (x[k] - mx);
  CHECK(sxy / sxx == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("blowup-time tuning: exact cases") {
  const int N = 16;
  ExperimentConfig c;
  c.grid_order = N;
  c.normalise = false;
  c.amplitude = 1.0;

  // zero data: T* = 1 exactly
  c.shape = StatePair::zero(RadialGrid::make(N, c.data_radius()));
  StabilityReport r = tune_blowup_time(c);
  CHECK(r.T_star == 1.0);
  CHECK(r.converged);
  CHECK(r.strichartz_integral == 0.0);

  // data on the ODE family: v = u^{T0}(0) - u^1(0) is tuned by T* = T0
  for (double T0 : {0.97, 1.02}) {
    c.shape = constant_state(RadialGrid::make(N, c.data_radius()), c5() * (std::pow(T0, -1.5) - 1.0),
                             1.5 * c5() * (std::pow(T0, -2.5) - 1.0));
    r = tune_blowup_time(c);
    CHECK(r.converged);
    CHECK(std::abs(r.T_star - T0) < 1e-7);
  }

  // pure tangent direction h g: T* = 1 - h / ((3/4) c5) to first order
  for (double h : {1e-4, 1e-3}) {
    c.shape = tangent_shape(N, c.data_radius()) * h;
    r = tune_blowup_time(c);
    CHECK(r.converged);
    CHECK(std::abs(r.T_star - (1.0 - h / kA)) < 2.0 * h * h);
  }

  // window too narrow to bracket
  c.shape = tangent_shape(N, c.data_radius()) * 1e-2;
  c.window = 1e-4;
  CHECK_THROWS_AS(tune_blowup_time(c), ConvergenceError);
  c.window = 1.5;
  CHECK_THROWS_AS(tune_blowup_time(c), DomainError);
  c.window = 0.1;
  c.amplitude = 0.0;
  CHECK_THROWS_AS(tune_blowup_time(c), DomainError);
}

TEST_CASE("blowup-time tuning: generic data") {
  const int N = 24;
  std::vector<double> S;
  for (double delta : {2e-2, 1e-2, 5e-3}) {
    ExperimentConfig c = small_config(N, delta);
    const StabilityReport r = tune_blowup_time(c);
    CHECK(r.converged);
    CHECK(r.T_star >= 0.9);
    CHECK(r.T_star <= 1.1);
    CHECK(r.sup_H_norm <= 5.0 * r.initial_H_norm);
    CHECK(r.tail_fraction <= 0.5);
    CHECK(r.correction < 1e-4);
    CHECK(r.strichartz_integral >= 0.0);
    S.push_back(r.strichartz_integral / (delta * delta));

    // de-tuned runs: the terminal projection coefficient blows past the tuned one
    const ProjectionData pd = riesz_setup(RadialGrid::make(N));
    c.tau_max = 5.0;
    const double tuned = std::abs(projection_trace(evolve_nonlinear(c, r.T_star), pd).back());
    for (double dT : {-0.02, 0.02}) {
      const double off = std::abs(projection_trace(evolve_nonlinear(c, r.T_star + dT), pd).back());
      CHECK(off >= 10.0 * tuned);
    }
  }
  // quadratic smallness: S / delta^2 stable to 30%
  for (double s : S) CHECK(std::abs(s / S[1] - 1.0) < 0.3);
  CHECK(S[1] / S[2] * 4.0 >= 2.5);
  CHECK(S[1] / S[2] * 4.0 <= 6.0);
}

TEST_CASE("Strichartz diagnostic and the change of variables") {
  const int N = 16;
  auto unit = RadialGrid::make(N);
  Trajectory zero;
  for (int k = 0; k <= 10; ++k) {
    zero.times.push_back(0.1 * k);
    zero.states.push_back(StatePair::zero(unit));
  }
  CHECK(strichartz_diagnostic(zero) == 0.0);

  // synthetic field u = u^T + (T-t)^{-3/2} f(tau, r/(T-t)), f = a e^{-tau} (1 + rho^2)
  const double T = 1.2, a = 0.3, tau_max = 1.5;
  auto f = [&](double tau, double rho) { return a * std::exp(-tau) * (1.0 + rho * rho); };
  Trajectory t;
  const int m = 2000;
  for (int k = 0; k <= m; ++k) {
    const double tau = tau_max * k / m;
    t.times.push_back(tau);
    t.states.push_back(StatePair(RadialField::from_function(unit, [&](double r) { return cplx(f(tau, r)); }),
                                 RadialField::zero(unit)));
  }
  const double cyl = strichartz_diagnostic(t);
  const BlowupProfile prof{T};
  auto u = [&](double tt, double r) {
    const double L = T - tt;
    return prof.u(tt) + std::pow(L, -1.5) * f(std::log(T / L), r / L);
  };
  const double phys = cone_strichartz_integral(u, T, T * (1.0 - std::exp(-tau_max)));
  CHECK(std::abs(cyl - phys) < 1e-8 * phys);
  // tail restriction
  CHECK(strichartz_diagnostic(t, 0.75) < cyl);
  CHECK(strichartz_diagnostic(t, 0.75) > 0.0);
  CHECK_THROWS_AS(cone_strichartz_integral(u, T, T), DomainError);
}

TEST_CASE("correction functional") {
  const int N = 16;
  auto unit = RadialGrid::make(N);
  const ProjectionData pd = riesz_setup(unit);
  Trajectory z = evolve_nonlinear(StatePair::zero(unit), 2.0);
  CHECK(correction_norm(z, StatePair::zero(unit), pd).norm == 0.0);

  // Duhamel: e^{-tau} P Phi(tau) = C truncated at tau
  ExperimentConfig c = small_config(N, 1e-2);
  c.tau_max = 3.0;
  Trajectory t = evolve_nonlinear(c, 1.01);
  const CorrectionResult cr = correction_norm(t, t.states.front(), pd);
  const double lhs = std::exp(-t.times.back()) * pd.coefficient(t.states.back()).real();
  CHECK(std::abs(cr.coefficient - lhs) < 1e-6 * std::abs(lhs));
  CHECK(cr.tail_bound > 0.0);
  CHECK(cr.tau_end == doctest::Approx(3.0));

  // untuned, v = 0: linearisation of U gives C ~ (3/4) c5 h g
  const double h = 0.05;
  const StatePair u0 = initial_from_physical(StatePair::zero(RadialGrid::make(N, 1.1)), 1.0 + h, N, 0.1);
  Trajectory lt = evolve_nonlinear(u0, 1.0);
  const double expect = kA * h * norm_state_H(pd.g);
  CHECK(correction_norm(lt, u0, pd).norm == doctest::Approx(expect).epsilon(0.2));
}

TEST_CASE("norm equivalence envelope under refinement") {
  const auto e16 = energy_equivalence_envelope(99, 20, 16), e32 = energy_equivalence_envelope(99, 20, 32);
  CHECK(e16.lo > 0.0);
  CHECK(e16.hi < 1e3);
  CHECK(e16.lo <= e16.hi);
  CHECK(std::abs(e32.lo - e16.lo) < 0.05 * e32.lo);
  CHECK(std::abs(e32.hi - e16.hi) < 0.05 * e32.hi);
}
