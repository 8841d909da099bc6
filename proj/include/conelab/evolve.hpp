#pragma once

// Nonlinear evolution around the ODE blowup u^T(t) = c5 (T - t)^{-3/2} in
// similarity coordinates.  With (psi1, psi2) = (c5, 3/2 c5) + Phi the
// perturbation obeys
//   d/dtau Phi = L Phi + (0, N(phi1)),   N(x) = F(c5 + x) - F(c5) - F'(c5) x,
// F(u) = |u|^{4/3} u, and L is the linearised operator of semigroup.hpp.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "conelab/semigroup.hpp"

namespace conelab {

struct BlowupProfile {
  double T = 1.0;
  static double amplitude() { return c5(); }
  double u(double t) const { return c5() * std::pow(T - t, -1.5); }
  double ut(double t) const { return 1.5 * c5() * std::pow(T - t, -2.5); }
};

double nonlinearity(double x);
double nonlinearity_derivative(double x);

// sup |N(x)| / (x^2 + |x|^{7/3}) over [lo, hi].
struct NonlinearityBound {
  double sup;
  double argmax;
};
NonlinearityBound nonlinearity_bound(double lo = -2.0, double hi = 10.0);

// ---- perturbation corpus ---------------------------------------------------

// Physical data v on B^5_R: sum_{k<modes} a_k cos(k pi r / R) per component
// with a_k ~ N(0,1)/(1+k)^2, normalised to ||v||_H = 1 on that ball.
StatePair random_shape(std::uint64_t seed, int order, double radius, int modes = 6);
// The constant direction (2, 5), unnormalised.
StatePair tangent_shape(int order, double radius);
// Random data whose restriction to the unit ball has no component along g
// (at T = 1), continued polynomially to the larger ball; ||.||_H = 1 there.
StatePair stable_shape(std::uint64_t seed, int order, double radius, int modes = 6);

struct ExperimentConfig {
  StatePair shape;         // perturbation direction on B^5_{1 + window}
  bool normalise = true;   // scale shape to unit H-norm before applying amplitude
  double amplitude = 1e-2; // delta
  double window = 0.1;     // T in [1 - window, 1 + window]
  double tau_max = 10.0;
  double dt = 0.0;              // 0: stable_time_step
  double sample_every = 0.05;
  double abort_norm = 10.0;     // stop once ||Phi||_H exceeds this
  int grid_order = 64;
  std::uint64_t seed = 0;
  double window_tol = 1e-8;     // bisection stop
  double coefficient_tol = 1e-6;
  int max_bisections = 200;

  void validate() const;
  StatePair perturbation() const;  // v = amplitude * shape (normalised)
  double data_radius() const { return 1.0 + window; }
};

// Largest RK4 step with dt * spectral radius(L) <= 1 (well inside the RK4
// stability region).
double stable_time_step(const RadialGrid& g, const PotentialSpec& pot = PotentialSpec::linearised());

// U(T, v)(rho) = (T^{3/2} v1(T rho), T^{5/2} v2(T rho))
//              + (c5 T^{3/2}, 3/2 c5 T^{5/2}) - (c5, 3/2 c5),
// interpolated onto the unit grid of the given order.
StatePair initial_from_physical(const StatePair& v, double T, int order, double window);

// RK4 on the perturbation system.  An abort (||Phi||_H > abort_norm or a
// non-finite state) is recorded in meta and the partial trajectory returned.
Trajectory evolve_nonlinear(const StatePair& initial, double tau_max, double dt = 0.0,
                            double sample_every = 0.05, double abort_norm = 10.0);
Trajectory evolve_nonlinear(const ExperimentConfig& cfg, double T);

// Real part of (Phi(tau_k) | g*)_H along a trajectory.
std::vector<double> projection_trace(const Trajectory& t, const ProjectionData& pd);

struct StabilityReport {
  double T_star = 1.0;
  double strichartz_integral = 0.0;
  double sup_H_norm = 0.0;
  double initial_H_norm = 0.0;
  double terminal_coefficient = 0.0;
  double tail_fraction = 0.0;  // share of the Strichartz integral from [tau_max/2, tau_max]
  std::vector<double> times;
  std::vector<double> projection;  // projection trace
  double correction = 0.0;  // ||C(Phi, u)||_H at T*
  int iterations = 0;
  double bracket = 0.0;  // final bisection window
  bool converged = false;
};

// Bisection in T over the window on the sign of Re (Phi(tau_max) | g*)_H.
// Throws ConvergenceError when the window end points do not bracket a zero.
StabilityReport tune_blowup_time(const ExperimentConfig& cfg);

// int_0^{tau_end} ||phi1(tau)||^2_{L^5(B^5)} dtau by composite Simpson on the
// samples (trapezoid when they are not uniform with an even count).  Equal
// to int_0^{t_end} ||u(t) - u^T(t)||^2_{L^5(B^5_{T-t})} dt.
double strichartz_diagnostic(const Trajectory& t);
// The same integral with the integrand restricted to tau >= tau_from.
double strichartz_diagnostic(const Trajectory& t, double tau_from);
// Physical-side integral int_0^{t_max} ||u(t) - u^T(t)||^2_{L^5(B^5_{T-t})} dt
// for a field u(t, r), by Gauss-Legendre in t.
double cone_strichartz_integral(const std::function<double(double, double)>& u, double T,
                                double t_max, int t_nodes = 64, int r_nodes = 64);

// C(Phi, u) = P [u + int_0^{tau_end} e^{-s} (0, N(phi1(s))) ds].
struct CorrectionResult {
  double norm;         // ||C||_H
  double coefficient;  // Re (C | g*)_H
  double tail_bound;   // e^{-tau_end} sup_s ||(0, N(phi1(s)))||_H ||P||
  double tau_end;
};
CorrectionResult correction_norm(const Trajectory& t, const StatePair& initial,
                                 const ProjectionData& pd);
CorrectionResult correction_norm(const Trajectory& t, const StatePair& initial);

// Range of ||f||_E^2 / ||f||_H^2 over `count` random smooth states on the
// unit ball (same seeds for every order).
struct NormEnvelope {
  double lo, hi;
};
NormEnvelope energy_equivalence_envelope(std::uint64_t seed, int count, int order);

}  // namespace conelab
