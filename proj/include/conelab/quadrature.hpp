#pragma once

// Quadrature building blocks shared by every module.

#include <functional>
#include <vector>

#include "conelab/types.hpp"

namespace conelab::quad {

struct Rule {
  VecR x;
  VecR w;
};

// Gauss-Legendre on [-1, 1].
const Rule& gauss_legendre(int n);

// Gauss-Jacobi on [0, 1] for the weight z^beta (beta > -1).
Rule gauss_jacobi_unit(int n, double beta);

// S(i,j) = integral over [-1, x_i] of the j-th Lagrange basis polynomial of
// the Gauss-Legendre nodes.
const MatR& gl_cumulative(int n);

// Barycentric weights for arbitrary distinct nodes (scaled to avoid overflow).
VecR barycentric_weights(const VecR& x);

// Evaluate the interpolant through (x_j, f_j) at t with barycentric weights w.
cplx barycentric_eval(const VecR& x, const VecR& w, const VecC& f, double t);
double barycentric_eval(const VecR& x, const VecR& w, const VecR& f, double t);

// Differentiation matrix D(i,j) = l_j'(x_i).
MatR differentiation_matrix(const VecR& x, const VecR& w);

// Row vector r with sum_j r_j f_j = integral over [x_lo, t] of the
// interpolant; nodes x assumed to lie in [x_lo, x_hi] after affine map of GL.
VecR gl_partial_weights(int n, double u);  // u in [-1,1]: ∫_{-1}^{u} l_j

// Adaptive Gauss-Kronrod (7/15) for complex integrands on [a, b].
cplx integrate(const std::function<cplx(double)>& f, double a, double b,
               double abs_tol = 1e-14, double rel_tol = 1e-13,
               int max_depth = 60);
double integrate_real(const std::function<double(double)>& f, double a,
                      double b, double abs_tol = 1e-14, double rel_tol = 1e-13,
                      int max_depth = 60);

// Double-exponential (tanh-sinh) rule on [a, b]; tolerant of integrable
// endpoint singularities.
double integrate_tanh_sinh(const std::function<double(double)>& f, double a,
                           double b, double tol = 1e-14);

// Product-integration rule on (0, eta] for integrals t^mu q(t) dt with q
// smooth.  Nodes are Gauss-Legendre points mapped to (0, eta).
struct PowerEndRule {
  VecR t;      // nodes, increasing
  MatC cum;    // cum(i,j):  int_0^{t_i} t^mu l_j(t) dt
  VecC total;  // total(j):  int_0^{eta} t^mu l_j(t) dt
};
PowerEndRule power_end_rule(int n, double eta, cplx mu);
// The row of `cum` for an arbitrary t in [0, eta].
VecC power_end_row(int n, double eta, cplx mu, double t);

// Integral over the real line of exp(i a w) f(w).  `breaks` lists points
// where f has reduced smoothness (cut-off plateaus etc.); beyond |w| = x0 the
// tails are summed over half-periods and accelerated by Wynn's epsilon
// algorithm.
struct FourierOptions {
  double x0 = 50.0;
  double panel = 0.5;
  int nodes = 16;
  int max_cycles = 4000;
  double tol = 1e-12;
};
struct FourierResult {
  cplx value;
  double tail_error;
  bool converged;
};
FourierResult fourier_integral(const std::function<cplx(double)>& f, double a,
                               const std::vector<double>& breaks,
                               const FourierOptions& opt = {});

// Wynn epsilon acceleration of a sequence of partial sums.
cplx wynn_epsilon(const std::vector<cplx>& partial, double* err_estimate);

}  // namespace conelab::quad
