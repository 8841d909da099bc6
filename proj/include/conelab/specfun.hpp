#pragma once

// Special functions and the closed-form objects of the spectral problem:
// Gamma, 2F1, the free fundamental systems, their Wronskian, the connection
// coefficient and an argument-principle zero finder.

#include <functional>
#include <vector>

#include "conelab/types.hpp"

namespace conelab {

// Value of the potential obtained by linearising |u|^{4/3}u at c5.
inline constexpr double kDefaultPotential = -35.0 / 4.0;

struct SpectralParameter {
  double eps = 0.0;
  double omega = 0.0;
  SpectralParameter() = default;
  SpectralParameter(double e, double w) : eps(e), omega(w) {}
  explicit SpectralParameter(cplx l) : eps(l.real()), omega(l.imag()) {}
  cplx value() const { return {eps, omega}; }
  // True inside the working strip 0 <= eps <= 1/4.
  bool in_strip() const { return eps >= 0.0 && eps <= 0.25; }
};

struct HypergeometricParams {
  cplx a, b, c;
};

enum class FreeSolutionKind { psi1, psi1_tilde, psi0, phi1, phi1_tilde, phi0 };
enum class Phi0Rep { direct, single_integral, double_integral };

namespace sf {

// Gamma function.  Throws DegenerateError at the poles z = 0, -1, -2, ...
cplx gamma_fn(cplx z);
// 1/Gamma, entire; exactly zero at the poles of Gamma.
cplx rgamma(cplx z);
// A branch of log Gamma (only exp of it is ever used).
cplx lgamma_c(cplx z);
bool is_nonpositive_integer(cplx z, double tol = 1e-14);

// Gauss hypergeometric function for |z| <= 1.  Chooses between the
// Maclaurin series, the Pfaff transformation, the 1-z connection formula and
// Gauss summation at z = 1.  The logarithmic case of the 1-z formula
// (c-a-b integer) raises DegenerateError.
cplx hyp2f1(const HypergeometricParams& p, cplx z);
// Raw Maclaurin series (|z| < 1); used as an independent reference.
cplx hyp2f1_series(const HypergeometricParams& p, cplx z);

// Parameters (a, b, c) of the hypergeometric form of the spectral equation
// z(1-z)h'' + [5/2 - (lambda+3) z]h' - (K/4)h = 0 for a constant potential V,
// K = (lambda + 5/2)(lambda + 3/2) + V.  For V = -35/4: a = lambda/2 + 5/2,
// b = lambda/2 - 1/2.
HypergeometricParams spectral_params(cplx lam, double V = kDefaultPotential);

// The four hypergeometric solutions in z = rho^2.
cplx h0(double z, cplx lam, double V = kDefaultPotential);
cplx h0_tilde(double z, cplx lam, double V = kDefaultPotential);
cplx h1(double z, cplx lam, double V = kDefaultPotential);
cplx h1_tilde(double z, cplx lam, double V = kDefaultPotential);

// Coefficients in h1 = C_0(lambda) h0 + C(lambda) h0~.  C is the connection
// coefficient whose zeros are the eigenvalues; the Gamma(lambda + 1/2) pole
// raises DegenerateError.
cplx connection_coefficient(cplx lam, double V = kDefaultPotential);
cplx connection_coefficient_h0(cplx lam, double V = kDefaultPotential);

// W(lambda) = (3 - 2 lambda)(1 + 2 lambda)(-1 + 2 lambda).
cplx wronskian_free(cplx lam);

// Free fundamental solutions (V = 0) and their rho-derivatives, rho in (0,1).
cplx free_fundamental(FreeSolutionKind kind, double rho, cplx lam);
cplx free_fundamental_deriv(FreeSolutionKind kind, double rho, cplx lam);

// phi0 = phi1 - phi1~ through one of three equivalent representations.
cplx phi0_via_representation(double rho, cplx lam, Phi0Rep rep);
// rho below which phi0 is evaluated from the double-integral form.
double phi0_series_radius(cplx lam);

// ---- argument principle --------------------------------------------------

struct Rect {
  double re0, re1, im0, im1;
  double width() const { return re1 - re0; }
  double height() const { return im1 - im0; }
  cplx center() const { return {0.5 * (re0 + re1), 0.5 * (im0 + im1)}; }
  bool contains(cplx z) const {
    return z.real() >= re0 && z.real() <= re1 && z.imag() >= im0 && z.imag() <= im1;
  }
};

struct ScanOptions {
  double locate_tol = 1e-7;     // final box size
  double max_phase_step = 0.7;  // < pi/4
  double near_zero = 1e-8;      // contour-to-zero distance triggering a nudge
  double nudge = 1e-6;
  int max_nudges = 6;
};

struct LocatedZero {
  cplx location;
  int multiplicity;
  double box_size;
};

struct ScanResult {
  std::vector<LocatedZero> zeros;
  int total_count = 0;  // winding number of the outer boundary
  long evaluations = 0;
};

using ComplexFn = std::function<cplx(cplx)>;

// Winding number of f around the boundary of r.  Throws ConvergenceError if
// the contour passes too close to a zero.
int winding_number(const ComplexFn& f, const Rect& r, const ScanOptions& opt = {},
                   long* evaluations = nullptr);

ScanResult find_zeros(const ComplexFn& f, const Rect& r, const ScanOptions& opt = {});

// Zeros of the connection coefficient in a rectangle of the right half plane.
ScanResult spectrum_scan(const Rect& r, const ScanOptions& opt = {},
                         double V = kDefaultPotential);

}  // namespace sf
}  // namespace conelab
