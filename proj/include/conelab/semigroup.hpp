#pragma once

// Linearised flow  d/dtau Phi = L Phi  on the energy space,
//   L (f1, f2) = ( -r f1' - 3/2 f1 + f2,  f1'' + (4/r) f1' - r f2' - 5/2 f2 - V f1 ),
// its Riesz projection at the unstable eigenvalue 1, the Laplace inversion
// of the resolvent along Re lambda = eps, and numeric checks of the
// oscillatory-integral and kernel bounds used for Strichartz estimates.
//
// On the nodal grid L maps polynomials in z = r^2 of degree < N into
// themselves, so the matrix below is the exact restriction of L to that
// subspace; spectral data and the flow of grid data carry no truncation error.

#include <string>
#include <vector>

#include "conelab/coords.hpp"
#include "conelab/green.hpp"
#include "conelab/volterra.hpp"

namespace conelab {

// Stacked nodal matrix of L (2N x 2N).
MatR linear_operator(const RadialGrid& g, const PotentialSpec& pot);
StatePair apply_linear_operator(const StatePair& f, const PotentialSpec& pot);

struct ProjectionData {
  StatePair g;       // (2, 5)
  StatePair g_star;  // (g | g*)_H = 1
  cplx eigenvalue;   // discrete eigenvalue nearest 1
  double gap;        // distance from it to the rest of the discrete spectrum
  // sup-norm distance between the computed right eigenvector (scaled so its
  // first entry is 2) and (2, 5)
  double eigvec_deviation;

  cplx coefficient(const StatePair& f) const;  // (f | g*)_H
  StatePair project(const StatePair& f) const;
  StatePair complement(const StatePair& f) const;  // (I - P) f
};

ProjectionData riesz_setup(const GridPtr& grid,
                           const PotentialSpec& pot = PotentialSpec::linearised());

struct ContourSpec {
  double eps = 0.05;
  double omega_max = 200.0;
  int n_points = 0;  // trapezoid nodes on [-omega_max, omega_max]; 0 chooses from tau
  // Left shift c of the two resolvent-identity terms peeled off the integrand
  // (see laplace_invert); must lie left of eps.
  double shift = -2.0;
  double tol = 1e-3;  // tail-change tolerance (relative)
  MatchingOptions matching;
  void validate() const;
};

struct InversionResult {
  std::vector<double> tau;
  std::vector<RadialField> values;  // [S(tau) f]_1
  double tail_change = 0.0;         // max relative change omega_max/2 -> omega_max
  int nodes = 0;
};

// [S(tau) f]_1 = (1/2 pi i) int_{eps - i inf}^{eps + i inf} e^{lambda tau} [R(lambda) f]_1 dlambda.
// With c = shift, R f = f/(lambda-c) + (L-c) f/(lambda-c)^2 + R (L-c)^2 f/(lambda-c)^2;
// the first two terms are inverted in closed form and only the last, which
// decays like |lambda|^{-3}, goes through the trapezoid rule.  The input must
// already be free of the unstable mode.
InversionResult laplace_invert(const StatePair& state, const std::vector<double>& taus,
                               const ContourSpec& c = {},
                               const PotentialSpec& pot = PotentialSpec::linearised(),
                               int parallelism = 1);
RadialField laplace_invert(const StatePair& state, double tau, const ContourSpec& c = {},
                           const PotentialSpec& pot = PotentialSpec::linearised());

struct Trajectory {
  std::vector<double> times;
  std::vector<StatePair> states;
  struct Meta {
    double dt = 0.0;
    long steps = 0;
    double max_growth = 0.0;  // sup ||Phi(tau)||_H / ||Phi(0)||_H over samples
    bool aborted = false;
    std::string reason;
  } meta;
};

// 0.5 * minimum spacing of {0, r_1, ..., r_N, 1}.
double default_time_step(const RadialGrid& g);

struct EvolveOptions {
  double dt = 0.0;          // 0 selects default_time_step
  double sample_every = 0.05;
  // Abort once ||Phi(tau)||_H > growth_slack * e^{2 tau} ||Phi(0)||_H.
  double growth_slack = 10.0;
};

// Classical RK4 on the nodal system.  Throws ConvergenceError on instability.
Trajectory linear_evolve(const StatePair& state, double tau_max, double dt,
                         const PotentialSpec& pot = PotentialSpec::linearised(),
                         const EvolveOptions& opt = {});
// Several initial states marched together (same times for all).
std::vector<Trajectory> linear_evolve_batch(const std::vector<StatePair>& states, double tau_max,
                                            const PotentialSpec& pot = PotentialSpec::linearised(),
                                            const EvolveOptions& opt = {});

// Least-squares slope of log ||Phi||_H against tau.
double log_norm_slope(const Trajectory& t);

// ---- kernel bounds ---------------------------------------------------------

struct KernelQuadrature {
  double omega_max = 200.0;
  double panel = 1.0;  // Gauss-Legendre panels on [0, omega_max]
  int nodes = 8;
  int rho_panels = 24;  // composite Gauss rule in rho for the L^5 norm
  int rho_nodes = 8;
  double eps = 0.0;     // Re lambda on the contour
  CutoffSpec cutoff;
  // kernel norms need ~1e-6, so the outer panels may take larger phase steps
  MatchingOptions matching = [] {
    MatchingOptions o;
    o.outer_phase = 4.0;
    return o;
  }();
};

// s^2 (1-s)^{-1/2} |tau + log(1-s)|^{-1/10} <tau + log(1-s)>^{-1}
double kernel_bound(double tau, double s);

// Green kernels at the omega nodes of a KernelQuadrature, reused across
// (n, tau, s).  Uses G(r, s; conj lambda) = conj G(r, s; lambda).
class KernelTable {
 public:
  KernelTable(const PotentialSpec& pot, const KernelQuadrature& q = {}, int parallelism = 1);
  // || int e^{lambda tau} G_n(., s; lambda) d omega ||_{L^5(B^5)}
  double kernel_norm(int n, double tau, double s) const;
  // All six norms for one s and several tau: result[n-1][k] for taus[k].
  std::vector<std::vector<double>> kernel_norms(double s, const std::vector<double>& taus) const;
  double ratio(int n, double tau, double s) const { return kernel_norm(n, tau, s) / kernel_bound(tau, s); }
  const KernelQuadrature& quadrature() const { return q_; }
  int nodes() const { return static_cast<int>(omega_.size()); }

 private:
  KernelQuadrature q_;
  bool zero_ = false;
  std::vector<double> omega_, weight_;
  std::vector<GreenKernel> kernels_;
};

double kernel_bound_ratio(int n, double tau, double s, const KernelQuadrature& q = {},
                          const PotentialSpec& pot = PotentialSpec::linearised());

// ---- oscillatory integrals -------------------------------------------------

enum class SymbolFamily {
  odd_rational,     // w / (1 + w^2):  O_o(<w>^{-1})
  odd_rational_sq,  // w / (1 + w^2)^2
  mixed,            // w / (1 + w^2) + 1 / (1 + w^2)
  even_alpha,       // <w>^{-alpha}
  even_alpha_fp,    // <w>^{-alpha} with its finite part removed by a Gaussian
  cutoff_rho1,      // rho^{-n} [1 - chi(rho <w>)] <w>^{-n-1},  n = 1
  cutoff_rho2,      // rho^{-n} [1 - chi(rho <w>)] <w>^{-n},    n = 2
};

struct OscResult {
  double integral;  // |int e^{i a w} f(w) dw|
  double bound;
  double ratio;
  bool converged;
};

// `param` is alpha for the even families and rho for the cutoff families.
OscResult osc_decay_check(SymbolFamily f, double a, double param = 0.5);
std::string symbol_family_name(SymbolFamily f);

// ---- weighted norms --------------------------------------------------------

struct WeightedNormReport {
  double l2_ratio;  // || r f ||_{L^2(0,1)} / || f ||_{H^1}
  double l5_ratio;  // || r f ||_{L^5(B^5)} / || f ||_{H^1}
  double resolution_defect;  // relative H^1 change on halving the order
  bool near_extremal;        // defect above 1e-3: the grid does not resolve f
};

WeightedNormReport weighted_norm_inequalities(const RadialField& f);

}  // namespace conelab
