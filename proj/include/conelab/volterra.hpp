#pragma once

// Volterra integral equations h = f + int K h on Gauss-Legendre panels, and
// the perturbed fundamental system of the spectral equation
//
//   -(1-r^2) u'' + (-4/r + r(2 lambda + 5)) u' + [(lambda+5/2)(lambda+3/2) + V] u = 0.
//
// With v = r^2 (1-r^2)^{1/4+lambda/2} u the equation loses its first-order
// term, v'' + Q v = V v / (1 - r^2), and the free solutions psi_1, psi_1~,
// psi_0 turn it into Volterra equations for h_0 = v_0/psi_0 (from r = 0) and
// h_1 = v_1/psi_1 (from r = 1).  Kernels are separable of rank two, so the
// panels are marched in O(nodes) with a small dense solve per panel.

#include <functional>
#include <memory>
#include <vector>

#include "conelab/specfun.hpp"
#include "conelab/types.hpp"

namespace conelab {

struct PotentialSpec {
  std::function<double(double)> V;
  bool zero = false;
  bool constant = false;
  double value = 0.0;  // when constant

  static PotentialSpec none();
  static PotentialSpec constant_value(double v);
  static PotentialSpec linearised() { return constant_value(kDefaultPotential); }
  static PotentialSpec from_function(std::function<double(double)> f);

  double operator()(double r) const { return zero ? 0.0 : (constant ? value : V(r)); }
  // a_1(rho) = -int_rho^1 V(s) ds
  double a1(double rho) const;
};

// ---- generic solver --------------------------------------------------------

enum class Orientation { forward, backward };  // integrate from lo / towards hi
enum class PanelMap { identity, log1m };        // s = y  or  s = 1 - e^{-y}

// lo/hi are in the panel variable y; a power_end panel is given by its
// physical end points 1 - eta and 1.
struct PanelSpec {
  double lo, hi;
  PanelMap map = PanelMap::identity;
  bool power_end = false;  // [1 - eta, 1] with t^mu product integration
};

struct SeparableKernel {
  int rank = 0;
  // a_k(x) and a_k'(x) for k < rank
  std::function<void(double x, cplx* a, cplx* da)> a;
  // b_k(s)
  std::function<void(double s, cplx* b)> b;
  // exponents mu_k of b_k(s) ~ (1-s)^{mu_k}; used on a power_end panel
  std::vector<cplx> end_exponents;
  // K(x, x) = 0 identically; skips the diagonal term in h'.
  bool diagonal_vanishes = false;
};

struct VolterraProblem {
  Orientation orientation = Orientation::forward;
  std::vector<PanelSpec> panels;  // contiguous, in increasing order
  int nodes = 16;
  std::function<cplx(double)> inhom;  // default 1
  // exactly one of the two kernels is used
  SeparableKernel separable;
  std::function<cplx(double x, double s)> general;
  double max_panel_norm = 0.5;
};

struct VolterraOptions {
  double tol = 1e-12;
  int max_iter = 50;
};

class VolterraSolution {
 public:
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  cplx value(double x) const;
  cplx deriv(double x) const;  // separable kernels only; f' assumed 0
  cplx integral(int k, double x) const;
  const std::vector<double>& node_s() const { return s_all_; }
  const std::vector<cplx>& node_h() const { return h_all_; }
  double kernel_norm() const { return kernel_norm_; }
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }
  int panel_count() const { return static_cast<int>(panels_.size()); }
  double max_panel_norm() const { return max_panel_norm_; }

  struct Panel {
    double ylo, yhi, lo, hi;
    PanelMap map;
    bool power_end;
    std::vector<double> s, y;
    VecC h;
    std::vector<VecC> beta;     // integrand factors per rank (without h)
    std::vector<VecC> inode;    // I_k at the nodes
    std::vector<cplx> start;    // accumulated integrals at the starting side
    std::vector<cplx> through;  // full-panel integral per rank
    double eta = 0.0;
  };
  // Panels in increasing order of s.
  const std::vector<Panel>& panels() const { return panels_; }

 private:
  friend VolterraSolution volterra_solve(const VolterraProblem&, const VolterraOptions&);
  static VolterraSolution solve_general(const VolterraProblem&, const VolterraOptions&);
  const Panel& locate(double x) const;
  cplx within(const Panel& p, int k, double x) const;

  VolterraProblem prob_;
  std::vector<Panel> panels_;
  std::vector<double> s_all_;
  std::vector<cplx> h_all_;
  double lo_ = 0, hi_ = 0;
  double kernel_norm_ = 0;
  int iterations_ = 0;
  double residual_ = 0;
  double max_panel_norm_ = 0;
  // general-kernel path
  std::vector<double> gw_;  // node weights in s
  bool general_ = false;
};

VolterraSolution volterra_solve(const VolterraProblem& p, const VolterraOptions& opt = {});

// ---- perturbed fundamental system -------------------------------------------

struct MatchingOptions {
  double delta0 = 0.5;
  double delta1 = 0.25;
  int nodes = 16;
  int inner_levels = 36;     // geometric panels below delta0/<omega>
  double max_outer_step = 0.5;  // in y = -log(1-s)
  double outer_phase = 2.0;     // |omega| * dy per panel
  double end_eta_max = 0.1;
  double end_eta_scale = 0.5;   // eta = min(end_eta_max, end_eta_scale/<omega>)
};

double matching_radius(cplx lam, const MatchingOptions& o = {});  // delta0/<omega>
double outer_radius(cplx lam, const MatchingOptions& o = {});     // delta1/<omega>

// h_0 on (0, delta0/<omega>] with v_0 = psi_0 h_0.
struct InnerSolution {
  cplx lam;
  double rho_m;
  VolterraSolution h;
  cplx v0(double r) const;
  cplx dv0(double r) const;
  cplx h0(double r) const { return h.value(r); }
  cplx dh0(double r) const { return h.deriv(r); }
};

// h_1 on [delta1/<omega>, 1) with v_1 = psi_1 h_1.
struct OuterSolution {
  cplx lam;
  double rho_1;
  double eta;
  VolterraSolution h;
  cplx v1(double r) const;
  cplx dv1(double r) const;
  cplx h1(double r) const { return r >= 1.0 ? cplx(1.0) : h.value(r); }
  cplx dh1(double r) const { return h.deriv(r); }
};

InnerSolution build_v0(cplx lam, const PotentialSpec& pot, const MatchingOptions& o = {});
OuterSolution build_v1(cplx lam, const PotentialSpec& pot, const MatchingOptions& o = {});

// Breakpoints shared by the outer solves at lambda and 1 - lambda.
std::vector<PanelSpec> outer_panels(cplx lam, const MatchingOptions& o);

class FundamentalPair {
 public:
  cplx lam;
  cplx w0;
  cplx W;                 // free Wronskian W(lambda)
  double rho_m, rho_1;
  cplx a, b;              // v1 = a v0 + b v0~ on (0, rho_m]
  cplx A, B;              // v0 = A v1 + B v1~ on [rho_m, 1)
  cplx W_v1_v1t;          // W(v1, v1~); equals W(lambda) up to discretisation
  std::shared_ptr<const InnerSolution> inner;
  std::shared_ptr<const OuterSolution> outer, outer_t;  // at lambda, 1 - lambda

  cplx u0(double r) const;
  cplx u1(double r) const;
  cplx du0(double r) const;
  cplx du1(double r) const;
  cplx u1_tilde(double r) const;  // phi1~ h1~ on the outer region
  cplx v0(double r) const;
  cplx v1(double r) const;
  cplx dv0(double r) const;
  cplx dv1(double r) const;
  // rho^4 (1 - rho^2)^{1/2 + lambda} W(u0, u1)(rho); equals W w0.
  cplx rescaled_wronskian(double r) const;
  // int_r^{rho_m} v0^{-2} ds
  cplx v0_inv_sq_integral(double r) const;
};

FundamentalPair build_u_pair(cplx lam, const PotentialSpec& pot, const MatchingOptions& o = {});
cplx compute_w0(cplx lam, const PotentialSpec& pot, const MatchingOptions& o = {});

}  // namespace conelab
