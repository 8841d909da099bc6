#pragma once

// Green function of the spectral ODE
//   -(1-r^2) u'' + (-4/r + r(2 lambda + 5)) u' + [(lambda+5/2)(lambda+3/2) + V] u = F,
//   G(r,s) = s^4 (1-s^2)^{lambda-1/2} / ((3-2l)(1+2l)(1-2l) w0) * { u0(r)u1(s), r <= s
//                                                                 { u1(r)u0(s), r >= s,
// its free counterpart G0, the cutoff splitting G = G0 + sum_n G_n, and the
// resolvent [R(lambda) f]_1 = int_0^1 G F_lambda ds.

#include <vector>

#include "conelab/coords.hpp"
#include "conelab/volterra.hpp"

namespace conelab {

// chi = 1 on [0, delta1], 0 beyond delta0, quintic smoothstep in between.
struct CutoffSpec {
  double delta0 = 0.5;
  double delta1 = 0.25;
  CutoffSpec() = default;
  CutoffSpec(double d0, double d1);
  double chi(double x) const;
  double dchi(double x) const;
  double max_dchi() const { return 15.0 / 8.0 / (delta0 - delta1); }
};

struct ResolventRHS {
  GridPtr grid;
  VecC values;  // F_lambda at the grid nodes
  SpectralParameter lam;
  cplx at(double r) const;
};

// F = (lambda + 5/2) f1 + r f1' + f2 with a spectral derivative.
ResolventRHS resolvent_rhs(const StatePair& state, cplx lam);

// (3 - 2 lambda)(1 + 2 lambda)(1 - 2 lambda) = -W(lambda)
cplx green_denominator(cplx lam);

cplx green_free_eval(double rho, double s, cplx lam);

class GreenKernel {
 public:
  GreenKernel(cplx lam, const PotentialSpec& pot, const CutoffSpec& cut = {});
  explicit GreenKernel(FundamentalPair pair, const CutoffSpec& cut = {});

  const FundamentalPair& pair() const { return pair_; }
  const CutoffSpec& cutoff() const { return cut_; }
  cplx lam() const { return pair_.lam; }

  cplx eval(double rho, double s) const;
  cplx free_eval(double rho, double s) const { return green_free_eval(rho, s, pair_.lam); }
  // G_n for n = 1..6; zero outside its support.
  cplx component(int n, double rho, double s) const;
  // All six components at once (out[n-1] = G_n); shares the h_0, h_1 lookups.
  void components(double rho, double s, cplx* out) const;
  // The multiplier gamma_n in G_n = (cutoff) * pref * (free product) * gamma_n;
  // returns 0 where the piece is switched off.
  cplx gamma(int n, double rho, double s) const;
  // True if (rho, s) lies in the support of piece n.
  bool in_support(int n, double rho, double s) const;

 private:
  cplx pref(double s) const;
  // u0 through the outer representation A u1 + B u1~ (valid on [rho_1, 1)).
  cplx h1(double r) const;   // u1 / phi1
  cplx h1t(double r) const;  // outer-region h1~
  cplx h0(double r) const;   // u0 / phi0 on the inner region
  FundamentalPair pair_;
  CutoffSpec cut_;
  double bracket_;
};

cplx green_eval(double rho, double s, cplx lam, const PotentialSpec& pot);
cplx green_component(int n, double rho, double s, cplx lam,
                     const PotentialSpec& pot = PotentialSpec::linearised());

struct ResolventOptions {
  std::vector<cplx> eigenvalues = {cplx(1.0)};
  double spectrum_guard = 1e-3;
  double min_w0 = 1e-10;
  MatchingOptions matching;
};

// First component of the resolvent on the nodes of the state's grid.
RadialField resolvent_apply(const StatePair& state, cplx lam, const PotentialSpec& pot,
                            const ResolventOptions& opt = {});
// Same with a prebuilt fundamental system (the Laplace inversion reuses it).
RadialField resolvent_apply(const StatePair& state, const FundamentalPair& pair);

struct BvpResult {
  RadialField u;
  double rcond;
};

// Collocation of the ODE in z = r^2 at the grid nodes.  Regularity at 0 and
// at 1 are automatic: the unknown is a polynomial in z.
BvpResult bvp_solve_direct(const StatePair& state, cplx lam, const PotentialSpec& pot);
// The collocation matrix itself (used for residual checks).
MatC bvp_operator(const RadialGrid& g, cplx lam, const PotentialSpec& pot);

}  // namespace conelab
