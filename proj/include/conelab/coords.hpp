#pragma once

// Similarity coordinates on the backward lightcone and the radial function
// spaces used everywhere else.
//
// Radial fields on B^5_R are stored as their values at interior nodes r_i =
// R sqrt(z_i), where z_i are Gauss-Jacobi points for the weight z^{3/2} on
// [0,1].  A field is the polynomial in z = (r/R)^2 through these values, so
// smooth radial functions are represented as even functions of r and the
// origin needs no special treatment.  With this choice the quadrature
//   int_0^R p(r) r^4 dr = (R^5/2) sum_i w_i p(r_i)
// is exact for even polynomials of degree <= 4N - 2.

#include <functional>
#include <memory>
#include <utility>

#include "conelab/types.hpp"

namespace conelab {

struct ConeConfig {
  double T = 1.0;
  ConeConfig() = default;
  explicit ConeConfig(double t) : T(t) {
    if (!(t > 0.0)) throw DomainError("ConeConfig: T must be positive");
  }
};

struct SimilarityPoint {
  double tau = 0.0;
  double rho = 0.0;
};

SimilarityPoint to_similarity(double t, double r, const ConeConfig& cfg);
std::pair<double, double> from_similarity(const SimilarityPoint& pt, const ConeConfig& cfg);

class RadialGrid;
using GridPtr = std::shared_ptr<const RadialGrid>;

class RadialGrid {
 public:
  static GridPtr make(int order, double radius = 1.0);

  int order() const { return n_; }
  // Degree (in r) up to which the r^4 dr quadrature is exact.
  int exactness() const { return 4 * n_ - 2; }
  double radius() const { return R_; }
  int size() const { return n_; }

  const VecR& nodes() const { return r_; }    // physical radii, increasing
  const VecR& weights() const { return w_; }  // r^4 dr weights
  const VecR& z() const { return z_; }
  const VecR& bary() const { return bw_; }
  const MatR& Dz() const { return dz_; }     // d/dz on nodal values
  const MatR& Dr() const { return dr_; }     // d/dr on nodal values
  // Values at the nodes of a companion Gauss-Jacobi rule (weight z^{1/2})
  // exact for the measure r^2 dr; `interp_aux() * f` gives them.
  const MatR& interp_aux() const { return aux_interp_; }
  const VecR& aux_weights() const { return aux_w_; }

  // Row vector e with e.dot(f) = value of the interpolant at r.
  VecR eval_row(double r) const;
  // Row vector for the derivative d/dr at r.
  VecR deriv_row(double r) const;
  // Interpolation matrix onto r_out (any radii, extrapolation allowed).
  MatR interp_matrix(const VecR& r_out) const;

  bool same_as(const RadialGrid& o) const { return n_ == o.n_ && R_ == o.R_; }

 private:
  RadialGrid(int order, double radius);
  int n_;
  double R_;
  VecR z_, zw_, r_, w_, bw_;
  MatR dz_, dr_;
  MatR aux_interp_;
  VecR aux_w_;
};

struct RadialField {
  GridPtr grid;
  VecC values;

  RadialField() = default;
  RadialField(GridPtr g, VecC v);
  static RadialField zero(const GridPtr& g);
  static RadialField constant(const GridPtr& g, cplx c);
  template <class F>
  static RadialField from_function(const GridPtr& g, F&& f) {
    VecC v(g->size());
    for (int i = 0; i < g->size(); ++i) v[i] = f(g->nodes()[i]);
    return RadialField(g, std::move(v));
  }

  int size() const { return static_cast<int>(values.size()); }
  RadialField derivative() const;
  cplx at(double r) const;
  cplx boundary() const { return at(grid->radius()); }
  // Resample onto another grid by interpolation in z.
  RadialField resample(const GridPtr& g) const;

  RadialField operator+(const RadialField& o) const;
  RadialField operator-(const RadialField& o) const;
  RadialField operator*(cplx a) const;
};

struct StatePair {
  RadialField first;
  RadialField second;

  StatePair() = default;
  StatePair(RadialField a, RadialField b);
  static StatePair zero(const GridPtr& g);
  const GridPtr& grid() const { return first.grid; }
  // Stacked [first; second] vector of nodal values.
  VecC stacked() const;
  static StatePair from_stacked(const GridPtr& g, const VecC& v);

  StatePair operator+(const StatePair& o) const;
  StatePair operator-(const StatePair& o) const;
  StatePair operator*(cplx a) const;
};

struct NormSpec {
  double p;
  double q;
  NormSpec(double p_, double q_);
};

void require_same_grid(const RadialField& a, const RadialField& b);

// int_0^R f(r) r^m dr by a Gauss-Jacobi rule in z = (r/R)^2.
double integrate_radial(const std::function<double(double)>& f, double m, double R,
                        int nodes = 64);

double norm_lq(const RadialField& f, double q, double R = 1.0);
double norm_l2(const RadialField& f);
double norm_h1(const RadialField& f);
double norm_state_H(const StatePair& s);
cplx inner_H(const StatePair& f, const StatePair& g);
cplx inner_energy(const StatePair& f, const StatePair& g);
double norm_energy(const StatePair& f);

// Gram matrix of the H inner product on stacked nodal vectors:
// (f|g)_H = g^* M f, with M real symmetric positive definite.
MatR gram_H(const RadialGrid& g);

// Hardy/Sobolev-type weighted quantities.
double norm_r_l2_01(const RadialField& f);  // (int_0^1 |f|^2 r^2 dr)^{1/2}
double norm_r_l5(const RadialField& f);     // || r f ||_{L^5(B^5)}

// (psi1, psi2) = (L^{3/2} u, L^{5/2} u_t) at L = T e^{-tau}, where the
// slices live on the physical ball of radius L.  Pure rescaling: the output
// lives on the unit grid of the same order.
StatePair physical_to_cylinder(const RadialField& u_slice, const RadialField& du_slice,
                               double tau, const ConeConfig& cfg);
std::pair<RadialField, RadialField> cylinder_to_physical(const StatePair& psi, double tau,
                                                         const ConeConfig& cfg);

}  // namespace conelab
