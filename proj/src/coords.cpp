#include "conelab/coords.hpp"

#include <algorithm>
#include <cmath>

#include "conelab/quadrature.hpp"

namespace conelab {

SimilarityPoint to_similarity(double t, double r, const ConeConfig& cfg) {
  const double T = cfg.T;
  if (!(t >= 0.0) || !(t < T)) throw DomainError("to_similarity: t outside [0, T)");
  const double L = T - t;
  if (!(r >= 0.0) || r > L * (1.0 + 1e-15)) throw DomainError("to_similarity: r outside the backward cone");
  return {std::log(T / L), std::min(1.0, r / L)};
}

std::pair<double, double> from_similarity(const SimilarityPoint& pt, const ConeConfig& cfg) {
  if (!(pt.tau >= 0.0) || !(pt.rho >= 0.0) || pt.rho > 1.0)
    throw DomainError("from_similarity: invalid similarity point");
  const double e = std::exp(-pt.tau);
  // T(1 - e^{-tau}) via expm1 keeps full relative accuracy near tau = 0.
  return {-cfg.T * std::expm1(-pt.tau), cfg.T * e * pt.rho};
}

GridPtr RadialGrid::make(int order, double radius) {
  if (order < 2) throw DomainError("RadialGrid: order must be >= 2");
  if (!(radius > 0.0)) throw DomainError("RadialGrid: radius must be positive");
  return GridPtr(new RadialGrid(order, radius));
}

RadialGrid::RadialGrid(int order, double radius) : n_(order), R_(radius) {
  quad::Rule gj = quad::gauss_jacobi_unit(n_, 1.5);
  z_ = gj.x;
  zw_ = gj.w;
  r_ = R_ * z_.array().sqrt();
  w_ = 0.5 * std::pow(R_, 5) * zw_;
  bw_ = quad::barycentric_weights(z_);
  dz_ = quad::differentiation_matrix(z_, bw_);
  dr_ = (2.0 * r_.array() / (R_ * R_)).matrix().asDiagonal() * dz_;

  quad::Rule aux = quad::gauss_jacobi_unit(n_, 0.5);
  aux_w_ = 0.5 * std::pow(R_, 3) * aux.w;
  aux_interp_.resize(n_, n_);
  for (int i = 0; i < n_; ++i) aux_interp_.row(i) = eval_row(R_ * std::sqrt(aux.x[i])).transpose();
}

VecR RadialGrid::eval_row(double r) const {
  const double t = (r / R_) * (r / R_);
  VecR row = VecR::Zero(n_);
  double s = 0.0;
  for (int j = 0; j < n_; ++j) {
    const double d = t - z_[j];
    if (d == 0.0) {
      row.setZero();
      row[j] = 1.0;
      return row;
    }
    row[j] = bw_[j] / d;
    s += row[j];
  }
  return row / s;
}

VecR RadialGrid::deriv_row(double r) const {
  const double t = (r / R_) * (r / R_);
  const double dzdr = 2.0 * r / (R_ * R_);
  for (int j = 0; j < n_; ++j)
    if (t == z_[j]) return dzdr * dz_.row(j).transpose();
  VecR l = eval_row(r);
  double sum = 0.0;
  for (int k = 0; k < n_; ++k) sum += l[k] / (t - z_[k]);
  VecR d(n_);
  for (int j = 0; j < n_; ++j) d[j] = l[j] * (sum - 1.0 / (t - z_[j]));
  return dzdr * d;
}

MatR RadialGrid::interp_matrix(const VecR& r_out) const {
  MatR m(r_out.size(), n_);
  for (int i = 0; i < r_out.size(); ++i) m.row(i) = eval_row(r_out[i]).transpose();
  return m;
}

RadialField::RadialField(GridPtr g, VecC v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw DomainError("RadialField: null grid");
  if (values.size() != grid->size()) throw DomainError("RadialField: size does not match grid");
}

RadialField RadialField::zero(const GridPtr& g) { return RadialField(g, VecC::Zero(g->size())); }

RadialField RadialField::constant(const GridPtr& g, cplx c) {
  return RadialField(g, VecC::Constant(g->size(), c));
}

RadialField RadialField::derivative() const {
  return RadialField(grid, grid->Dr().cast<cplx>() * values);
}

cplx RadialField::at(double r) const { return grid->eval_row(r).cast<cplx>().dot(values); }

RadialField RadialField::resample(const GridPtr& g) const {
  if (g->same_as(*grid)) return RadialField(g, values);
  return RadialField(g, grid->interp_matrix(g->nodes()).cast<cplx>() * values);
}

void require_same_grid(const RadialField& a, const RadialField& b) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid)) throw DomainError("grid mismatch");
}

RadialField RadialField::operator+(const RadialField& o) const {
  require_same_grid(*this, o);
  return RadialField(grid, values + o.values);
}
RadialField RadialField::operator-(const RadialField& o) const {
  require_same_grid(*this, o);
  return RadialField(grid, values - o.values);
}
RadialField RadialField::operator*(cplx a) const { return RadialField(grid, values * a); }

StatePair::StatePair(RadialField a, RadialField b) : first(std::move(a)), second(std::move(b)) {
  require_same_grid(first, second);
}

StatePair StatePair::zero(const GridPtr& g) {
  return StatePair(RadialField::zero(g), RadialField::zero(g));
}

VecC StatePair::stacked() const {
  VecC v(2 * first.size());
  v << first.values, second.values;
  return v;
}

StatePair StatePair::from_stacked(const GridPtr& g, const VecC& v) {
  const int n = g->size();
  if (v.size() != 2 * n) throw DomainError("StatePair::from_stacked: size mismatch");
  return StatePair(RadialField(g, v.head(n)), RadialField(g, v.tail(n)));
}

StatePair StatePair::operator+(const StatePair& o) const {
  return StatePair(first + o.first, second + o.second);
}
StatePair StatePair::operator-(const StatePair& o) const {
  return StatePair(first - o.first, second - o.second);
}
StatePair StatePair::operator*(cplx a) const { return StatePair(first * a, second * a); }

NormSpec::NormSpec(double p_, double q_) : p(p_), q(q_) {
  if (!(p >= 2.0) || !(q >= 10.0 / 3.0 - 1e-14) || !(q <= 5.0 + 1e-14))
    throw DomainError("NormSpec: exponents out of range");
  const double lhs = (std::isinf(p) ? 0.0 : 1.0 / p) + 5.0 / q;
  if (std::abs(lhs - 1.5) > 1e-12) throw DomainError("NormSpec: need 1/p + 5/q = 3/2");
}

double integrate_radial(const std::function<double(double)>& f, double m, double R, int nodes) {
  if (!(m > -1.0)) throw DomainError("integrate_radial: power must exceed -1");
  quad::Rule gj = quad::gauss_jacobi_unit(nodes, 0.5 * (m - 1.0));
  double s = 0.0;
  for (int i = 0; i < nodes; ++i) s += gj.w[i] * f(R * std::sqrt(gj.x[i]));
  return 0.5 * std::pow(R, m + 1.0) * s;
}

double norm_lq(const RadialField& f, double q, double R) {
  if (!(q >= 1.0)) throw DomainError("norm_lq: q must be >= 1");
  const double Rg = f.grid->radius();
  if (!(R > 0.0) || R > Rg * (1.0 + 1e-14)) throw DomainError("norm_lq: R outside (0, grid radius]");
  double s;
  if (R == Rg) {
    s = f.grid->weights().dot(f.values.cwiseAbs().array().pow(q).matrix());
  } else {
    s = integrate_radial([&](double r) { return std::pow(std::abs(f.at(r)), q); }, 4.0, R,
                         f.grid->size());
  }
  return std::pow(s, 1.0 / q);
}

double norm_l2(const RadialField& f) {
  return std::sqrt(f.grid->weights().dot(f.values.cwiseAbs2()));
}

double norm_h1(const RadialField& f) {
  const RadialField d = f.derivative();
  const VecR& w = f.grid->weights();
  return std::sqrt(w.dot(d.values.cwiseAbs2()) + w.dot(f.values.cwiseAbs2()));
}

double norm_state_H(const StatePair& s) {
  const double a = norm_h1(s.first), b = norm_l2(s.second);
  return std::sqrt(a * a + b * b);
}

cplx inner_H(const StatePair& f, const StatePair& g) {
  require_same_grid(f.first, g.first);
  const VecR& w = f.grid()->weights();
  const VecC df = f.first.derivative().values, dg = g.first.derivative().values;
  cplx s = 0.0;
  for (int i = 0; i < w.size(); ++i)
    s += w[i] * (df[i] * std::conj(dg[i]) + f.first.values[i] * std::conj(g.first.values[i]) +
                 f.second.values[i] * std::conj(g.second.values[i]));
  return s;
}

cplx inner_energy(const StatePair& f, const StatePair& g) {
  require_same_grid(f.first, g.first);
  const VecR& w = f.grid()->weights();
  const VecC df = f.first.derivative().values, dg = g.first.derivative().values;
  cplx s = 0.0;
  for (int i = 0; i < w.size(); ++i)
    s += w[i] * (df[i] * std::conj(dg[i]) + f.second.values[i] * std::conj(g.second.values[i]));
  return s + f.first.boundary() * std::conj(g.first.boundary());
}

double norm_energy(const StatePair& f) { return std::sqrt(std::max(0.0, inner_energy(f, f).real())); }

MatR gram_H(const RadialGrid& g) {
  const int n = g.size();
  const MatR W = g.weights().asDiagonal();
  MatR M = MatR::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = g.Dr().transpose() * W * g.Dr() + W;
  M.bottomRightCorner(n, n) = W;
  return M;
}

double norm_r_l2_01(const RadialField& f) {
  VecC v = f.grid->interp_aux().cast<cplx>() * f.values;
  return std::sqrt(f.grid->aux_weights().dot(v.cwiseAbs2()));
}

double norm_r_l5(const RadialField& f) {
  const VecR& r = f.grid->nodes();
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += f.grid->weights()[i] * std::pow(r[i] * std::abs(f.values[i]), 5);
  return std::pow(s, 0.2);
}

StatePair physical_to_cylinder(const RadialField& u_slice, const RadialField& du_slice, double tau,
                               const ConeConfig& cfg) {
  require_same_grid(u_slice, du_slice);
  if (!(tau >= 0.0)) throw DomainError("physical_to_cylinder: tau must be >= 0");
  const double L = cfg.T * std::exp(-tau);
  if (std::abs(u_slice.grid->radius() - L) > 1e-12 * L)
    throw DomainError("physical_to_cylinder: grid mismatch (slice radius must be T e^{-tau})");
  GridPtr unit = RadialGrid::make(u_slice.grid->order(), 1.0);
  return StatePair(RadialField(unit, u_slice.values * std::pow(L, 1.5)),
                   RadialField(unit, du_slice.values * std::pow(L, 2.5)));
}

std::pair<RadialField, RadialField> cylinder_to_physical(const StatePair& psi, double tau,
                                                         const ConeConfig& cfg) {
  if (!(tau >= 0.0)) throw DomainError("cylinder_to_physical: tau must be >= 0");
  if (psi.grid()->radius() != 1.0) throw DomainError("cylinder_to_physical: grid mismatch");
  const double L = cfg.T * std::exp(-tau);
  GridPtr phys = RadialGrid::make(psi.grid()->order(), L);
  return {RadialField(phys, psi.first.values * std::pow(L, -1.5)),
          RadialField(phys, psi.second.values * std::pow(L, -2.5))};
}

}  // namespace conelab
