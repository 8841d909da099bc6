#include "conelab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "conelab/quadrature.hpp"
#include "conelab/rng.hpp"

namespace conelab {

namespace {

constexpr double kSeven3 = 7.0 / 3.0;

const ProjectionData& projection_for(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<ProjectionData>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& p = cache[order];
  if (!p) p = std::make_unique<ProjectionData>(riesz_setup(RadialGrid::make(order)));
  return *p;
}

const MatR& operator_for(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<MatR>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& p = cache[order];
  if (!p) p = std::make_unique<MatR>(linear_operator(*RadialGrid::make(order), PotentialSpec::linearised()));
  return *p;
}

// Simpson on uniform samples with an even number of intervals, else trapezoid.
double sample_integral(const std::vector<double>& t, const std::vector<double>& f) {
  const size_t n = t.size();
  if (n < 2) return 0.0;
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  bool uniform = true;
  for (size_t i = 1; i < n; ++i)
    if (std::abs(t[i] - t[i - 1] - h) > 1e-9 * std::max(h, 1e-300)) uniform = false;
  if (uniform && (n - 1) % 2 == 0) {
    double s = f.front() + f.back();
    for (size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    return s * h / 3.0;
  }
  double s = 0.0;
  for (size_t i = 1; i < n; ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

RadialField nonlinear_term(const RadialField& phi1) {
  VecC v(phi1.size());
  for (int i = 0; i < phi1.size(); ++i) v[i] = nonlinearity(phi1.values[i].real());
  return RadialField(phi1.grid, std::move(v));
}

StatePair cosine_state(std::uint64_t seed, const GridPtr& g, int modes) {
  const CounterRng rng(seed, 0x5a17);
  const double R = g->radius();
  std::vector<double> a(modes), b(modes);
  for (int k = 0; k < modes; ++k) {
    const double damp = 1.0 / ((1.0 + k) * (1.0 + k));
    a[k] = rng.normal(2 * k) * damp;
    b[k] = rng.normal(2 * k + 1) * damp;
  }
  auto series = [&](const std::vector<double>& c) {
    return RadialField::from_function(g, [&](double r) {
      double s = 0.0;
      for (int k = 0; k < modes; ++k) s += c[k] * std::cos(k * kPi * r / R);
      return cplx(s);
    });
  };
  return StatePair(series(a), series(b));
}

StatePair normalised(const StatePair& s) {
  const double n = norm_state_H(s);
  if (!(n > 0.0)) throw DomainError("perturbation shape has zero norm");
  return s * (1.0 / n);
}

}  // namespace

double nonlinearity(double x) {
  const double c = c5();
  const double c73 = std::pow(c, kSeven3);
  const double y = x / c;
  if (std::abs(y) < 1e-2) {
    // binomial series of (1+y)^{7/3} - 1 - 7/3 y
    double term = kSeven3 * y, s = 0.0;
    for (int k = 2; k <= 14; ++k) {
      term *= (kSeven3 - (k - 1)) * y / k;
      s += term;
    }
    return c73 * s;
  }
  const double u = c + x;
  const double F = std::copysign(std::pow(std::abs(u), kSeven3), u);
  return F - c73 - 8.75 * x;
}

double nonlinearity_derivative(double x) {
  return kSeven3 * std::pow(std::abs(c5() + x), 4.0 / 3.0) - 8.75;
}

NonlinearityBound nonlinearity_bound(double lo, double hi) {
  if (!(hi > lo)) throw DomainError("nonlinearity_bound: empty interval");
  auto ratio = [](double x) {
    if (x == 0.0) return 0.5 * kSeven3 * (4.0 / 3.0) * std::pow(c5(), 1.0 / 3.0);
    return std::abs(nonlinearity(x)) / (x * x + std::pow(std::abs(x), kSeven3));
  };
  const int n = 20000;
  double best = -1.0, arg = lo;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double r = ratio(x);
    if (r > best) best = r, arg = x;
  }
  // golden-section polish around the sampled maximum
  double a = std::max(lo, arg - (hi - lo) / n), b = std::min(hi, arg + (hi - lo) / n);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double c = b - gr * (b - a), d = a + gr * (b - a);
    if (ratio(c) > ratio(d)) b = d; else a = c;
  }
  const double xm = 0.5 * (a + b);
  if (ratio(xm) > best) best = ratio(xm), arg = xm;
  // the ratio falls off like |x|^{1/3} from its limit at 0
  if (lo <= 0.0 && hi >= 0.0 && ratio(0.0) >= best) best = ratio(0.0), arg = 0.0;
  return {best, arg};
}

StatePair random_shape(std::uint64_t seed, int order, double radius, int modes) {
  if (modes < 1) throw DomainError("random_shape: need at least one mode");
  return normalised(cosine_state(seed, RadialGrid::make(order, radius), modes));
}

StatePair tangent_shape(int order, double radius) {
  auto g = RadialGrid::make(order, radius);
  return StatePair(RadialField::constant(g, 2.0), RadialField::constant(g, 5.0));
}

StatePair stable_shape(std::uint64_t seed, int order, double radius, int modes) {
  if (radius < 1.0) throw DomainError("stable_shape: radius must be >= 1");
  auto unit = RadialGrid::make(order);
  StatePair s = projection_for(order).complement(cosine_state(seed, unit, modes));
  auto big = RadialGrid::make(order, radius);
  const MatC E = unit->interp_matrix(big->nodes()).cast<cplx>();
  return normalised(StatePair(RadialField(big, E * s.first.values), RadialField(big, E * s.second.values)));
}

void ExperimentConfig::validate() const {
  if (!shape.first.grid) throw DomainError("ExperimentConfig: no perturbation shape");
  if (!(amplitude > 0.0)) throw DomainError("ExperimentConfig: amplitude must be positive");
  if (!(window > 0.0 && window < 1.0)) throw DomainError("ExperimentConfig: window must lie in (0, 1)");
  if (shape.grid()->radius() < data_radius() * (1.0 - 1e-14))
    throw DomainError("ExperimentConfig: shape must live on B^5_{1+window}");
  if (!(tau_max > 0.0)) throw DomainError("ExperimentConfig: tau_max must be positive");
  if (dt < 0.0 || !(sample_every > 0.0)) throw DomainError("ExperimentConfig: bad time step");
  if (grid_order < 4) throw DomainError("ExperimentConfig: grid order too small");
  if (!(abort_norm > 0.0)) throw DomainError("ExperimentConfig: abort_norm must be positive");
}

StatePair ExperimentConfig::perturbation() const {
  return (normalise ? normalised(shape) : shape) * amplitude;
}

double stable_time_step(const RadialGrid& g, const PotentialSpec& pot) {
  static std::mutex mu;
  static std::map<int, double> cache;
  const bool cacheable = g.radius() == 1.0 && pot.constant && pot.value == kDefaultPotential;
  if (cacheable) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(g.order());
    if (it != cache.end()) return it->second;
  }
  const MatR A = linear_operator(g, pot);
  const Eigen::EigenSolver<MatR> es(A, false);
  const double rad = es.eigenvalues().cwiseAbs().maxCoeff();
  const double dt = 1.0 / rad;
  if (cacheable) {
    std::lock_guard<std::mutex> lock(mu);
    cache[g.order()] = dt;
  }
  return dt;
}

StatePair initial_from_physical(const StatePair& v, double T, int order, double window) {
  if (!(window > 0.0) || std::abs(T - 1.0) > window * (1.0 + 1e-12))
    throw DomainError("initial_from_physical: T outside the window");
  require_same_grid(v.first, v.second);
  if (T > v.grid()->radius() * (1.0 + 1e-14))
    throw DomainError("initial_from_physical: data ball too small for T");
  auto unit = RadialGrid::make(order);
  const MatC E = v.grid()->interp_matrix(T * unit->nodes()).cast<cplx>();
  const double a = std::pow(T, 1.5), b = std::pow(T, 2.5);
  VecC p1 = a * (E * v.first.values), p2 = b * (E * v.second.values);
  p1.array() += c5() * (a - 1.0);
  p2.array() += 1.5 * c5() * (b - 1.0);
  return StatePair(RadialField(unit, std::move(p1)), RadialField(unit, std::move(p2)));
}

Trajectory evolve_nonlinear(const StatePair& initial, double tau_max, double dt, double sample_every,
                            double abort_norm) {
  if (!(tau_max > 0.0)) throw DomainError("evolve_nonlinear: tau_max must be positive");
  if (!(sample_every > 0.0) || dt < 0.0) throw DomainError("evolve_nonlinear: bad time step");
  const GridPtr& g = initial.grid();
  if (g->radius() != 1.0) throw DomainError("evolve_nonlinear: state must live on the unit grid");
  const int n = g->size();
  const MatR& A = operator_for(g->order());

  const double dt0 = dt > 0.0 ? dt : stable_time_step(*g);
  const int nsamp = std::max(1, static_cast<int>(std::ceil(tau_max / sample_every - 1e-9)));
  const double hs = tau_max / nsamp;
  const int sub = std::max(1, static_cast<int>(std::ceil(hs / dt0 - 1e-9)));
  const double h = hs / sub;

  VecR X(2 * n);
  X << initial.first.values.real(), initial.second.values.real();
  auto rhs = [&](const VecR& x) {
    VecR k = A * x;
    for (int i = 0; i < n; ++i) k[n + i] += nonlinearity(x[i]);
    return k;
  };

  Trajectory out;
  out.meta.dt = h;
  out.meta.max_growth = 1.0;
  out.times.push_back(0.0);
  out.states.push_back(StatePair::from_stacked(g, X.cast<cplx>()));
  const double n0 = norm_state_H(out.states.front());
  for (int s = 1; s <= nsamp; ++s) {
    for (int j = 0; j < sub; ++j) {
      const VecR k1 = rhs(X);
      const VecR k2 = rhs(X + 0.5 * h * k1);
      const VecR k3 = rhs(X + 0.5 * h * k2);
      const VecR k4 = rhs(X + h * k3);
      X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.meta.steps = static_cast<long>(s) * sub;
    if (!X.allFinite()) {
      out.meta.aborted = true;
      out.meta.reason = "non-finite state";
      break;
    }
    StatePair st = StatePair::from_stacked(g, X.cast<cplx>());
    const double nk = norm_state_H(st);
    out.times.push_back(s * hs);
    out.states.push_back(std::move(st));
    if (n0 > 0.0) out.meta.max_growth = std::max(out.meta.max_growth, nk / n0);
    if (nk > abort_norm) {
      out.meta.aborted = true;
      out.meta.reason = "H-norm exceeded abort threshold";
      break;
    }
  }
  return out;
}

Trajectory evolve_nonlinear(const ExperimentConfig& cfg, double T) {
  cfg.validate();
  const StatePair u0 = initial_from_physical(cfg.perturbation(), T, cfg.grid_order, cfg.window);
  return evolve_nonlinear(u0, cfg.tau_max, cfg.dt, cfg.sample_every, cfg.abort_norm);
}

std::vector<double> projection_trace(const Trajectory& t, const ProjectionData& pd) {
  std::vector<double> p;
  p.reserve(t.states.size());
  for (const auto& s : t.states) p.push_back(pd.coefficient(s).real());
  return p;
}

double strichartz_diagnostic(const Trajectory& t, double tau_from) {
  std::vector<double> x, f;
  for (size_t i = 0; i < t.times.size(); ++i) {
    if (t.times[i] < tau_from - 1e-12) continue;
    x.push_back(t.times[i]);
    const double q = norm_lq(t.states[i].first, 5.0);
    f.push_back(q * q);
  }
  return sample_integral(x, f);
}

double strichartz_diagnostic(const Trajectory& t) { return strichartz_diagnostic(t, -1e300); }

double cone_strichartz_integral(const std::function<double(double, double)>& u, double T, double t_max,
                                int t_nodes, int r_nodes) {
  if (!(t_max > 0.0 && t_max < T)) throw DomainError("cone_strichartz_integral: need 0 < t_max < T");
  const BlowupProfile prof{T};
  const quad::Rule& gl = quad::gauss_legendre(t_nodes);
  double s = 0.0;
  for (int k = 0; k < t_nodes; ++k) {
    const double t = 0.5 * t_max * (gl.x[k] + 1.0);
    const double uT = prof.u(t);
    const double I = integrate_radial(
        [&](double r) { return std::pow(std::abs(u(t, r) - uT), 5); }, 4.0, T - t, r_nodes);
    s += 0.5 * t_max * gl.w[k] * std::pow(I, 0.4);
  }
  return s;
}

CorrectionResult correction_norm(const Trajectory& t, const StatePair& initial, const ProjectionData& pd) {
  if (t.states.empty()) throw DomainError("correction_norm: empty trajectory");
  require_same_grid(initial.first, t.states.front().first);
  const GridPtr& g = initial.grid();
  // only the second component of (0, N) enters, and P is linear: integrate
  // the scalar weights e^{-s} N(phi1(s)) node by node
  const int n = g->size();
  std::vector<double> x = t.times;
  VecC acc = VecC::Zero(n);
  double sup = 0.0;
  std::vector<double> f(x.size());
  std::vector<RadialField> terms;
  terms.reserve(x.size());
  for (size_t k = 0; k < x.size(); ++k) {
    terms.push_back(nonlinear_term(t.states[k].first));
    sup = std::max(sup, norm_l2(terms.back()));
  }
  for (int i = 0; i < n; ++i) {
    for (size_t k = 0; k < x.size(); ++k) f[k] = std::exp(-x[k]) * terms[k].values[i].real();
    acc[i] = sample_integral(x, f);
  }
  const StatePair C = initial + StatePair(RadialField::zero(g), RadialField(g, acc));
  const double coef = pd.coefficient(C).real();
  const double gn = norm_state_H(pd.g), gs = norm_state_H(pd.g_star);
  return {std::abs(coef) * gn, coef, std::exp(-x.back()) * sup * gn * gs, x.back()};
}

CorrectionResult correction_norm(const Trajectory& t, const StatePair& initial) {
  return correction_norm(t, initial, projection_for(initial.grid()->order()));
}

StabilityReport tune_blowup_time(const ExperimentConfig& cfg) {
  cfg.validate();
  const ProjectionData& pd = projection_for(cfg.grid_order);
  struct Eval {
    double T;
    double f;
    Trajectory traj;
  };
  auto eval = [&](double T) {
    Eval e{T, 0.0, evolve_nonlinear(cfg, T)};
    e.f = pd.coefficient(e.traj.states.back()).real();
    return e;
  };
  Eval lo = eval(1.0 - cfg.window), hi = eval(1.0 + cfg.window);
  int it = 0;
  Eval* best = nullptr;
  Eval mid{1.0, 0.0, {}};
  if (std::abs(lo.f) < cfg.coefficient_tol) best = &lo;
  else if (std::abs(hi.f) < cfg.coefficient_tol) best = &hi;
  else if ((lo.f > 0.0) == (hi.f > 0.0))
    throw ConvergenceError("tune_blowup_time: no sign change of the projection coefficient over the window");
  while (!best && it < cfg.max_bisections && hi.T - lo.T > cfg.window_tol) {
    ++it;
    mid = eval(0.5 * (lo.T + hi.T));
    if (std::abs(mid.f) < cfg.coefficient_tol) {
      best = &mid;
      break;
    }
    if ((mid.f > 0.0) == (lo.f > 0.0)) lo = std::move(mid);
    else hi = std::move(mid);
  }
  if (!best) best = std::abs(lo.f) <= std::abs(hi.f) ? &lo : &hi;

  StabilityReport rep;
  rep.T_star = best->T;
  rep.iterations = it;
  rep.bracket = hi.T - lo.T;
  const Trajectory& tr = best->traj;
  rep.times = tr.times;
  rep.projection = projection_trace(tr, pd);
  rep.terminal_coefficient = rep.projection.back();
  rep.initial_H_norm = norm_state_H(tr.states.front());
  for (const auto& s : tr.states) rep.sup_H_norm = std::max(rep.sup_H_norm, norm_state_H(s));
  rep.strichartz_integral = strichartz_diagnostic(tr);
  rep.tail_fraction = rep.strichartz_integral > 0.0
                          ? strichartz_diagnostic(tr, 0.5 * cfg.tau_max) / rep.strichartz_integral
                          : 0.0;
  rep.correction = correction_norm(tr, tr.states.front(), pd).norm;
  const bool located = std::abs(best->f) < cfg.coefficient_tol || rep.bracket <= cfg.window_tol;
  rep.converged = located && !tr.meta.aborted;
  return rep;
}

NormEnvelope energy_equivalence_envelope(std::uint64_t seed, int count, int order) {
  if (count < 1) throw DomainError("energy_equivalence_envelope: empty corpus");
  auto g = RadialGrid::make(order);
  NormEnvelope e{1e300, 0.0};
  for (int k = 0; k < count; ++k) {
    const StatePair s = cosine_state(splitmix64(seed + k), g, 6);
    const double h = norm_state_H(s);
    const double r = inner_energy(s, s).real() / (h * h);
    e.lo = std::min(e.lo, r);
    e.hi = std::max(e.hi, r);
  }
  return e;
}

}  // namespace conelab
