#include "conelab/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "conelab/quadrature.hpp"

namespace conelab::sf {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

const cplx I(0.0, 1.0);

// log(sin(pi z)) without overflow for large |Im z|.
cplx log_sin_pi(cplx z) {
  if (std::abs(z.imag()) < 20.0) return std::log(std::sin(kPi * z));
  if (z.imag() > 0) {
    // sin = (i/2) e^{-i pi z} (1 - e^{2 i pi z})
    return std::log(0.5 * I) - I * kPi * z + std::log(1.0 - std::exp(2.0 * I * kPi * z));
  }
  return std::log(-0.5 * I) + I * kPi * z + std::log(1.0 - std::exp(-2.0 * I * kPi * z));
}

cplx lanczos_log(cplx z) {
  z -= 1.0;
  cplx x = kLanczos[0];
  for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + double(i));
  const cplx t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

}  // namespace

bool is_nonpositive_integer(cplx z, double tol) {
  if (std::abs(z.imag()) > tol) return false;
  const double r = std::round(z.real());
  return r <= 0.0 && std::abs(z.real() - r) <= tol * std::max(1.0, std::abs(r));
}

cplx lgamma_c(cplx z) {
  if (is_nonpositive_integer(z, 0.0)) throw DegenerateError("lgamma: pole");
  if (z.real() < 0.5) return std::log(kPi) - log_sin_pi(z) - lanczos_log(1.0 - z);
  return lanczos_log(z);
}

cplx gamma_fn(cplx z) {
  if (is_nonpositive_integer(z, 0.0)) throw DegenerateError("gamma_fn: pole at non-positive integer");
  if (z.real() < 0.5) return kPi / (std::sin(kPi * z) * std::exp(lanczos_log(1.0 - z)));
  return std::exp(lanczos_log(z));
}

cplx rgamma(cplx z) {
  if (is_nonpositive_integer(z, 0.0)) return 0.0;
  if (z.real() < 0.5) return std::sin(kPi * z) * std::exp(lanczos_log(1.0 - z)) / kPi;
  return std::exp(-lanczos_log(z));
}

cplx hyp2f1_series(const HypergeometricParams& p, cplx z) {
  if (is_nonpositive_integer(p.c, 0.0)) throw DegenerateError("hyp2f1: c is a non-positive integer");
  cplx term = 1.0, sum = 1.0;
  int small = 0;
  for (int k = 0; k < 2000000; ++k) {
    term *= (p.a + double(k)) * (p.b + double(k)) / ((p.c + double(k)) * (k + 1.0)) * z;
    sum += term;
    if (term == 0.0) return sum;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) {
      if (++small >= 3) return sum;
    } else {
      small = 0;
    }
  }
  throw ConvergenceError("hyp2f1_series: no convergence");
}

cplx hyp2f1(const HypergeometricParams& p, cplx z) {
  const cplx a = p.a, b = p.b, c = p.c;
  if (is_nonpositive_integer(c, 0.0)) throw DegenerateError("hyp2f1: c is a non-positive integer");
  if (z == 0.0) return 1.0;
  const double az = std::abs(z);
  if (az > 1.0 + 1e-15) throw DomainError("hyp2f1: |z| > 1 outside the supported disk");
  const bool terminating = is_nonpositive_integer(a, 0.0) || is_nonpositive_integer(b, 0.0);
  if (terminating) return hyp2f1_series(p, z);
  const cplx s = c - a - b;
  if (z == 1.0) {
    if (s.real() <= 0.0) throw DomainError("hyp2f1: divergent at z = 1 (Re(c-a-b) <= 0)");
    return std::exp(lgamma_c(c) + lgamma_c(s)) * rgamma(c - a) * rgamma(c - b);
  }
  if (az <= 0.5) return hyp2f1_series(p, z);
  const double a1z = std::abs(1.0 - z);
  const double apf = az / std::abs(z - 1.0);
  const bool log_case = std::abs(s.imag()) < 1e-14 && std::abs(s.real() - std::round(s.real())) < 1e-14;
  if (a1z <= 0.5 || (a1z < apf && !log_case)) {
    if (log_case) {
      if (az < 0.95) return hyp2f1_series(p, z);
      throw DegenerateError("hyp2f1: logarithmic case c-a-b integer");
    }
    const cplx w = 1.0 - z;
    const cplx A = std::exp(lgamma_c(c) + lgamma_c(s)) * rgamma(c - a) * rgamma(c - b);
    const cplx B = std::exp(lgamma_c(c) + lgamma_c(-s)) * rgamma(a) * rgamma(b);
    const cplx f1 = hyp2f1_series({a, b, 1.0 - s}, w);
    const cplx f2 = hyp2f1_series({c - a, c - b, 1.0 + s}, w);
    return A * f1 + B * std::exp(s * std::log(w)) * f2;
  }
  if (apf < az) {
    const cplx w = z / (z - 1.0);
    return std::exp(-a * std::log(1.0 - z)) * hyp2f1_series({a, c - b, c}, w);
  }
  return hyp2f1_series(p, z);
}

HypergeometricParams spectral_params(cplx lam, double V) {
  if (V > 0.25) throw DomainError("spectral_params: constant potential must satisfy V <= 1/4");
  const cplx d = std::sqrt(0.25 - V);
  return {0.5 * (lam + 2.0 + d), 0.5 * (lam + 2.0 - d), 2.5};
}

cplx h0(double z, cplx lam, double V) { return hyp2f1(spectral_params(lam, V), z); }

cplx h0_tilde(double z, cplx lam, double V) {
  auto p = spectral_params(lam, V);
  return std::pow(z, -1.5) * hyp2f1({p.a - 1.5, p.b - 1.5, -0.5}, z);
}

cplx h1(double z, cplx lam, double V) {
  auto p = spectral_params(lam, V);
  return hyp2f1({p.a, p.b, p.a + p.b - p.c + 1.0}, 1.0 - z);
}

cplx h1_tilde(double z, cplx lam, double V) {
  auto p = spectral_params(lam, V);
  const cplx s = p.c - p.a - p.b;
  return std::exp(s * std::log(1.0 - z)) * hyp2f1({p.c - p.a, p.c - p.b, s + 1.0}, 1.0 - z);
}

namespace {
// exp(lgamma(x) - lgamma(y)) * rgamma(w) with w possibly near a pole.
cplx ratio_rg(cplx num, cplx den, cplx w) {
  const double dist = std::abs(w.real() - std::round(w.real())) + std::abs(w.imag());
  const bool near_pole = w.real() < 0.5 && dist < 0.5;
  if (near_pole) return std::exp(lgamma_c(num) - lgamma_c(den)) * rgamma(w);
  return std::exp(lgamma_c(num) - lgamma_c(den) - lgamma_c(w));
}
}  // namespace

cplx connection_coefficient(cplx lam, double V) {
  auto p = spectral_params(lam, V);
  const cplx top = p.a + p.b - p.c + 1.0;  // lambda + 1/2
  if (is_nonpositive_integer(top, 1e-12))
    throw DegenerateError("connection_coefficient: Gamma(lambda + 1/2) pole");
  if (is_nonpositive_integer(p.a, 0.0) || is_nonpositive_integer(p.b, 0.0)) return 0.0;
  // Gamma(c-1) = Gamma(3/2) = sqrt(pi)/2.  Apply rgamma to whichever of a, b
  // is closer to a pole so that simple zeros are resolved accurately.
  const cplx g32 = 0.5 * std::sqrt(kPi);
  const double da = std::abs(p.a - std::round(p.a.real()));
  const double db = std::abs(p.b - std::round(p.b.real()));
  if (db <= da) return g32 * ratio_rg(top, p.a, p.b);
  return g32 * ratio_rg(top, p.b, p.a);
}

cplx connection_coefficient_h0(cplx lam, double V) {
  auto p = spectral_params(lam, V);
  const cplx top = p.a + p.b - p.c + 1.0;
  if (is_nonpositive_integer(top, 1e-12))
    throw DegenerateError("connection_coefficient_h0: Gamma(lambda + 1/2) pole");
  // Gamma(1-c) = Gamma(-3/2) = 4 sqrt(pi)/3
  const cplx g = 4.0 * std::sqrt(kPi) / 3.0;
  return g * std::exp(lgamma_c(top)) * rgamma(p.a - p.c + 1.0) * rgamma(p.b - p.c + 1.0);
}

cplx wronskian_free(cplx lam) { return (3.0 - 2.0 * lam) * (1.0 + 2.0 * lam) * (-1.0 + 2.0 * lam); }

namespace {

inline cplx cpow(double x, cplx e) { return std::exp(e * std::log(x)); }

cplx phi1(double r, cplx lam) {
  return cpow(1.0 + r, 0.5 - lam) * (2.0 + r * (2.0 * lam - 1.0)) / (r * r * r);
}
cplx phi1_tilde(double r, cplx lam) {
  return cpow(1.0 - r, 0.5 - lam) * (2.0 + r * (1.0 - 2.0 * lam)) / (r * r * r);
}
cplx dphi1(double r, cplx lam) {
  const cplx p = 2.0 + r * (2.0 * lam - 1.0);
  return cpow(1.0 + r, 0.5 - lam) / (r * r * r) *
         (p * (-3.0 / r + (0.5 - lam) / (1.0 + r)) + (2.0 * lam - 1.0));
}
cplx dphi1_tilde(double r, cplx lam) {
  const cplx p = 2.0 + r * (1.0 - 2.0 * lam);
  return cpow(1.0 - r, 0.5 - lam) / (r * r * r) *
         (p * (-3.0 / r - (0.5 - lam) / (1.0 - r)) + (1.0 - 2.0 * lam));
}
cplx psi1(double r, cplx lam) {
  const cplx al = 0.25 + 0.5 * lam, be = 0.75 - 0.5 * lam;
  return cpow(1.0 - r, al) * cpow(1.0 + r, be) * (2.0 + r * (2.0 * lam - 1.0)) / r;
}
cplx dpsi1(double r, cplx lam) {
  const cplx al = 0.25 + 0.5 * lam, be = 0.75 - 0.5 * lam;
  const cplx p = 2.0 + r * (2.0 * lam - 1.0);
  return cpow(1.0 - r, al) * cpow(1.0 + r, be) / r *
         (p * (-1.0 / r - al / (1.0 - r) + be / (1.0 + r)) + (2.0 * lam - 1.0));
}

// Double-integral form integrated term by term:
//   int int (1 + rho t1 t2)^e t1^2 = sum_{n even} C(e,n) rho^n 2/((n+1)(n+3)),
// with e = -3/2 - lambda.  Converges geometrically for rho |e| < 1.
void phi0_small(double r, cplx lam, cplx* val, cplx* der) {
  const cplx e = -1.5 - lam;
  cplx c = 1.0;  // C(e, n) r^n
  cplx s = 0.0, d = 0.0;
  for (int n = 0; n < 400; n += 2) {
    const double f = 2.0 / ((n + 1.0) * (n + 3.0));
    const cplx term = c * f;
    s += term;
    if (der && n > 0) d += term * (double(n) / r);
    if (n > 8 && std::abs(term) < 1e-18 * std::abs(s)) break;
    c *= (e - double(n)) * (e - double(n + 1)) / ((n + 1.0) * (n + 2.0)) * (r * r);
  }
  const cplx pref = -wronskian_free(lam) / 4.0;
  *val = pref * s;
  if (der) *der = pref * d;
}

}  // namespace

double phi0_series_radius(cplx lam) { return 0.25 / std::max(1.0, std::abs(lam)); }

cplx phi0_via_representation(double rho, cplx lam, Phi0Rep rep) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw DomainError("phi0: rho must lie in (0,1)");
  switch (rep) {
    case Phi0Rep::direct:
      return phi1(rho, lam) - phi1_tilde(rho, lam);
    case Phi0Rep::single_integral: {
      const cplx pref = (3.0 - 2.0 * lam) * (-1.0 + 2.0 * lam) / (2.0 * rho);
      if (pref == 0.0) return 0.0;
      const cplx e = -0.5 - lam;
      cplx v = quad::integrate(
          [&](double t) { return std::exp(e * std::log(1.0 + rho * t)) * t; }, -1.0, 1.0, 1e-16,
          1e-14);
      return pref * v;
    }
    case Phi0Rep::double_integral: {
      const cplx pref = -wronskian_free(lam) / 4.0;
      if (pref == 0.0) return 0.0;
      const cplx e = -1.5 - lam;
      cplx v = quad::integrate(
          [&](double t1) {
            return quad::integrate(
                       [&](double t2) { return std::exp(e * std::log(1.0 + rho * t1 * t2)); }, 0.0,
                       1.0, 1e-16, 1e-14) *
                   (t1 * t1);
          },
          -1.0, 1.0, 1e-16, 1e-14);
      return pref * v;
    }
  }
  throw DomainError("phi0: unknown representation");
}

cplx free_fundamental(FreeSolutionKind kind, double rho, cplx lam) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw DomainError("free_fundamental: rho must lie in (0,1)");
  switch (kind) {
    case FreeSolutionKind::psi1: return psi1(rho, lam);
    case FreeSolutionKind::psi1_tilde: return psi1(rho, 1.0 - lam);
    case FreeSolutionKind::phi1: return phi1(rho, lam);
    case FreeSolutionKind::phi1_tilde: return phi1_tilde(rho, lam);
    case FreeSolutionKind::phi0: {
      if (rho < phi0_series_radius(lam)) {
        cplx v;
        phi0_small(rho, lam, &v, nullptr);
        return v;
      }
      return phi1(rho, lam) - phi1_tilde(rho, lam);
    }
    case FreeSolutionKind::psi0: {
      if (rho < phi0_series_radius(lam)) {
        cplx v;
        phi0_small(rho, lam, &v, nullptr);
        return rho * rho * cpow(1.0 - rho * rho, 0.25 + 0.5 * lam) * v;
      }
      return psi1(rho, lam) - psi1(rho, 1.0 - lam);
    }
  }
  throw DomainError("free_fundamental: unknown kind");
}

cplx free_fundamental_deriv(FreeSolutionKind kind, double rho, cplx lam) {
  if (!(rho > 0.0) || !(rho < 1.0)) throw DomainError("free_fundamental_deriv: rho must lie in (0,1)");
  switch (kind) {
    case FreeSolutionKind::psi1: return dpsi1(rho, lam);
    case FreeSolutionKind::psi1_tilde: return dpsi1(rho, 1.0 - lam);
    case FreeSolutionKind::phi1: return dphi1(rho, lam);
    case FreeSolutionKind::phi1_tilde: return dphi1_tilde(rho, lam);
    case FreeSolutionKind::phi0: {
      if (rho < phi0_series_radius(lam)) {
        cplx v, d;
        phi0_small(rho, lam, &v, &d);
        return d;
      }
      return dphi1(rho, lam) - dphi1_tilde(rho, lam);
    }
    case FreeSolutionKind::psi0: {
      if (rho < phi0_series_radius(lam)) {
        cplx v, d;
        phi0_small(rho, lam, &v, &d);
        const cplx al = 0.25 + 0.5 * lam;
        const double q = 1.0 - rho * rho;
        const cplx w = cpow(q, al);
        return w * ((2.0 * rho - 2.0 * al * rho * rho * rho / q) * v + rho * rho * d);
      }
      return dpsi1(rho, lam) - dpsi1(rho, 1.0 - lam);
    }
  }
  throw DomainError("free_fundamental_deriv: unknown kind");
}

// ---------------------------------------------------------------------------

namespace {

struct Walker {
  const ComplexFn& f;
  const ScanOptions& opt;
  double scale;
  long evals = 0;

  cplx eval(cplx z) {
    ++evals;
    return f(z);
  }

  // Accumulated arg change of f along the segment z0 -> z1.
  double segment(cplx z0, cplx z1) {
    const double len = std::abs(z1 - z0);
    const double hmax = len / 32.0;
    const double hmin = opt.near_zero * 1e-2;
    double total = 0.0;
    double t = 0.0;
    cplx fz = eval(z0);
    double h = hmax / len;
    while (t < 1.0) {
      if (std::abs(fz) == 0.0) throw ConvergenceError("winding: contour hits a zero");
      double step = std::min(h, 1.0 - t);
      for (;;) {
        cplx zn = z0 + (t + step) * (z1 - z0);
        cplx fn = eval(zn);
        if (std::abs(fn) == 0.0) throw ConvergenceError("winding: contour hits a zero");
        double dphi = std::arg(fn / fz);
        if (std::abs(dphi) <= opt.max_phase_step) {
          total += dphi;
          t += step;
          fz = fn;
          h = std::min(hmax / len, 2.0 * step);
          break;
        }
        step *= 0.5;
        if (step * len < hmin) throw ConvergenceError("winding: contour passes too close to a zero");
      }
    }
    return total;
  }

  int winding(const Rect& r) {
    const cplx a(r.re0, r.im0), b(r.re1, r.im0), c(r.re1, r.im1), d(r.re0, r.im1);
    const double tot = segment(a, b) + segment(b, c) + segment(c, d) + segment(d, a);
    const double k = tot / (2.0 * kPi);
    const long n = std::lround(k);
    if (std::abs(k - n) > 0.05) throw ConvergenceError("winding: non-integer phase total");
    return static_cast<int>(n);
  }
};

}  // namespace

int winding_number(const ComplexFn& f, const Rect& r, const ScanOptions& opt, long* evaluations) {
  Walker w{f, opt, std::max(r.width(), r.height())};
  int n = w.winding(r);
  if (evaluations) *evaluations += w.evals;
  return n;
}

namespace {

// Winding with automatic nudging of the rectangle edges away from zeros.
int robust_winding(Walker& w, Rect& r, const ScanOptions& opt, bool fixed_outer) {
  for (int attempt = 0; attempt <= opt.max_nudges; ++attempt) {
    try {
      return w.winding(r);
    } catch (const ConvergenceError&) {
      if (fixed_outer && attempt == opt.max_nudges) throw;
      const double d = opt.nudge * (attempt + 1) * std::max(r.width(), r.height());
      r.re0 -= d;
      r.re1 += 0.7 * d;
      r.im0 -= 0.3 * d;
      r.im1 += 0.9 * d;
    }
  }
  throw ConvergenceError("spectrum scan: could not avoid zeros on contour");
}

std::vector<Rect> split_rect(const Rect& r, double fx, double fy) {
  const bool split_x = r.width() >= 0.5 * r.height();
  const bool split_y = r.height() >= 0.5 * r.width();
  const double mx = r.re0 + fx * r.width(), my = r.im0 + fy * r.height();
  if (split_x && split_y)
    return {{r.re0, mx, r.im0, my}, {mx, r.re1, r.im0, my}, {r.re0, mx, my, r.im1}, {mx, r.re1, my, r.im1}};
  if (split_x) return {{r.re0, mx, r.im0, r.im1}, {mx, r.re1, r.im0, r.im1}};
  return {{r.re0, r.re1, r.im0, my}, {r.re0, r.re1, my, r.im1}};
}

void subdivide(Walker& w, const Rect& r, int count, const ScanOptions& opt, ScanResult& out,
               int depth) {
  if (count == 0) return;
  const double size = std::max(r.width(), r.height());
  if (size <= opt.locate_tol || depth > 80) {
    out.zeros.push_back({r.center(), count, size});
    return;
  }
  // Split off-centre so that symmetric points (real axis, integers) do not
  // land on the new edges; if a zero still sits on an edge, move the split.
  static const double offsets[][2] = {{0.5131, 0.4827}, {0.5502, 0.4519}, {0.4711, 0.5389}};
  for (const auto& off : offsets) {
    std::vector<Rect> kids = split_rect(r, off[0], off[1]);
    std::vector<int> counts;
    try {
      for (const Rect& k : kids) counts.push_back(w.winding(k));
    } catch (const ConvergenceError&) {
      continue;
    }
    int found = 0;
    for (int c : counts) found += c;
    if (found != count) throw ConvergenceError("spectrum scan: inconsistent zero count after split");
    for (size_t k = 0; k < kids.size(); ++k) subdivide(w, kids[k], counts[k], opt, out, depth + 1);
    return;
  }
  throw ConvergenceError("spectrum scan: zero on every trial split edge");
}

}  // namespace

ScanResult find_zeros(const ComplexFn& f, const Rect& r0, const ScanOptions& opt) {
  Walker w{f, opt, std::max(r0.width(), r0.height())};
  Rect r = r0;
  ScanResult out;
  out.total_count = robust_winding(w, r, opt, true);
  subdivide(w, r, out.total_count, opt, out, 0);
  // Secant polish inside each final box.
  for (auto& z : out.zeros) {
    if (z.multiplicity != 1) continue;
    cplx x0 = z.location, x1 = z.location + cplx(0.25 * z.box_size, 0.1 * z.box_size);
    cplx f0 = w.eval(x0), f1 = w.eval(x1);
    for (int it = 0; it < 30 && f1 != f0; ++it) {
      cplx x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
      x0 = x1;
      f0 = f1;
      x1 = x2;
      f1 = w.eval(x1);
      if (std::abs(x1 - x0) < 1e-15 * std::max(1.0, std::abs(x1)) || f1 == 0.0) break;
    }
    if (std::abs(x1 - z.location) <= z.box_size) z.location = x1;
  }
  std::sort(out.zeros.begin(), out.zeros.end(), [](const LocatedZero& a, const LocatedZero& b) {
    return a.location.real() != b.location.real() ? a.location.real() < b.location.real()
                                                  : a.location.imag() < b.location.imag();
  });
  out.evaluations = w.evals;
  return out;
}

ScanResult spectrum_scan(const Rect& r, const ScanOptions& opt, double V) {
  if (r.re0 <= 0.0) throw DomainError("spectrum_scan: rectangle must lie in Re lambda > 0");
  return find_zeros([V](cplx l) { return connection_coefficient(l, V); }, r, opt);
}

}  // namespace conelab::sf
