#include "conelab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace conelab::quad {

namespace {

// Legendre P_0..P_{m} at x.
void legendre_all(int m, double x, std::vector<double>& p) {
  p.assign(m + 1, 0.0);
  p[0] = 1.0;
  if (m >= 1) p[1] = x;
  for (int k = 2; k <= m; ++k)
    p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
}

Rule make_gauss_legendre(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double pn = (n == 1) ? x : p1;
      double pm = (n == 1) ? 1.0 : p0;
      double dp = n * (x * pn - pm) / (x * x - 1.0);
      double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        // one more evaluation for the weight
        p0 = 1.0;
        p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        pn = (n == 1) ? x : p1;
        pm = (n == 1) ? 1.0 : p0;
        dp = n * (x * pn - pm) / (x * x - 1.0);
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
    }
  }
  return r;
}

// Jacobi P_n^{(0,beta)}(x) and P_{n-1}.
void jacobi_pair(int n, double beta, double x, double& pn, double& pnm1) {
  const double a = 0.0, b = beta;
  double p0 = 1.0;
  double p1 = 0.5 * ((a + b + 2.0) * x + (a - b));
  if (n == 0) {
    pn = p0;
    pnm1 = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    double c = 2.0 * k + a + b;
    double a1 = 2.0 * k * (k + a + b) * (c - 2.0);
    double a2 = (c - 1.0) * (a * a - b * b);
    double a3 = (c - 2.0) * (c - 1.0) * c;
    double a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
    double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  pnm1 = p0;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

Rule gauss_jacobi_unit(int n, double beta) {
  if (n < 1 || beta <= -1.0) throw DomainError("gauss_jacobi_unit: bad arguments");
  const double a = 0.0, b = beta;
  // Golub-Welsch for initial nodes.
  MatR J = MatR::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double c = 2.0 * k + a + b;
    J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (c * (c + 2.0));
    if (k + 1 < n) {
      double kk = k + 1.0;
      double cc = 2.0 * kk + a + b;
      double v = 4.0 * kk * (kk + a) * (kk + b) * (kk + a + b) /
                 (cc * cc * (cc + 1.0) * (cc - 1.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(v);
    }
  }
  Eigen::SelfAdjointEigenSolver<MatR> es(J);
  VecR x = es.eigenvalues();
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  const double lognorm = (a + b + 1.0) * std::log(2.0) + std::lgamma(n + a + 1.0) +
                         std::lgamma(n + b + 1.0) - std::lgamma(n + a + b + 1.0) -
                         std::lgamma(n + 1.0);
  for (int i = 0; i < n; ++i) {
    double xi = x[i];
    double dp = 0.0;
    for (int it = 0; it < 8; ++it) {
      double pn, pm;
      jacobi_pair(n, beta, xi, pn, pm);
      double c = 2.0 * n + a + b;
      dp = (n * ((a - b) - c * xi) * pn + 2.0 * (n + a) * (n + b) * pm) /
           (c * (1.0 - xi * xi));
      double dx = pn / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-17) break;
    }
    double pn, pm;
    jacobi_pair(n, beta, xi, pn, pm);
    double c = 2.0 * n + a + b;
    dp = (n * ((a - b) - c * xi) * pn + 2.0 * (n + a) * (n + b) * pm) /
         (c * (1.0 - xi * xi));
    double w = std::exp(lognorm) / ((1.0 - xi * xi) * dp * dp);
    r.x[i] = 0.5 * (1.0 + xi);
    r.w[i] = w / std::pow(2.0, b + 1.0);
  }
  // sort ascending
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int p, int q) { return r.x[p] < r.x[q]; });
  Rule s;
  s.x.resize(n);
  s.w.resize(n);
  for (int i = 0; i < n; ++i) {
    s.x[i] = r.x[idx[i]];
    s.w[i] = r.w[idx[i]];
  }
  return s;
}

namespace {
MatR make_cumulative(int n) {
  const Rule& g = gauss_legendre(n);
  MatR C(n, n);  // C(k,j) Legendre coefficient of l_j
  std::vector<double> p;
  for (int j = 0; j < n; ++j) {
    legendre_all(n, g.x[j], p);
    for (int k = 0; k < n; ++k) C(k, j) = 0.5 * (2.0 * k + 1.0) * g.w[j] * p[k];
  }
  MatR S(n, n);
  for (int i = 0; i < n; ++i) {
    VecR q = VecR::Zero(n);
    legendre_all(n, g.x[i], p);
    q[0] = g.x[i] + 1.0;
    for (int k = 1; k < n; ++k) q[k] = (p[k + 1] - p[k - 1]) / (2.0 * k + 1.0);
    for (int j = 0; j < n; ++j) S(i, j) = q.dot(C.col(j));
  }
  return S;
}
}  // namespace

const MatR& gl_cumulative(int n) {
  static std::mutex mu;
  static std::map<int, MatR> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_cumulative(n)).first;
  return it->second;
}

VecR gl_partial_weights(int n, double u) {
  const Rule& g = gauss_legendre(n);
  std::vector<double> p;
  legendre_all(n, u, p);
  VecR q(n);
  q[0] = u + 1.0;
  for (int k = 1; k < n; ++k) q[k] = (p[k + 1] - p[k - 1]) / (2.0 * k + 1.0);
  VecR r(n);
  std::vector<double> pj;
  for (int j = 0; j < n; ++j) {
    legendre_all(n, g.x[j], pj);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += 0.5 * (2.0 * k + 1.0) * g.w[j] * pj[k] * q[k];
    r[j] = s;
  }
  return r;
}

VecR barycentric_weights(const VecR& x) {
  const int n = static_cast<int>(x.size());
  const double span = (n > 1) ? (x.maxCoeff() - x.minCoeff()) : 1.0;
  const double scale = 4.0 / span;
  VecR w(n);
  for (int j = 0; j < n; ++j) {
    double logp = 0.0;
    int sign = 1;
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      double d = scale * (x[j] - x[k]);
      if (d < 0) sign = -sign;
      logp += std::log(std::abs(d));
    }
    w[j] = sign * std::exp(-logp);
  }
  double m = w.cwiseAbs().maxCoeff();
  return w / m;
}

template <class T>
static T bary_impl(const VecR& x, const VecR& w, const Eigen::Matrix<T, -1, 1>& f, double t) {
  T num = T(0);
  double den = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    double d = t - x[j];
    if (d == 0.0) return f[j];
    double c = w[j] / d;
    num += c * f[j];
    den += c;
  }
  return num / den;
}

cplx barycentric_eval(const VecR& x, const VecR& w, const VecC& f, double t) {
  return bary_impl<cplx>(x, w, f, t);
}
double barycentric_eval(const VecR& x, const VecR& w, const VecR& f, double t) {
  return bary_impl<double>(x, w, f, t);
}

MatR differentiation_matrix(const VecR& x, const VecR& w) {
  const int n = static_cast<int>(x.size());
  MatR D = MatR::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      D(i, j) = (w[j] / w[i]) / (x[i] - x[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

namespace {
const double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
const double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
const double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T, class F>
void gk15(const F& f, double a, double b, T& kron, T& gauss) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  T fc = f(c);
  kron = fc * kWgk[7];
  gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    double dx = h * kXgk[j];
    T f1 = f(c - dx), f2 = f(c + dx);
    kron += (f1 + f2) * kWgk[j];
    if (j % 2 == 1) gauss += (f1 + f2) * kWg[j / 2];
  }
  kron *= h;
  gauss *= h;
}

template <class T, class F>
T adapt(const F& f, double a, double b, double abs_tol, double rel_tol, int depth,
        double& err_acc, const T& whole, double whole_err) {
  double m = 0.5 * (a + b);
  T k1, g1, k2, g2;
  gk15<T>(f, a, m, k1, g1);
  gk15<T>(f, m, b, k2, g2);
  T sum = k1 + k2;
  double err = std::abs(k1 - g1) + std::abs(k2 - g2);
  (void)whole;
  (void)whole_err;
  if (err <= std::max(abs_tol, rel_tol * std::abs(sum)) || depth <= 0 || (b - a) < 1e-15 * (std::abs(a) + std::abs(b) + 1e-300)) {
    err_acc += err;
    return sum;
  }
  return adapt<T>(f, a, m, 0.5 * abs_tol, rel_tol, depth - 1, err_acc, k1, std::abs(k1 - g1)) +
         adapt<T>(f, m, b, 0.5 * abs_tol, rel_tol, depth - 1, err_acc, k2, std::abs(k2 - g2));
}
}  // namespace

cplx integrate(const std::function<cplx(double)>& f, double a, double b, double abs_tol,
               double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  cplx k, g;
  gk15<cplx>(f, a, b, k, g);
  double err = 0.0;
  return adapt<cplx>(f, a, b, abs_tol, rel_tol, max_depth, err, k, std::abs(k - g));
}

double integrate_real(const std::function<double(double)>& f, double a, double b,
                      double abs_tol, double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  double k, g;
  gk15<double>(f, a, b, k, g);
  double err = 0.0;
  return adapt<double>(f, a, b, abs_tol, rel_tol, max_depth, err, k, std::abs(k - g));
}

double integrate_tanh_sinh(const std::function<double(double)>& f, double a, double b,
                           double tol) {
  const double hw = 0.5 * (b - a);
  auto term = [&](double t) {
    double s = 0.5 * kPi * std::sinh(t);
    double ch = std::cosh(s);
    double w = 0.5 * kPi * std::cosh(t) / (ch * ch);
    // distance to endpoints computed without cancellation
    double e = 1.0 / (std::exp(2.0 * s) + 1.0);  // (1 - x)/2 for s>0 side
    double xx;
    if (s > 0) xx = b - hw * 2.0 * e;
    else xx = a + hw * 2.0 * (1.0 / (std::exp(-2.0 * s) + 1.0));
    if (xx <= a || xx >= b) return 0.0;
    return w * f(xx);
  };
  double h = 1.0;
  double sum = term(0.0);
  for (int k = 1; k < 200; ++k) {
    double t = k * h;
    double v = term(t) + term(-t);
    sum += v;
    if (std::abs(v) < 1e-300 && t > 4) break;
    if (t > 6.5) break;
  }
  double result = hw * h * sum;
  for (int level = 0; level < 12; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (int k = 1;; k += 2) {
      double t = k * h;
      if (t > 6.5) break;
      add += term(t) + term(-t);
    }
    sum += add;
    double next = hw * h * sum;
    if (std::abs(next - result) <= tol * std::max(1.0, std::abs(next)) && level > 2) return next;
    result = next;
  }
  return result;
}

namespace {
// Solve the dual Vandermonde system  sum_j x_j^k z_j = b_k  (Bjorck-Pereyra).
VecC dual_vandermonde(const VecR& x, VecC b) {
  const int n = static_cast<int>(x.size()) - 1;
  for (int k = 0; k < n; ++k)
    for (int i = n; i >= k + 1; --i) b[i] -= x[k] * b[i - 1];
  for (int k = n - 1; k >= 0; --k) {
    for (int i = k + 1; i <= n; ++i) b[i] /= (x[i] - x[i - k - 1]);
    for (int i = k; i <= n - 1; ++i) b[i] -= b[i + 1];
  }
  return b;
}
}  // namespace

namespace {
// int_0^{xi} x^mu l_j(x) dx on the unit-scaled nodes x, times eta^{mu+1}.
VecC power_row_unit(const VecR& x, cplx mu, double xi, cplx scale) {
  const int n = static_cast<int>(x.size());
  VecC m(n);
  const cplx base = (xi > 0) ? std::exp((mu + 1.0) * std::log(xi)) : cplx(0.0);
  double xp = 1.0;
  for (int k = 0; k < n; ++k) {
    m[k] = base * xp / (mu + double(k) + 1.0);
    xp *= xi;
  }
  return VecC(dual_vandermonde(x, m) * scale);
}
VecR unit_gl_nodes(int n) {
  const Rule& g = gauss_legendre(n);
  VecR x(n);
  for (int j = 0; j < n; ++j) x[j] = 0.5 * (g.x[j] + 1.0);
  return x;
}
}  // namespace

PowerEndRule power_end_rule(int n, double eta, cplx mu) {
  const VecR x = unit_gl_nodes(n);
  PowerEndRule r;
  r.t = eta * x;
  r.cum.resize(n, n);
  const cplx scale = std::exp((mu + 1.0) * std::log(eta));
  for (int i = 0; i < n; ++i) r.cum.row(i) = power_row_unit(x, mu, x[i], scale).transpose();
  r.total = power_row_unit(x, mu, 1.0, scale);
  return r;
}

VecC power_end_row(int n, double eta, cplx mu, double t) {
  const VecR x = unit_gl_nodes(n);
  const cplx scale = std::exp((mu + 1.0) * std::log(eta));
  return power_row_unit(x, mu, std::clamp(t / eta, 0.0, 1.0), scale);
}

cplx wynn_epsilon(const std::vector<cplx>& s, double* err_estimate) {
  const int n = static_cast<int>(s.size());
  if (n == 0) {
    if (err_estimate) *err_estimate = 0.0;
    return 0.0;
  }
  if (n < 3) {
    if (err_estimate) *err_estimate = (n == 2) ? std::abs(s[1] - s[0]) : std::abs(s[0]);
    return s.back();
  }
  // e[k] holds column k of the epsilon table for the current diagonal.
  cplx best = s.back();
  double best_err = std::abs(s[n - 1] - s[n - 2]);
  // a, b: two most recent columns of the epsilon table (eps_{-1} = 0).
  std::vector<cplx> a(n, 0.0), b(s.begin(), s.end());
  int col = 0;
  while (static_cast<int>(b.size()) > 1) {
    std::vector<cplx> c(b.size() - 1);
    bool ok = true;
    for (size_t i = 0; i + 1 < b.size(); ++i) {
      cplx d = b[i + 1] - b[i];
      if (std::abs(d) < 1e-300) {
        ok = false;
        break;
      }
      c[i] = a[i + 1] + 1.0 / d;
    }
    if (!ok) break;
    ++col;
    if (col % 2 == 0 && c.size() >= 2) {
      double e = std::abs(c.back() - c[c.size() - 2]);
      if (e < best_err) {
        best_err = e;
        best = c.back();
      }
    }
    a = b;
    b = c;
  }
  if (err_estimate) *err_estimate = best_err;
  return best;
}

FourierResult fourier_integral(const std::function<cplx(double)>& f, double a,
                               const std::vector<double>& breaks, const FourierOptions& opt) {
  const Rule& g = gauss_legendre(opt.nodes);
  auto kernel = [&](double w) { return std::exp(cplx(0.0, a * w)) * f(w); };
  auto panel_sum = [&](double lo, double hi) {
    cplx s = 0.0;
    double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (int j = 0; j < opt.nodes; ++j) s += g.w[j] * kernel(c + h * g.x[j]);
    return s * h;
  };
  const double aa = std::abs(a);
  double width = opt.panel;
  if (aa > 0) width = std::min(width, 2.0 / aa);
  double x0 = opt.x0;
  for (double bpt : breaks) x0 = std::max(x0, std::abs(bpt) * 1.25);
  std::vector<double> pts{-x0, x0};
  for (double bpt : breaks)
    if (std::abs(bpt) < x0) pts.push_back(bpt);
  std::sort(pts.begin(), pts.end());
  cplx core = 0.0;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    double lo = pts[k], hi = pts[k + 1];
    if (hi - lo <= 0) continue;
    int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
    double d = (hi - lo) / m;
    for (int i = 0; i < m; ++i) core += panel_sum(lo + i * d, lo + (i + 1) * d);
  }
  FourierResult res{core, 0.0, true};
  if (aa == 0.0) {
    res.converged = false;
    return res;
  }
  // tails by half-periods
  const double half = kPi / aa;
  auto tail = [&](int sign) {
    std::vector<cplx> partial;
    cplx acc = 0.0;
    double lo = x0;
    double err = 1e300;
    cplx est = 0.0;
    for (int k = 0; k < opt.max_cycles; ++k) {
      double hi = lo + half;
      int m = std::max(1, static_cast<int>(std::ceil(half / std::max(width, 0.02 * lo))));
      double d = half / m;
      cplx piece = 0.0;
      for (int i = 0; i < m; ++i) {
        double p = lo + i * d, q = lo + (i + 1) * d;
        piece += (sign > 0) ? panel_sum(p, q) : panel_sum(-q, -p);
      }
      acc += piece;
      partial.push_back(acc);
      lo = hi;
      if (partial.size() >= 8 && partial.size() % 2 == 0) {
        size_t keep = std::min<size_t>(partial.size(), 40);
        std::vector<cplx> sub(partial.end() - keep, partial.end());
        est = wynn_epsilon(sub, &err);
        if (err < opt.tol * std::max(1e-300, std::abs(core) + std::abs(est)) || err < 1e-300 ||
            std::abs(piece) < 1e-18 * std::max(1.0, std::abs(core)))
          return std::pair<cplx, double>(est, err);
      }
    }
    return std::pair<cplx, double>(est, err);
  };
  auto [tp, ep] = tail(+1);
  auto [tm, em] = tail(-1);
  res.value = core + tp + tm;
  res.tail_error = ep + em;
  res.converged = res.tail_error < 1e3 * opt.tol * std::max(1.0, std::abs(res.value));
  return res;
}

}  // namespace conelab::quad
