#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/params.hpp"
#include "wavekin/quadrature.hpp"
#include "wavekin/spectrum.hpp"

namespace wk {

// Resolution of the resonant-curve quadrature.
struct KernelQuad {
  double box = 0.0;         // integration half-width, 0 = from the spectrum
  double outer_tol = 1e-9;  // adaptive tolerance per xi1 panel
  int outer_panels = 64;    // initial xi1 panels ahead of the recursion
  double s_cutoff = 1e-4;   // half-width of the level window around Omega = 0
  int s_points = 8;         // uniform level nodes per window, keep even
  int scan_points = 1024;   // xi3 bracketing resolution
  double jac_floor = 1e-7;

  // Companion setting used to confirm convergence of a fixture value.
  KernelQuad refined() const {
    KernelQuad q = *this;
    q.outer_tol *= 0.1;
    q.outer_panels *= 2;
    q.s_cutoff *= 0.5;
    q.s_points *= 2;
    q.scan_points *= 2;
    return q;
  }
};

struct KernelGrid {
  std::vector<double> xi;
  std::vector<double> values;
  double sigma = 0.5;
  KernelQuad quad;
};

namespace detail {

// phi phi1 phi2 phi3 (1/phi - 1/phi1 + 1/phi2 - 1/phi3) multiplied out and
// grouped in pairs. Never divides, so zeros of n are harmless, and both
// pairings {x1,x3} = {x2,x} cancel exactly, not just up to rounding.
inline double kinetic_bracket(double phi, double phi1, double phi2,
                              double phi3) {
  return (phi1 - phi) * (phi2 * phi3) + (phi * phi1) * (phi3 - phi2);
}

inline double signed_power(double u, double e) {
  double g = std::pow(std::max(std::abs(u), 1e-300), e);
  return u < 0 ? -g : g;
}

inline double lerp_table(const std::vector<double>& xs,
                         const std::vector<double>& vs, double x) {
  if (x <= xs.front() || x >= xs.back()) return 0.0;
  size_t hi =
      size_t(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
  double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
  return vs[hi - 1] + t * (vs[hi] - vs[hi - 1]);
}

struct KernelWork {
  const std::function<double(double)>* n = nullptr;
  double xi = 0, sigma = 0.5, om = 0, phi = 0;
  double b3 = 0;
  const KernelQuad* q = nullptr;
  bool singular = false;
};

// Delta integral over the resonant curve at fixed xi1. Each branch root of
// Omega = 0 contributes bracket / |dOmega/dxi3|. Where that Jacobian falls
// below the floor (the curve degenerates along xi1 = xi, where the slice
// profile collapses toward zero as a whole) the root is replaced by the
// average of the branch over the levels |s| <= cutoff of s = Omega;
// substituting back, the level average is the plain xi3 integral of the
// bracket over the window |Omega| <= cutoff divided by its s-width, which
// stays bounded however small the Jacobian gets.
inline double curve_average(KernelWork& w, double xi1) {
  const KernelQuad& q = *w.q;
  double om1 = omega_of(xi1, w.sigma);
  double phi1 = (*w.n)(xi1);
  auto omega_at = [&](double x3) {
    return om1 - omega_of(xi1 + x3 - w.xi, w.sigma) +
           omega_of(x3, w.sigma) - w.om;
  };
  auto bracket_at = [&](double x3) {
    return kinetic_bracket(w.phi, phi1, (*w.n)(xi1 + x3 - w.xi), (*w.n)(x3));
  };
  auto bisect = [&](double a, double b, double ga, double level) {
    for (int it = 0; it < 60; it++) {
      double m = 0.5 * (a + b);
      double gm = omega_at(m) - level;
      if ((gm < 0) == (ga < 0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };
  // Scan ladder: split at the dispersion cusps x3 = 0 and x3 = xi - xi1 and
  // cluster nodes quadratically toward every segment end. Root pairs hug a
  // cusp at distance Omega(cusp)^2 when Omega(cusp) is small, so the cusps
  // themselves must be nodes or the pair slips between two samples.
  static thread_local std::vector<double> xs, om3;
  xs.clear();
  double bp[4];
  int nbp = 0;
  bp[nbp++] = -w.b3;
  double c1 = std::min(0.0, w.xi - xi1), c2 = std::max(0.0, w.xi - xi1);
  double last = -w.b3;
  for (double c : {c1, c2})
    if (c > -w.b3 + 1e-9 && c < w.b3 - 1e-9 && c - last > 1e-9) {
      bp[nbp++] = c;
      last = c;
    }
  bp[nbp++] = w.b3;
  for (int sg = 0; sg + 1 < nbp; sg++) {
    double a = bp[sg], b = bp[sg + 1];
    int m = std::max(32, int(q.scan_points * (b - a) / (2.0 * w.b3)));
    for (int j = 0; j < m; j++) {
      double u = double(j) / m;
      xs.push_back(a + (b - a) * (u * u * (3.0 - 2.0 * u)));
    }
  }
  xs.push_back(w.b3);
  int nsc = int(xs.size());
  om3.assign(size_t(nsc), 0.0);
  for (int j = 0; j < nsc; j++) om3[size_t(j)] = omega_at(xs[size_t(j)]);
  double acc = 0;
  double window_hi = -w.b3;  // right edge of the last degenerate window
  for (int j = 0; j + 1 < nsc; j++) {
    double ga = om3[size_t(j)], gb = om3[size_t(j) + 1];
    if (!(ga < 0 && gb > 0) && !(ga > 0 && gb < 0)) continue;
    if (xs[size_t(j)] < window_hi) continue;
    double r = bisect(xs[size_t(j)], xs[size_t(j) + 1], ga, 0.0);
    double jac = std::abs(w.sigma * (signed_power(r, w.sigma - 1) -
                                     signed_power(xi1 + r - w.xi,
                                                  w.sigma - 1)));
    if (jac >= q.jac_floor) {
      acc += bracket_at(r) / jac;
      continue;
    }
    double wcut = q.s_cutoff;
    int jl = j, jr = j + 1;
    while (jl > 0 && std::abs(om3[size_t(jl)]) <= wcut) jl--;
    while (jr + 1 < nsc && std::abs(om3[size_t(jr)]) <= wcut) jr++;
    double sign_l = om3[size_t(jl)] < 0 ? -1.0 : 1.0;
    double sign_r = om3[size_t(jr)] < 0 ? -1.0 : 1.0;
    double lo = std::abs(om3[size_t(jl)]) <= wcut
                    ? xs[size_t(jl)]
                    : bisect(xs[size_t(jl)], xs[size_t(jl) + 1],
                             om3[size_t(jl)] - sign_l * wcut, sign_l * wcut);
    double hi = std::abs(om3[size_t(jr)]) <= wcut
                    ? xs[size_t(jr)]
                    : bisect(xs[size_t(jr) - 1], xs[size_t(jr)],
                             om3[size_t(jr) - 1] - sign_r * wcut,
                             sign_r * wcut);
    if (!(hi > lo)) {
      w.singular = true;
      continue;
    }
    int nodes = std::clamp(q.s_points * 8, 64, 1024);
    double win = 0, step = (hi - lo) / nodes;
    for (int i = 0; i < nodes; i++) win += bracket_at(lo + (i + 0.5) * step);
    acc += win * step / (2.0 * wcut);
    window_hi = hi;
  }
  return acc;
}

inline double kernel_once(const std::function<double(double)>& n,
                          double support, double xi, double sigma,
                          const KernelQuad& q, bool& singular) {
  double b = q.box > 0 ? q.box : support + 0.5;
  KernelWork w;
  w.n = &n;
  w.xi = xi;
  w.sigma = sigma;
  w.om = omega_of(xi, sigma);
  w.phi = n(xi);
  w.b3 = b;
  w.q = &q;
  // Panelize before recursing: the curve integrand vanishes outside a
  // narrow band, and a lone Simpson estimate over the full box would
  // accept 0 without ever sampling it.
  auto inner = [&](double xi1) { return curve_average(w, xi1); };
  int panels = q.outer_panels > 0 ? q.outer_panels : 1;
  double v = 0.0;
  double h = 2.0 * b / panels;
  for (int i = 0; i < panels; ++i)
    v += adaptive_simpson(inner, -b + i * h, -b + (i + 1) * h, q.outer_tol);
  singular = w.singular;
  return v;
}

}  // namespace detail

// Collision operator K(n)(xi). For sigma > 1 the resonant set carries only
// the pairings {xi1,xi3} = {xi2,xi} where the bracket vanishes, so the
// value is exactly 0; for sigma < 1 the nontrivial resonant curve is
// integrated with the level-window quadrature above.
inline double collision_kernel(const std::function<double(double)>& n,
                               double support, double xi, double sigma,
                               const KernelQuad& quad = {}) {
  if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
    throw domain_error("kinetics: sigma must lie in (0,2] and differ from 1");
  if (!std::isfinite(xi)) throw usage_error("kinetics: xi must be finite");
  if (!(support > 0)) return 0.0;
  if (sigma > 1.0) return 0.0;
  KernelQuad q = quad;
  for (int attempt = 0; attempt < 3; attempt++) {
    bool singular = false;
    double v = detail::kernel_once(n, support, xi, sigma, q, singular);
    if (!singular) {
      if (!std::isfinite(v))
        throw numeric_error("kinetics: kernel quadrature not finite");
      return v;
    }
    q = q.refined();
  }
  throw numeric_error("kinetics: resonant curve jacobian unresolved");
}

inline double collision_kernel(const Spectrum& n, double xi, double sigma,
                               const KernelQuad& quad = {}) {
  return collision_kernel([&n](double x) { return n(x); },
                          n.support_radius(), xi, sigma, quad);
}

inline KernelGrid kernel_grid(const Spectrum& n, std::vector<double> xi,
                              double sigma, const KernelQuad& quad = {},
                              int jobs = 1) {
  if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
    throw domain_error("kinetics: sigma must lie in (0,2] and differ from 1");
  KernelGrid g;
  g.xi = std::move(xi);
  g.values.assign(g.xi.size(), 0.0);
  g.sigma = sigma;
  g.quad = quad;
  std::mutex mu;
  std::string fail;
  parallel_for(jobs, int64_t(g.xi.size()), [&](int64_t lo, int64_t hi) {
    try {
      for (int64_t i = lo; i < hi; i++)
        g.values[size_t(i)] = collision_kernel(n, g.xi[size_t(i)], sigma, quad);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lk(mu);
      if (fail.empty()) fail = e.what();
    }
  });
  if (!fail.empty()) throw numeric_error(fail);
  return g;
}

// Riemann-sum surrogate: bracket-weighted mass of the strip |Omega| <= window
// normalized by the window width. Tends to the kernel value as the window
// shrinks, in particular to 0 for sigma > 1.
inline double near_resonant_surrogate(const Spectrum& n, double xi,
                                      double sigma, double window, double step,
                                      double box = 0.0) {
  if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
    throw domain_error("kinetics: sigma must lie in (0,2] and differ from 1");
  if (!(window > 0) || !(step > 0))
    throw domain_error("kinetics: window and step must be positive");
  double b = box > 0 ? box : n.support_radius() + 0.5;
  double om = omega_of(xi, sigma);
  double phi = n(xi);
  int m = int(std::floor(b / step));
  double acc = 0;
  for (int i = -m; i < m; i++) {
    double x1 = (i + 0.5) * step;
    double om1 = omega_of(x1, sigma);
    double phi1 = n(x1);
    for (int j = -m; j < m; j++) {
      double x3 = (j + 0.5) * step;
      double om_sum =
          om1 - omega_of(x1 + x3 - xi, sigma) + omega_of(x3, sigma) - om;
      if (std::abs(om_sum) > window) continue;
      acc += detail::kinetic_bracket(phi, phi1, n(x1 + x3 - xi), n(x3));
    }
  }
  return acc * step * step / (2.0 * window);
}

struct WkeTrajectory {
  std::vector<double> times;
  std::vector<Spectrum> spectra;
};

// Explicit RK4 on dn/dt = K(n), one snapshot per step. A table spectrum is
// integrated on its own grid, closed forms on a uniform grid covering the
// support. Negative excursions beyond tolerance trigger step halving, twice,
// before giving up.
inline WkeTrajectory integrate_wke(const Spectrum& n0, double t_end, int steps,
                                   double sigma, const KernelQuad& quad = {},
                                   double grid_step = 0.25, int jobs = 1) {
  if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
    throw domain_error("kinetics: sigma must lie in (0,2] and differ from 1");
  if (steps < 1) throw usage_error("kinetics: steps must be positive");
  if (!(t_end >= 0)) throw domain_error("kinetics: tEnd must be nonnegative");
  std::vector<double> grid, base;
  if (n0.is_table()) {
    grid = n0.grid();
    base = n0.values();
  } else {
    double r = std::ceil(n0.support_radius() / grid_step) * grid_step;
    for (double x = -r; x <= r + 0.5 * grid_step; x += grid_step)
      grid.push_back(x);
    for (double x : grid) base.push_back(n0(x));
  }
  double supp = std::max(std::abs(grid.front()), std::abs(grid.back()));
  double peak = 0;
  for (double v : base) peak = std::max(peak, v);
  double neg_tol = 1e-9 * (peak > 0 ? peak : 1.0);

  auto deriv = [&](const std::vector<double>& vals) {
    std::vector<double> out(vals.size(), 0.0);
    std::mutex mu;
    std::string fail;
    parallel_for(jobs, int64_t(grid.size()), [&](int64_t lo, int64_t hi) {
      try {
        auto fn = [&](double x) { return detail::lerp_table(grid, vals, x); };
        for (int64_t i = lo; i < hi; i++)
          out[size_t(i)] =
              collision_kernel(fn, supp, grid[size_t(i)], sigma, quad);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(mu);
        if (fail.empty()) fail = e.what();
      }
    });
    if (!fail.empty()) throw numeric_error(fail);
    return out;
  };
  auto shifted = [](const std::vector<double>& a, double c,
                    const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); i++) out[i] = a[i] + c * b[i];
    return out;
  };

  for (int attempt = 0;; attempt++) {
    int n_steps = steps * (1 << attempt);
    double dt = t_end / n_steps;
    std::vector<double> vals = base;
    WkeTrajectory tr;
    auto snap = [&](double tm) {
      std::vector<double> cl = vals;
      for (double& v : cl) v = std::max(v, 0.0);
      tr.times.push_back(tm);
      tr.spectra.push_back(Spectrum::table(grid, cl));
    };
    snap(0.0);
    bool bad = false;
    for (int st = 0; st < n_steps && !bad; st++) {
      if (dt > 0) {
        auto k1 = deriv(vals);
        auto k2 = deriv(shifted(vals, 0.5 * dt, k1));
        auto k3 = deriv(shifted(vals, 0.5 * dt, k2));
        auto k4 = deriv(shifted(vals, dt, k3));
        for (size_t i = 0; i < vals.size(); i++)
          vals[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      }
      for (double v : vals)
        if (v < -neg_tol) bad = true;
      if (!bad) snap(dt * (st + 1));
    }
    if (!bad) return tr;
    if (attempt >= 2)
      throw numeric_error("kinetics: spectrum went negative during integration");
  }
}

// Correlation correction K2 at wavenumber k_num/L: the alpha^2 s^2 T^2 / L^2
// weighted lattice sum of the bracket against sinc^2(pi T s Omega), with the
// exactly resonant terms Omega = 0 left out unless asked for.
inline double k2_discrete(const PhysicalParams& p, double s, int64_t k_num,
                          const Spectrum& nin, bool include_resonant = false) {
  p.validate();
  if (p.L > 64) throw domain_error("kinetics: k2 lattice sum needs L <= 64");
  if (!std::isfinite(s)) throw usage_error("kinetics: s must be finite");
  double inv_l = 1.0 / p.L;
  double phi = nin(double(k_num) * inv_l);
  double om = p.omega_num(k_num);
  int64_t m_in = int64_t(std::ceil(nin.support_radius() * p.L)) + 1;
  int64_t m_out = 2 * m_in + std::llabs(k_num);
  double sum = 0;
  for (int64_t m1 = -m_out; m1 <= m_out; m1++) {
    double phi1 = nin(double(m1) * inv_l);
    double om1 = p.omega_num(m1);
    for (int64_t m3 = -m_out; m3 <= m_out; m3++) {
      int64_t m2 = m1 + m3 - k_num;
      double om_sum = om1 - p.omega_num(m2) + p.omega_num(m3) - om;
      if (om_sum == 0.0 && !include_resonant) continue;
      double br = detail::kinetic_bracket(phi, phi1, nin(double(m2) * inv_l),
                                          nin(double(m3) * inv_l));
      if (br == 0.0) continue;
      double w = sinc(M_PI * p.T * s * om_sum);
      sum += br * (w * w);
    }
  }
  return p.alpha * p.alpha * s * s * p.T * p.T / (double(p.L) * p.L) * sum;
}

struct SincCheck {
  double value = 0;   // t * integral of sinc^2 against f
  double target = 0;  // f(0)
  double err = 0;
  double cf = 0;      // 2 (sup|f| + sup|f'|)
  double bound = 0;   // cf * t^{-1/2}
  double tail = 0;    // truncation remainder bound, reported
};

// Approximate-identity rate of t sinc^2(pi t x): the integral against f
// recovers f(0) with error at most C(f) t^{-1/2}. Throws if the computed
// error ever exceeds that bound.
inline SincCheck sinc2_identity_check(const std::function<double(double)>& f,
                                      double t, double half_width = 12.0) {
  if (!(t > 0)) throw domain_error("kinetics: t must be positive");
  if (!(half_width > 0))
    throw domain_error("kinetics: half width must be positive");
  SincCheck r;
  r.target = f(0.0);
  int ns = 8192;
  double fs = 0, fps = 0, hstep = 1e-5;
  for (int i = 0; i <= ns; i++) {
    double x = -half_width + 2.0 * half_width * i / ns;
    fs = std::max(fs, std::abs(f(x)));
    fps = std::max(fps,
                   std::abs((f(x + hstep) - f(x - hstep)) / (2.0 * hstep)));
  }
  r.cf = 2.0 * (fs + fps);
  r.bound = r.cf / std::sqrt(t);
  const GlRule& gl = gauss_legendre(12);
  int panels = int(std::ceil(half_width * t));
  double acc = 0;
  for (int pi = -panels; pi < panels; pi++) {
    double a = std::max(double(pi) / t, -half_width);
    double b = std::min(double(pi + 1) / t, half_width);
    if (b <= a) continue;
    for (size_t g = 0; g < gl.x.size(); g++) {
      double x = a + (b - a) * gl.x[g];
      double sc = sinc(M_PI * t * x);
      acc += (b - a) * gl.w[g] * sc * sc * f(x);
    }
  }
  r.value = t * acc;
  r.err = std::abs(r.value - r.target);
  r.tail = 2.0 * fs / (M_PI * M_PI * t * half_width);
  if (r.err > r.bound)
    throw theory_violation("kinetics: sinc2 identity rate exceeded",
                           "err " + std::to_string(r.err) + " vs bound " +
                               std::to_string(r.bound));
  return r;
}

// Least-squares slope of -log err against log t.
inline double sinc2_decay_exponent(const std::function<double(double)>& f,
                                   const std::vector<double>& ts = {10, 40,
                                                                    160},
                                   double half_width = 12.0) {
  if (ts.size() < 2)
    throw usage_error("kinetics: decay fit needs at least two t values");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double t : ts) {
    SincCheck c = sinc2_identity_check(f, t, half_width);
    double x = std::log(t), y = std::log(std::max(c.err, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = double(ts.size());
  double denom = n * sxx - sx * sx;
  if (denom <= 0) throw numeric_error("kinetics: degenerate decay fit");
  return -(n * sxy - sx * sy) / denom;
}

inline void write_kernel_csv(const KernelGrid& g, std::ostream& os) {
  os << "xi,value\n";
  for (size_t i = 0; i < g.xi.size(); i++)
    os << g.xi[i] << "," << g.values[i] << "\n";
}

inline void write_trajectory_csv(const WkeTrajectory& tr, std::ostream& os) {
  os << "t,xi,value\n";
  for (size_t s = 0; s < tr.spectra.size(); s++)
    for (size_t i = 0; i < tr.spectra[s].grid().size(); i++)
      os << tr.times[s] << "," << tr.spectra[s].grid()[i] << ","
         << tr.spectra[s].values()[i] << "\n";
}

}  // namespace wk
