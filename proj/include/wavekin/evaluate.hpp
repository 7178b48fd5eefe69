#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/couples.hpp"
#include "wavekin/decorations.hpp"
#include "wavekin/params.hpp"
#include "wavekin/quadrature.hpp"
#include "wavekin/spectrum.hpp"
#include "wavekin/trees.hpp"

namespace wk {

// ---------------------------------------------------------------------------
// Nested time integrals over {0 < t_child < t_parent < tau}
// ---------------------------------------------------------------------------
//
// Integrands are products of per-node oscillations e^{i theta_n t_n}.  The
// primitive of such a product stays inside the family
//     sum_j c_j t^{p_j} e^{i phi_j t},
// so the nested integral is carried symbolically level by level and evaluated
// once at the endpoint.  Quadrature variants (Gauss-Legendre, Monte-Carlo)
// exist for cross-checking.

struct ExpoSum {
  struct Term {
    cplx c;
    int p = 0;
    double phi = 0.0;
  };
  std::vector<Term> terms;
};

namespace detail {

inline void es_compress(ExpoSum& s) {
  std::sort(s.terms.begin(), s.terms.end(),
            [](const ExpoSum::Term& a, const ExpoSum::Term& b) {
              if (a.phi != b.phi) return a.phi < b.phi;
              return a.p < b.p;
            });
  std::vector<ExpoSum::Term> out;
  for (auto& t : s.terms) {
    if (!out.empty() && out.back().phi == t.phi && out.back().p == t.p)
      out.back().c += t.c;
    else
      out.push_back(t);
  }
  std::erase_if(out, [](const ExpoSum::Term& t) { return std::abs(t.c) == 0.0; });
  s.terms = std::move(out);
}

inline ExpoSum es_one() { return {{{cplx(1.0, 0.0), 0, 0.0}}}; }

inline ExpoSum es_mul(const ExpoSum& a, const ExpoSum& b) {
  ExpoSum r;
  r.terms.reserve(a.terms.size() * b.terms.size());
  for (auto& x : a.terms)
    for (auto& y : b.terms)
      r.terms.push_back({x.c * y.c, x.p + y.p, x.phi + y.phi});
  es_compress(r);
  return r;
}

// appends the primitive of c t^p e^{i psi t} (vanishing at 0) to out
inline void es_int_term(cplx c, int p, double psi, double umax, ExpoSum& out) {
  if (std::abs(psi) * umax < 0.25) {
    // small phase: Taylor the exponential into the polynomial part; the
    // truncation error at 14 terms is below machine precision
    cplx f(1.0, 0.0);
    for (int j = 0; j <= 14; j++) {
      out.terms.push_back({c * f / double(p + j + 1), p + j + 1, 0.0});
      f *= cplx(0.0, psi) / double(j + 1);
    }
    return;
  }
  // integration by parts: coefficients of u^j e^{i psi u} plus a constant
  cplx inv = 1.0 / cplx(0.0, psi);
  std::vector<cplx> coef(p + 1, cplx(0.0));
  coef[0] = inv;
  cplx c0 = -inv;
  for (int q = 1; q <= p; q++) {
    std::vector<cplx> nc(p + 1, cplx(0.0));
    nc[q] = inv;
    for (int j = 0; j <= p; j++) nc[j] -= double(q) * inv * coef[j];
    c0 *= -double(q) * inv;
    coef = std::move(nc);
  }
  for (int j = 0; j <= p; j++)
    if (coef[j] != cplx(0.0)) out.terms.push_back({c * coef[j], j, psi});
  out.terms.push_back({c * c0, 0, 0.0});
}

inline ExpoSum es_integrate(const ExpoSum& s, double theta, double umax) {
  ExpoSum r;
  for (auto& t : s.terms) es_int_term(t.c, t.p, t.phi + theta, umax, r);
  es_compress(r);
  return r;
}

inline cplx es_eval(const ExpoSum& s, double u) {
  cplx acc(0.0, 0.0);
  for (auto& t : s.terms)
    acc += t.c * std::pow(u, t.p) * std::exp(cplx(0.0, t.phi * u));
  return acc;
}

inline ExpoSum tree_primitive(const Tree& t, const std::vector<double>& phase,
                              int node, double umax) {
  ExpoSum prod = es_one();
  for (int c : t.nodes[node].child)
    if (c >= 0 && !t.is_leaf(c))
      prod = es_mul(prod, tree_primitive(t, phase, c, umax));
  return es_integrate(prod, phase[node], umax);
}

// Omega and the epsilon factor at one branching node, from node values
inline std::pair<double, int> node_factors(const Tree& t,
                                           const std::vector<int64_t>& v,
                                           int node, int L, double sigma) {
  const auto& ch = t.nodes[node].child;
  double w1 = omega_of(double(v[ch[0]]) / L, sigma);
  double w2 = omega_of(double(v[ch[1]]) / L, sigma);
  double w3 = omega_of(double(v[ch[2]]) / L, sigma);
  double wn = omega_of(double(v[node]) / L, sigma);
  return {w1 - w2 + w3 - wn, epsilon_filter(v[ch[0]], v[ch[1]], v[ch[2]])};
}

}  // namespace detail

// exact value of the nested oscillatory integral for one tree
inline cplx tree_time_integral(const Tree& t, const std::vector<double>& phase,
                               double tau) {
  if (t.order == 0) return cplx(1.0, 0.0);
  return detail::es_eval(detail::tree_primitive(t, phase, 0, tau), tau);
}

namespace detail {
inline cplx tree_integral_gl_rec(const Tree& t, const std::vector<double>& phase,
                                 int node, double u, const GlRule& gl) {
  cplx acc(0.0, 0.0);
  for (size_t j = 0; j < gl.x.size(); j++) {
    double tj = u * gl.x[j];
    cplx v = std::exp(cplx(0.0, phase[node] * tj));
    for (int c : t.nodes[node].child)
      if (c >= 0 && !t.is_leaf(c)) v *= tree_integral_gl_rec(t, phase, c, tj, gl);
    acc += gl.w[j] * v;
  }
  return u * acc;
}
}  // namespace detail

// iterated Gauss-Legendre variant (one panel per level)
inline cplx tree_time_integral_gl(const Tree& t, const std::vector<double>& phase,
                                  double tau, int order = 16) {
  if (t.order == 0) return cplx(1.0, 0.0);
  return detail::tree_integral_gl_rec(t, phase, 0, tau, gauss_legendre(order));
}

// Monte-Carlo variant: uniform box sampling with the order indicator
inline cplx tree_time_integral_mc(const Tree& t, const std::vector<double>& phase,
                                  double tau, int64_t points, RngStream& rng) {
  if (t.order == 0) return cplx(1.0, 0.0);
  std::vector<int> br;
  for (int i = 0; i < int(t.nodes.size()); i++)
    if (!t.is_leaf(i)) br.push_back(i);
  std::vector<double> tv(t.nodes.size(), 0.0);
  cplx acc(0.0, 0.0);
  for (int64_t it = 0; it < points; it++) {
    for (int b : br) tv[b] = tau * rng.uniform01();
    bool ok = true;
    for (int b : br) {
      int par = t.nodes[b].parent;
      if (par >= 0 && !(tv[b] < tv[par])) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    double ph = 0.0;
    for (int b : br) ph += phase[b] * tv[b];
    acc += std::exp(cplx(0.0, ph));
  }
  return std::pow(tau, double(br.size())) * acc / double(points);
}

// product of (i zeta_n) over the branching nodes
inline cplx zeta_factor(const Tree& t) {
  cplx z(1.0, 0.0);
  for (size_t i = 0; i < t.nodes.size(); i++)
    if (!t.is_leaf(int(i))) z *= cplx(0.0, double(t.nodes[i].sign));
  return z;
}

inline cplx zeta_factor(const Couple& q) {
  return zeta_factor(q.plus) * zeta_factor(q.minus);
}

// ---------------------------------------------------------------------------
// Pair correlation kernel of a couple
// ---------------------------------------------------------------------------

enum class TimeMethod { Exact, GL, MC };

struct KQOptions {
  double cutoff = -1.0;  // leaf value bound; <0 means the spectrum's support
  TimeMethod method = TimeMethod::Exact;
  int gl_order = 16;
  int gl_check_order = 10;
  double rich_tol = 1e-7;
  int64_t mc_points = 100000;
  uint64_t mc_seed = 777;
};

struct KQResult {
  cplx value{0.0, 0.0};
  int64_t decorations = 0;  // decorations visited
  int64_t zero_eps = 0;     // dropped by the epsilon factor
  double residual = 0.0;    // largest quadrature disagreement seen
  int64_t fallbacks = 0;    // integrals re-done by Monte-Carlo
};

inline KQResult evaluate_KQ(const Couple& q, int64_t k_num, double t, double s,
                            const PhysicalParams& p, const Spectrum& nin,
                            const KQOptions& opt = {}) {
  p.validate();
  if (q.order() > 3) throw resource_error("evaluate_KQ: couple order > 3");
  KQResult res;
  DecorationDomain dom;
  dom.value_bound = opt.cutoff >= 0 ? opt.cutoff : nin.support_radius();
  RngStream mcrng(opt.mc_seed, 91);
  const std::array<const Tree*, 2> tr{&q.plus, &q.minus};
  const std::array<double, 2> lim{t, s};
  for_each_couple_decoration(q, k_num, p.L, dom, [&](const Decoration& dec) {
    res.decorations++;
    int eps = 1;
    std::array<std::vector<double>, 2> phase;
    for (int ti = 0; ti < 2 && eps != 0; ti++) {
      phase[ti].assign(tr[ti]->nodes.size(), 0.0);
      for (size_t i = 0; i < tr[ti]->nodes.size() && eps != 0; i++) {
        if (tr[ti]->is_leaf(int(i))) continue;
        auto [om, e] =
            detail::node_factors(*tr[ti], dec.val[ti], int(i), p.L, p.sigma);
        eps *= e;
        phase[ti][i] = tr[ti]->nodes[i].sign * 2.0 * M_PI * p.T * om;
      }
    }
    if (eps == 0) {
      res.zero_eps++;
      return;
    }
    double wprod = 1.0;
    for (int ti = 0; ti < 2; ti++)
      for (int l : tr[ti]->leaves())
        if (tr[ti]->nodes[l].sign > 0)
          wprod *= nin(double(dec.val[ti][l]) / p.L);
    if (wprod == 0.0) return;
    cplx I[2];
    for (int ti = 0; ti < 2; ti++) {
      switch (opt.method) {
        case TimeMethod::Exact:
          I[ti] = tree_time_integral(*tr[ti], phase[ti], lim[ti]);
          break;
        case TimeMethod::GL: {
          cplx a = tree_time_integral_gl(*tr[ti], phase[ti], lim[ti], opt.gl_order);
          cplx b = tree_time_integral_gl(*tr[ti], phase[ti], lim[ti],
                                         opt.gl_check_order);
          double r = std::abs(a - b);
          res.residual = std::max(res.residual, r);
          if (r > opt.rich_tol * std::max(1.0, std::abs(a))) {
            res.fallbacks++;
            a = tree_time_integral_mc(*tr[ti], phase[ti], lim[ti], opt.mc_points,
                                      mcrng);
          }
          I[ti] = a;
          break;
        }
        case TimeMethod::MC:
          I[ti] = tree_time_integral_mc(*tr[ti], phase[ti], lim[ti], opt.mc_points,
                                        mcrng);
          break;
      }
    }
    res.value += double(eps) * wprod * I[0] * I[1];
  });
  res.value *= std::pow(p.alpha * p.T / p.L, q.order()) * zeta_factor(q);
  return res;
}

// ---------------------------------------------------------------------------
// Tree iterates on sampled Gaussian data
// ---------------------------------------------------------------------------
//
// A plan freezes the decoration sum of one tree at a fixed time: each term
// keeps its coefficient and the leaf slots into a pool of Gaussians indexed
// by numerator.  Minus-sign leaves read the conjugate, so the iterate of a
// minus-rooted tree is exactly the conjugate object and pair correlations
// are formed without an outer conjugation.

struct JPlan {
  cplx prefac{1.0, 0.0};
  int order = 0;
  int64_t bound_num = 0;  // pool covers numerators [-bound_num, bound_num]
  struct Term {
    cplx c;
    std::array<int32_t, 7> idx{};
    std::array<uint8_t, 7> cj{};
    int nl = 0;
  };
  std::vector<Term> terms;
};

inline JPlan build_j_plan(const Tree& t, int64_t k_num, double time,
                          const PhysicalParams& p, const Spectrum& nin,
                          double cutoff) {
  p.validate();
  if (t.order > 3) throw resource_error("build_j_plan: tree order > 3");
  if (p.L > 16 && 2 * t.order > 5)
    throw resource_error("build_j_plan: too many free leaves for this L");
  JPlan plan;
  plan.order = t.order;
  plan.bound_num = int64_t(cutoff * p.L + 1e-9);
  plan.prefac = std::pow(p.alpha * p.T / p.L, t.order) * zeta_factor(t);
  std::vector<int> leaves = t.leaves();
  for_each_tree_decoration(
      t, k_num, p.L, plan.bound_num, [&](const std::vector<int64_t>& v) {
        int eps = 1;
        std::vector<double> phase(t.nodes.size(), 0.0);
        for (size_t i = 0; i < t.nodes.size() && eps != 0; i++) {
          if (t.is_leaf(int(i))) continue;
          auto [om, e] = detail::node_factors(t, v, int(i), p.L, p.sigma);
          eps *= e;
          phase[i] = t.nodes[i].sign * 2.0 * M_PI * p.T * om;
        }
        if (eps == 0) return;
        double w = 1.0;
        for (int l : leaves) w *= std::sqrt(std::max(0.0, nin(double(v[l]) / p.L)));
        if (w == 0.0) return;
        JPlan::Term term;
        term.c = double(eps) * w * tree_time_integral(t, phase, time);
        term.nl = int(leaves.size());
        for (int j = 0; j < term.nl; j++) {
          term.idx[j] = int32_t(v[leaves[j]] + plan.bound_num);
          term.cj[j] = t.nodes[leaves[j]].sign < 0 ? 1 : 0;
        }
        plan.terms.push_back(term);
      });
  return plan;
}

inline void draw_g_pool(int64_t bound_num, RngStream& rng, std::vector<cplx>& g) {
  g.resize(size_t(2 * bound_num + 1));
  for (auto& x : g) x = rng.cgaussian();
}

inline cplx eval_j_plan(const JPlan& plan, const std::vector<cplx>& g) {
  cplx acc(0.0, 0.0);
  for (const auto& t : plan.terms) {
    cplx prod = t.c;
    for (int j = 0; j < t.nl; j++) {
      const cplx& x = g[size_t(t.idx[j])];
      prod *= t.cj[j] ? std::conj(x) : x;
    }
    acc += prod;
  }
  return plan.prefac * acc;
}

inline cplx sample_J_iterate(const Tree& t, int64_t k_num, double time,
                             const PhysicalParams& p, const Spectrum& nin,
                             double cutoff, RngStream& rng) {
  JPlan plan = build_j_plan(t, k_num, time, p, nin, cutoff);
  std::vector<cplx> g;
  draw_g_pool(plan.bound_num, rng, g);
  return eval_j_plan(plan, g);
}

// ---------------------------------------------------------------------------
// Pairing identity check: couple kernels vs the sampled pair correlation
// ---------------------------------------------------------------------------

struct IsserlisResult {
  cplx analytic{0.0, 0.0};
  cplx mc{0.0, 0.0};
  double se_re = 0.0, se_im = 0.0;
  double z_re = 0.0, z_im = 0.0, zmax = 0.0;
  int64_t couples = 0;
  int64_t samples = 0;
};

inline IsserlisResult isserlis_check(int n1, int n2, int64_t k_num, double t,
                                     double s, const PhysicalParams& p,
                                     const Spectrum& nin, double cutoff,
                                     int64_t samples, uint64_t seed) {
  if (n1 < 0 || n2 < 0 || n1 + n2 > 2)
    throw resource_error("isserlis_check: n1 + n2 must be <= 2");
  IsserlisResult r;
  KQOptions kq;
  kq.cutoff = cutoff;
  for_each_couple(n1 + n2, [&](const Couple& c) {
    if (c.plus.order != n1 || c.minus.order != n2) return;
    r.analytic += evaluate_KQ(c, k_num, t, s, p, nin, kq).value;
    r.couples++;
  });
  std::vector<JPlan> plus, minus;
  for (const auto& tr : enumerate_trees(n1, +1))
    plus.push_back(build_j_plan(tr, k_num, t, p, nin, cutoff));
  for (const auto& tr : enumerate_trees(n2, -1))
    minus.push_back(build_j_plan(tr, k_num, s, p, nin, cutoff));
  int64_t bound = plus.empty() ? int64_t(cutoff * p.L + 1e-9) : plus[0].bound_num;
  RngStream rng(seed, 7);
  std::vector<cplx> g;
  double sr = 0, si = 0, srr = 0, sii = 0;
  for (int64_t it = 0; it < samples; it++) {
    draw_g_pool(bound, rng, g);
    cplx A(0.0, 0.0), B(0.0, 0.0);
    for (const auto& pl : plus) A += eval_j_plan(pl, g);
    for (const auto& pl : minus) B += eval_j_plan(pl, g);
    cplx w = A * B;
    sr += w.real();
    si += w.imag();
    srr += w.real() * w.real();
    sii += w.imag() * w.imag();
  }
  double S = double(samples);
  double mr = sr / S, mi = si / S;
  r.mc = {mr, mi};
  r.samples = samples;
  double vr = std::max(0.0, srr / S - mr * mr);
  double vi = std::max(0.0, sii / S - mi * mi);
  r.se_re = std::sqrt(vr / S);
  r.se_im = std::sqrt(vi / S);
  // a component with no sample variance (e.g. pathwise-real products) is
  // compared at fixed precision instead of SE zero
  double floor = 1e-12 * (1.0 + std::abs(r.analytic));
  r.z_re = (mr - r.analytic.real()) / std::max(r.se_re, floor);
  r.z_im = (mi - r.analytic.imag()) / std::max(r.se_im, floor);
  r.zmax = std::max(std::abs(r.z_re), std::abs(r.z_im));
  return r;
}

}  // namespace wk
