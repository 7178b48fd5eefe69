#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/quadrature.hpp"

namespace wk {

// One resonance tuple: indexed wavenumber variables k_j on (1/L)Z, each
// boxed within distance 1 of its centre a_j, subject to the signed sum
// hitting k exactly and the signed dispersion sum landing within 1/T of
// beta. Problems join several tuples that share variables.
struct TupleEntry {
  int j = 0;
  int sign = +1;
};

struct CountingTuple {
  std::vector<TupleEntry> entries;  // at most three indices
  double k = 0.0;
  double beta = 0.0;
  std::map<int, double> centers;  // j -> a_j
  int L = 16;
  double T = 4.0;
  double sigma = 2.0;
  double D = 1.0;
};

struct CountingProblem {
  std::vector<CountingTuple> tuples;
};

inline CountingProblem one_tuple(CountingTuple t) {
  CountingProblem p;
  p.tuples.push_back(std::move(t));
  return p;
}

// Size rule for {|k|, |a_1|, ...} against the cutoff D. The two readings
// differ: a problem with k small and every centre large passes the first
// and fails the second.
enum class CenterSizeRule { AtMostTwoLarge, AtLeastTwoSmall };

inline std::vector<TupleEntry> parse_tuple_spec(const std::string& spec) {
  std::vector<TupleEntry> out;
  size_t i = 0;
  auto eat_space = [&] {
    while (i < spec.size() && std::isspace((unsigned char)spec[i])) i++;
  };
  eat_space();
  while (i < spec.size()) {
    size_t start = i;
    while (i < spec.size() && std::isdigit((unsigned char)spec[i])) i++;
    size_t digits = i - start;
    eat_space();
    if (digits == 0 || i == spec.size() ||
        (spec[i] != '+' && spec[i] != '-'))
      throw usage_error("counting: bad tuple spec '" + spec + "'");
    TupleEntry e;
    e.j = std::atoi(spec.substr(start, digits).c_str());
    e.sign = spec[i] == '+' ? +1 : -1;
    out.push_back(e);
    i++;
    eat_space();
    if (i < spec.size()) {
      if (spec[i] != ',')
        throw usage_error("counting: bad tuple spec '" + spec + "'");
      i++;
      eat_space();
    }
  }
  if (out.empty()) throw usage_error("counting: empty tuple spec");
  return out;
}

inline CountingTuple make_tuple(std::vector<TupleEntry> entries,
                                const std::vector<double>& centers, double k,
                                double beta, int L, double T, double sigma,
                                double D) {
  if (entries.size() != centers.size())
    throw usage_error("counting: one centre per tuple index");
  CountingTuple t;
  for (size_t i = 0; i < entries.size(); i++) t.centers[entries[i].j] = centers[i];
  t.entries = std::move(entries);
  t.k = k;
  t.beta = beta;
  t.L = L;
  t.T = T;
  t.sigma = sigma;
  t.D = D;
  return t;
}

inline int n_vector(const CountingProblem& p) {
  std::set<int> js;
  for (const auto& t : p.tuples)
    for (const auto& e : t.entries) js.insert(e.j);
  return int(js.size());
}

inline void validate_problem(
    const CountingProblem& p,
    CenterSizeRule rule = CenterSizeRule::AtMostTwoLarge) {
  if (p.tuples.empty()) throw usage_error("counting: no tuples");
  const CountingTuple& t0 = p.tuples.front();
  std::map<int, double> seen;
  for (const auto& t : p.tuples) {
    if (t.entries.empty() || t.entries.size() > 3)
      throw usage_error("counting: tuples carry one to three indices");
    if (t.L != t0.L || t.T != t0.T || t.sigma != t0.sigma || t.D != t0.D)
      throw usage_error("counting: tuples must share L, T, sigma and D");
    if (t.L <= 0) throw domain_error("counting: L must be positive");
    if (!(t.T > 0.0)) throw domain_error("counting: T must be positive");
    if (!(t.sigma > 0.0 && t.sigma <= 2.0) || t.sigma == 1.0)
      throw domain_error("counting: sigma must lie in (0,2] and differ from 1");
    if (!(t.D > 0.0)) throw domain_error("counting: D must be positive");
    std::set<int> js;
    for (const auto& e : t.entries) {
      if (e.sign != +1 && e.sign != -1)
        throw usage_error("counting: signs must be +1 or -1");
      if (!js.insert(e.j).second)
        throw usage_error("counting: repeated index inside a tuple");
      auto it = t.centers.find(e.j);
      if (it == t.centers.end())
        throw usage_error("counting: missing centre for an index");
      auto ins = seen.emplace(e.j, it->second);
      if (!ins.second && ins.first->second != it->second)
        throw usage_error("counting: shared variable with conflicting centers");
    }
    int large = 0, small = 0;
    auto tally = [&](double v) {
      if (std::abs(v) >= t.D) large++;
      if (std::abs(v) <= t.D) small++;
    };
    tally(t.k);
    for (const auto& e : t.entries) tally(t.centers.at(e.j));
    if (rule == CenterSizeRule::AtMostTwoLarge && large > 2)
      throw domain_error("counting: more than two of k and the centers reach D");
    if (rule == CenterSizeRule::AtLeastTwoSmall && small < 2)
      throw domain_error(
          "counting: fewer than two of k and the centers stay within D");
  }
}

// Exact solution count by depth-first enumeration over the lattice boxes.
// Each tuple's linear constraint eliminates one variable; the remaining
// free boxes form the declared search space, guarded at 1e9 points.
inline int64_t count_solutions(
    const CountingProblem& p,
    CenterSizeRule rule = CenterSizeRule::AtMostTwoLarge) {
  validate_problem(p, rule);
  const int L = p.tuples.front().L;
  const double sigma = p.tuples.front().sigma;

  struct Var {
    int64_t lo = 0, hi = -1;
    std::vector<double> om;  // dispersion values over the box
    int depth = -1;          // >0 when enumerated directly
  };
  std::vector<Var> vars;
  std::map<int, int> slot;
  for (const auto& t : p.tuples)
    for (const auto& e : t.entries) {
      if (slot.count(e.j)) continue;
      slot[e.j] = int(vars.size());
      Var v;
      double a = t.centers.at(e.j);
      v.lo = (int64_t)std::ceil(L * (a - 1.0) - 1e-9);
      v.hi = (int64_t)std::floor(L * (a + 1.0) + 1e-9);
      if (v.lo > v.hi) return 0;
      vars.push_back(std::move(v));
    }

  struct Plan {
    const CountingTuple* t = nullptr;
    int64_t target = 0;  // k as a numerator
    std::vector<std::pair<int, int>> terms;  // (var, sign)
    int elim = -1;
    int elim_sign = +1;
    int ready = 0;
  };
  std::vector<Plan> plans;
  std::vector<int> avail(vars.size(), -1);  // depth at which a value exists
  int free_count = 0;
  for (const auto& t : p.tuples) {
    Plan pl;
    pl.t = &t;
    double num = double(L) * t.k;
    pl.target = (int64_t)std::llround(num);
    if (std::abs(num - double(pl.target)) > 1e-9) return 0;  // k off lattice
    std::vector<int> unknown;
    for (const auto& e : t.entries) {
      int v = slot.at(e.j);
      pl.terms.emplace_back(v, e.sign);
      if (avail[v] < 0) unknown.push_back(int(pl.terms.size()) - 1);
    }
    if (!unknown.empty()) {
      pl.elim = pl.terms[unknown.back()].first;
      pl.elim_sign = pl.terms[unknown.back()].second;
      unknown.pop_back();
      for (int ti : unknown) {
        vars[pl.terms[ti].first].depth = ++free_count;
        avail[pl.terms[ti].first] = free_count;
      }
    }
    for (const auto& [v, s] : pl.terms)
      if (v != pl.elim) pl.ready = std::max(pl.ready, avail[v]);
    if (pl.elim >= 0) avail[pl.elim] = pl.ready;
    plans.push_back(std::move(pl));
  }

  long double space = 1;
  for (const auto& v : vars)
    if (v.depth > 0) space *= (long double)(v.hi - v.lo + 1);
  if (space > 1e9L)
    throw resource_error("counting: search space exceeds the enumeration guard");

  for (auto& v : vars) {
    v.om.resize(size_t(v.hi - v.lo + 1));
    for (int64_t m = v.lo; m <= v.hi; m++)
      v.om[size_t(m - v.lo)] = omega_of(double(m) / L, sigma);
  }
  std::vector<int> order(size_t(free_count), -1);
  for (size_t i = 0; i < vars.size(); i++)
    if (vars[i].depth > 0) order[size_t(vars[i].depth - 1)] = int(i);
  std::vector<std::vector<int>> at_depth(size_t(free_count + 1));
  for (size_t i = 0; i < plans.size(); i++)
    at_depth[size_t(plans[i].ready)].push_back(int(i));

  std::vector<int64_t> value(vars.size(), 0);
  auto settle = [&](int depth) -> bool {
    for (int pi : at_depth[size_t(depth)]) {
      const Plan& pl = plans[size_t(pi)];
      int64_t acc = 0;
      for (const auto& [v, s] : pl.terms)
        if (v != pl.elim) acc += s * value[size_t(v)];
      if (pl.elim >= 0) {
        int64_t m = pl.elim_sign * (pl.target - acc);
        const Var& ev = vars[size_t(pl.elim)];
        if (m < ev.lo || m > ev.hi) return false;
        value[size_t(pl.elim)] = m;
      } else if (acc != pl.target) {
        return false;
      }
      double s = 0.0;
      for (const auto& [v, sg] : pl.terms)
        s += sg * vars[size_t(v)].om[size_t(value[size_t(v)] - vars[size_t(v)].lo)];
      if (!(std::abs(s - pl.t->beta) <= 1.0 / pl.t->T)) return false;
    }
    return true;
  };

  int64_t total = 0;
  std::function<void(int)> dfs = [&](int depth) {
    if (depth == free_count) {
      total++;
      return;
    }
    const Var& v = vars[size_t(order[size_t(depth)])];
    for (int64_t m = v.lo; m <= v.hi; m++) {
      value[size_t(order[size_t(depth)])] = m;
      if (settle(depth + 1)) dfs(depth + 1);
    }
  };
  if (settle(0)) dfs(0);
  return total;
}

// ---- bound verification sweep

struct SweepRecord {
  std::string family;
  std::string problem_id;  // stable across L so growth can be tracked
  int L = 0;
  double T = 0, sigma = 0, D = 0, k = 0, beta = 0;
  int64_t count = 0;
  double bound = 0, ratio = 0;
};

struct BoundFit {
  double max_ratio = 0;
  double max_growth = 0;  // per L-doubling, ratios of ratios
  std::map<int, double> max_ratio_by_L;
};

struct SweepReport {
  std::vector<SweepRecord> records;
  std::map<std::string, BoundFit> fits;
  std::vector<std::string> flagged;  // families with super-constant growth
  int skipped = 0;                   // grid points outside the regime guards
};

struct SweepGrid {
  std::vector<int> Ls = {8, 16, 32, 64};
  std::vector<double> Ts = {2, 4, 8, 16};
  std::vector<double> sigmas = {0.5, 1.5, 2.0};
  std::vector<double> Ds = {1, 2, 4};
  double growth_tolerance = 1.5;
  bool include_critical = true;
};

// T must stay well below L, and below L^{1/(2-sigma)} for sigma < 1;
// sigma = 2 has no such restriction.
inline bool counting_regime_ok(int L, double T, double sigma) {
  if (sigma == 2.0) return true;
  if (T > 0.5 * L) return false;
  if (sigma < 1.0 &&
      T > 0.5 * std::pow(double(L), 1.0 / (2.0 - sigma)) * (1.0 - 1e-9))
    return false;
  return true;
}

inline SweepReport verify_vc_bounds(const SweepGrid& grid = SweepGrid{}) {
  SweepReport rep;
  auto add = [&](const std::string& family, const std::string& variant,
                 CountingTuple t, double bound, CenterSizeRule rule) {
    SweepRecord r;
    r.family = family;
    std::ostringstream id;
    id << family << '/' << variant << "/T" << t.T << "/s" << t.sigma << "/D"
       << t.D;
    r.problem_id = id.str();
    r.L = t.L;
    r.T = t.T;
    r.sigma = t.sigma;
    r.D = t.D;
    r.k = t.k;
    r.beta = t.beta;
    r.count = count_solutions(one_tuple(std::move(t)), rule);
    r.bound = bound;
    r.ratio = bound > 0 ? double(r.count) / bound : 0.0;
    rep.records.push_back(std::move(r));
  };

  for (double sigma : grid.sigmas) {
    if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
      throw domain_error("counting: sigma must lie in (0,2] and differ from 1");
    for (int L : grid.Ls)
      for (double T : grid.Ts) {
        if (!counting_regime_ok(L, T, sigma)) {
          rep.skipped++;
          continue;
        }
        for (double D : grid.Ds) {
          add("two-vector", "1+2-",
              make_tuple(parse_tuple_spec("1+,2-"), {0, 0}, 0, 0, L, T, sigma,
                         D),
              double(L), CenterSizeRule::AtMostTwoLarge);
          add("two-vector", "1+2+",
              make_tuple(parse_tuple_spec("1+,2+"), {0, 0}, 0, 0, L, T, sigma,
                         D),
              double(L), CenterSizeRule::AtMostTwoLarge);
          for (double a2 : {0.0, D}) {
            double beta = omega_of(a2, sigma);
            std::ostringstream v;
            v << "1+2+/a" << a2;
            add("uni-directional", v.str(),
                make_tuple(parse_tuple_spec("1+,2+"), {0, a2}, a2, beta, L, T,
                           sigma, D),
                double(L) / std::sqrt(T) * D, CenterSizeRule::AtLeastTwoSmall);
          }
          for (double k : {0.5, 1.0}) {
            double h = std::min(1.0, std::abs(k));
            if (!(h >= 1.0 / T)) continue;
            std::ostringstream v;
            v << "1+2-/k" << k;
            add("large-gap", v.str(),
                make_tuple(parse_tuple_spec("1+,2-"), {0, -k}, k,
                           -omega_of(k, sigma), L, T, sigma, D),
                double(L) / (T * h) * std::pow(D, 2.0 - sigma),
                CenterSizeRule::AtLeastTwoSmall);
          }
          add("three-vector", "1+2-3+",
              make_tuple(parse_tuple_spec("1+,2-,3+"), {0, 0, 0}, 0, 0, L, T,
                         sigma, D),
              double(L) * L / T * std::log(double(L)) *
                  std::pow(D, 2.0 - sigma),
              CenterSizeRule::AtMostTwoLarge);
        }
      }
  }
  if (grid.include_critical) {
    // sigma = 2 at T = sqrt(L), judged against the plain L^2/T envelope
    for (auto [L, T] : std::vector<std::pair<int, double>>{
             {16, 4}, {64, 8}, {256, 16}})
      add("three-vector-critical", "1+2-3+",
          make_tuple(parse_tuple_spec("1+,2-,3+"), {0, 0, 0}, 0, 0, L, T, 2.0,
                     1.0),
          double(L) * L / T, CenterSizeRule::AtMostTwoLarge);
  }

  std::map<std::string, std::vector<const SweepRecord*>> groups;
  for (const auto& r : rep.records) {
    BoundFit& f = rep.fits[r.family];
    f.max_ratio = std::max(f.max_ratio, r.ratio);
    double& by_l = f.max_ratio_by_L[r.L];
    by_l = std::max(by_l, r.ratio);
    groups[r.problem_id].push_back(&r);
  }
  std::set<std::string> bad;
  for (auto& [id, rs] : groups) {
    std::sort(rs.begin(), rs.end(),
              [](const SweepRecord* a, const SweepRecord* b) {
                return a->L < b->L;
              });
    for (size_t i = 1; i < rs.size(); i++) {
      const SweepRecord *a = rs[i - 1], *b = rs[i];
      if (a->count < 3 || a->ratio <= 0) continue;
      double steps = std::log2(double(b->L) / a->L);
      if (steps <= 0) continue;
      double growth = std::pow(b->ratio / a->ratio, 1.0 / steps);
      BoundFit& f = rep.fits[b->family];
      f.max_growth = std::max(f.max_growth, growth);
      if (growth > grid.growth_tolerance) bad.insert(b->family);
    }
  }
  rep.flagged.assign(bad.begin(), bad.end());
  return rep;
}

inline void write_sweep_csv(const SweepReport& rep, std::ostream& os) {
  os << "problemId,L,T,sigma,D,k,beta,count,bound,ratio\n";
  for (const auto& r : rep.records)
    os << r.problem_id << ',' << r.L << ',' << r.T << ',' << r.sigma << ','
       << r.D << ',' << r.k << ',' << r.beta << ',' << r.count << ','
       << r.bound << ',' << r.ratio << '\n';
}

// ---- five-vector lower bound at sigma = 2

// Joint problem {(1+,2-,3+), (1+,4-,5+)} with every centre and both k's
// at zero, beta = 0. Eliminating k2 and k4 leaves integers X = m1,
// Y = m3, Z = m5, and the dispersion sums collapse to -2XY/L^2 and
// -2XZ/L^2, so the count factors through one axis profile.
inline CountingProblem five_vector_problem(int L, double T) {
  CountingProblem p;
  p.tuples.push_back(make_tuple(parse_tuple_spec("1+,2-,3+"), {0, 0, 0}, 0, 0,
                                L, T, 2.0, 1.0));
  p.tuples.push_back(make_tuple(parse_tuple_spec("1+,4-,5+"), {0, 0, 0}, 0, 0,
                                L, T, 2.0, 1.0));
  return p;
}

inline int64_t five_vector_count(int L, double T) {
  double lim = double(L) * L;
  int64_t total = 0;
  for (int64_t x = -L; x <= L; x++) {
    int64_t n = 0;
    for (int64_t y = -L; y <= L; y++)
      if (std::llabs(x + y) <= L && 2.0 * T * double(std::llabs(x * y)) <= lim)
        n++;
    total += n * n;
  }
  return total;
}

inline int64_t five_vector_box(int L, double T) {
  int64_t xmax = (int64_t)std::floor(L / (2.0 * T) + 1e-9);
  int64_t ymax = (int64_t)((L - 1) / 2);  // 0 < Y < L/2
  return xmax * ymax * ymax;
}

struct FiveVectorReport {
  int L = 0;
  double T = 0;
  int64_t box = 0;
  int64_t count = 0;
  bool enumerated = false;  // generic oracle ran within the guard
};

inline FiveVectorReport five_vector_lower_bound(int L, double T) {
  if (!(T >= 1.0 && T < L))
    throw domain_error("five-vector: need 1 <= T < L");
  FiveVectorReport rep;
  rep.L = L;
  rep.T = T;
  rep.box = five_vector_box(L, T);
  long double space = std::pow((long double)(2 * L + 1), 3);
  if (space <= 1e9L) {
    rep.count = count_solutions(five_vector_problem(L, T));
    rep.enumerated = true;
  } else {
    rep.count = five_vector_count(L, T);
  }
  if (rep.count < rep.box)
    throw theory_violation("five-vector: count fell below the box construction");
  return rep;
}

struct ExponentFit {
  double l_exp = 0, t_exp = 0, log_c = 0;
};

// Least squares of log count against (1, log L, log T).
inline ExponentFit fit_five_vector_exponents(
    const std::vector<std::pair<int, double>>& points) {
  if (points.size() < 3)
    throw usage_error("five-vector: need at least three points to fit");
  double a[3][3] = {};
  double b[3] = {};
  for (auto [L, T] : points) {
    FiveVectorReport r = five_vector_lower_bound(L, T);
    double row[3] = {1.0, std::log(double(L)), std::log(T)};
    double y = std::log(double(r.count));
    for (int i = 0; i < 3; i++) {
      b[i] += row[i] * y;
      for (int j = 0; j < 3; j++) a[i][j] += row[i] * row[j];
    }
  }
  for (int c = 0; c < 3; c++) {  // Gaussian elimination, partial pivot
    int piv = c;
    for (int r = c + 1; r < 3; r++)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    if (std::abs(a[c][c]) < 1e-12)
      throw numeric_error("five-vector: exponent fit is degenerate");
    for (int r = 0; r < 3; r++) {
      if (r == c) continue;
      double f = a[r][c] / a[c][c];
      for (int j = 0; j < 3; j++) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  ExponentFit fit;
  fit.log_c = b[0] / a[0][0];
  fit.l_exp = b[1] / a[1][1];
  fit.t_exp = b[2] / a[2][2];
  return fit;
}

// ---- lattice sum against its limiting integral

struct IterateConfig {
  double delta = 0.1;    // exponent in the image cutoff R
  double support = 4.0;  // half width of the weight's numerical support
  double f_scale = 1.0;  // multiples of R admitted into the image sum
  double tol = 1e-6;     // allowed disagreement between refinements
  int min_axis = 192;
  int max_axis = 16000;
};

struct IterateReport {
  double lhs = 0, rhs = 0, discrepancy = 0;
  double bound = 0;  // L^{2-delta} / T
  double ratio = 0;  // discrepancy normalised by L^2 / T
  double R = 0;
  int f_cut = 0;
  int axis_points = 0;
};

inline double fejer_bump(double x) {
  double s = sinc(M_PI * x);
  return s * s;
}

inline IterateReport iterate_sum_vs_integral(
    double k, int L, double T, double sigma,
    const std::function<double(double, double)>& W,
    const std::function<double(double)>& psi,
    const IterateConfig& cfg = IterateConfig{}) {
  if (L <= 0) throw domain_error("iterate: L must be positive");
  if (!(T > 0.0)) throw domain_error("iterate: T must be positive");
  if (!(sigma > 0.0 && sigma <= 2.0) || sigma == 1.0)
    throw domain_error("iterate: sigma must lie in (0,2] and differ from 1");
  if (std::abs(L * k - std::llround(L * k)) > 1e-9)
    throw usage_error("iterate: k must lie on the lattice");

  const double om_k = omega_of(k, sigma);
  auto Om = [&](double u1, double u3) {
    return omega_of(u1, sigma) - omega_of(k - u1 - u3, sigma) +
           omega_of(u3, sigma) - om_k;
  };

  IterateReport rep;
  rep.R = std::max(T, std::pow(T, 2.0 - sigma)) *
          std::pow(double(L), -1.0 + 3.0 * cfg.delta);
  rep.f_cut = (int)std::floor(cfg.f_scale * rep.R + 1e-12);
  rep.bound = std::pow(double(L), 2.0 - cfg.delta) / T;

  const double S = cfg.support;
  int64_t nmax = (int64_t)std::floor(S * L + 1e-9);
  double lhs = 0;
  for (int64_t n1 = -nmax; n1 <= nmax; n1++) {
    double u1 = double(n1) / L;
    for (int64_t n3 = -nmax; n3 <= nmax; n3++) {
      double u3 = double(n3) / L;
      double w = W(u1, u3);
      if (w != 0.0) lhs += w * psi(T * Om(u1, u3));
    }
  }
  if (!std::isfinite(lhs))
    throw numeric_error("iterate: non-finite value in the lattice sum");
  rep.lhs = lhs;

  // Oscillation budget: steepest dispersion slope over the box, sampled
  // off the axes, plus the image phases. Eight points per cycle on the
  // coarse pass, twelve on the fine one.
  double slope = 0;
  for (int i = 0; i < 33; i++)
    for (int j = 0; j < 33; j++) {
      double u1 = -S + (i + 0.37) * 2.0 * S / 33.0;
      double u3 = -S + (j + 0.61) * 2.0 * S / 33.0;
      double g1 = sigma * (std::pow(std::abs(u1), sigma - 1.0) +
                           std::pow(std::abs(k - u1 - u3), sigma - 1.0));
      double g3 = sigma * (std::pow(std::abs(u3), sigma - 1.0) +
                           std::pow(std::abs(k - u1 - u3), sigma - 1.0));
      slope = std::max(slope, std::max(std::abs(g1), std::abs(g3)));
    }
  double per_unit = std::max(double(cfg.min_axis) / (2.0 * S),
                             8.0 * (T * slope + double(L) * rep.f_cut));
  auto integral_at = [&](int axis) -> double {
    const GlRule& rule = gauss_legendre(12);
    int panels = (axis + 11) / 12;
    double h = 2.0 * S / panels;
    std::vector<double> nodes, wts;
    for (int p = 0; p < panels; p++)
      for (int q = 0; q < 12; q++) {
        nodes.push_back(-S + (p + rule.x[q]) * h);
        wts.push_back(rule.w[q] * h);
      }
    double acc = 0;
    for (size_t i = 0; i < nodes.size(); i++) {
      double u1 = nodes[i];
      double row = 0;
      for (size_t j = 0; j < nodes.size(); j++) {
        double u3 = nodes[j];
        double w = W(u1, u3);
        if (w == 0.0) continue;
        double base = w * psi(T * Om(u1, u3));
        double cell = 1.0;
        if (rep.f_cut > 0) {
          cell = 0;
          for (int f1 = -rep.f_cut; f1 <= rep.f_cut; f1++)
            for (int f3 = -rep.f_cut; f3 <= rep.f_cut; f3++)
              cell += std::cos(2.0 * M_PI * L * (u1 * f1 + u3 * f3));
        }
        row += wts[j] * base * cell;
      }
      acc += wts[i] * row;
    }
    return acc;
  };
  int axis = std::min(cfg.max_axis,
                      std::max(cfg.min_axis, (int)std::ceil(per_unit * 2 * S)));
  double coarse = integral_at(axis);
  double fine = integral_at(3 * axis / 2);
  if (!std::isfinite(coarse) || !std::isfinite(fine))
    throw numeric_error("iterate: non-finite value in the integral");
  if (std::abs(fine - coarse) > cfg.tol * std::max(1.0, std::abs(fine)))
    throw numeric_error("iterate: quadrature failed to converge");
  rep.axis_points = 3 * axis / 2;
  rep.rhs = double(L) * L * fine;
  rep.discrepancy = std::abs(rep.lhs - rep.rhs);
  rep.ratio = rep.discrepancy * T / (double(L) * L);
  return rep;
}

}  // namespace wk
