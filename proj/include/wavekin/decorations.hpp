#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "wavekin/couples.hpp"
#include "wavekin/params.hpp"

namespace wk {

// Wavenumber assignment on one couple: integer numerators over L for
// every node of both trees. All conservation checks are exact.
struct Decoration {
  std::array<std::vector<int64_t>, 2> val;  // [tree][node] -> numerator
  int L = 1;

  int64_t at(LeafRef l) const { return val[l.tree][l.node]; }
  int64_t root_num() const { return val[0][0]; }
};

// Omega = w(k1) - w(k2) + w(k3) - w(k) at one branching node, and the
// interaction filter: +1 unless the conjugate slot repeats a neighbor
// (then 0), except the all-equal case which carries -1.
inline std::pair<double, int> local_factors(const Decoration& dec,
                                            const Tree& tree, int8_t tree_idx,
                                            int node, double sigma) {
  if (tree.is_leaf(node))
    throw usage_error("local_factors: node must be branching");
  const auto& v = dec.val[tree_idx];
  int64_t k1 = v[tree.nodes[node].child[0]];
  int64_t k2 = v[tree.nodes[node].child[1]];
  int64_t k3 = v[tree.nodes[node].child[2]];
  int64_t k = v[node];
  double L = double(dec.L);
  double om = omega_of(k1 / L, sigma) - omega_of(k2 / L, sigma) +
              omega_of(k3 / L, sigma) - omega_of(k / L, sigma);
  int eps;
  if (k2 != k1 && k2 != k3) eps = +1;
  else if (k1 == k2 && k2 == k3) eps = -1;
  else eps = 0;
  return {om, eps};
}

inline int epsilon_filter(int64_t k1, int64_t k2, int64_t k3) {
  if (k2 != k1 && k2 != k3) return +1;
  if (k1 == k2 && k2 == k3) return -1;
  return 0;
}

struct DecorationDomain {
  // optional per-leaf box centers (numerators); radius is 1, i.e. the
  // numerator may deviate from the center by at most L
  std::vector<std::pair<LeafRef, int64_t>> box_centers;
  // global |k_l| <= value_bound fallback where no box applies (<0: none)
  double value_bound = -1.0;
};

namespace detail {

struct PairVar {
  std::array<LeafRef, 2> leaf;
  int64_t lo = 0, hi = -1;  // numerator range
  int coeff = 0;            // coefficient in the plus-root equation
};

inline void fill_internal(const Tree& t, std::vector<int64_t>& v, int node) {
  if (t.is_leaf(node)) return;
  for (int c : t.nodes[node].child) fill_internal(t, v, c);
  v[node] = v[t.nodes[node].child[0]] - v[t.nodes[node].child[1]] +
            v[t.nodes[node].child[2]];
}

}  // namespace detail

// Visits every k-decoration of the couple subject to pairing equality,
// per-node conservation and the domain's box/bound restrictions. The
// passed decoration is reused between calls.
inline void for_each_couple_decoration(
    const Couple& c, int64_t k_num, int L, const DecorationDomain& dom,
    const std::function<void(const Decoration&)>& fn) {
  int n = c.order();
  std::vector<detail::PairVar> pv;
  for (auto& [a, b] : c.pairing) {
    detail::PairVar p;
    p.leaf = {a, b};
    int64_t lo = std::numeric_limits<int64_t>::min();
    int64_t hi = std::numeric_limits<int64_t>::max();
    if (dom.value_bound >= 0) {
      int64_t m = int64_t(dom.value_bound * L + 1e-9);
      lo = -m;
      hi = m;
    }
    for (auto& [bl, center] : dom.box_centers)
      for (LeafRef l : {a, b})
        if (bl == l) {
          lo = std::max(lo, center - L);
          hi = std::min(hi, center + L);
        }
    p.lo = lo;
    p.hi = hi;
    for (LeafRef l : {a, b})
      if (l.tree == 0) p.coeff += c.plus.nodes[l.node].sign;
    pv.push_back(p);
  }
  // eliminate one crossing pair via the plus-root conservation law
  int det = -1;
  for (int i = int(pv.size()) - 1; i >= 0; i--)
    if (pv[i].coeff != 0) {
      det = i;
      break;
    }
  if (det < 0) throw domain_error("decorations: no crossing pair");
  int free_slots = n;
  if (L > 16 && free_slots > 5)
    throw resource_error("decorations: too many free slots for this L");
  for (auto& p : pv)
    if (int(&p - pv.data()) != det &&
        (p.lo == std::numeric_limits<int64_t>::min() ||
         p.hi == std::numeric_limits<int64_t>::max()))
      throw domain_error("decorations: unbounded free pair; give a box or bound");

  Decoration dec;
  dec.L = L;
  dec.val[0].assign(c.plus.nodes.size(), 0);
  dec.val[1].assign(c.minus.nodes.size(), 0);

  std::vector<int64_t> cur(pv.size(), 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == int(pv.size())) {
      int64_t acc = 0;
      for (size_t j = 0; j < pv.size(); j++)
        if (int(j) != det) acc += pv[j].coeff * cur[j];
      int64_t rem = k_num - acc;  // coeff_det * v_det = rem
      int64_t v = pv[det].coeff > 0 ? rem : -rem;
      if (v < pv[det].lo || v > pv[det].hi) return;
      cur[det] = v;
      for (size_t j = 0; j < pv.size(); j++)
        for (LeafRef l : pv[j].leaf) dec.val[l.tree][l.node] = cur[j];
      detail::fill_internal(c.plus, dec.val[0], 0);
      detail::fill_internal(c.minus, dec.val[1], 0);
      if (dec.val[0][0] != k_num || dec.val[1][0] != k_num)
        throw theory_violation("decorations: root conservation broke");
      fn(dec);
      return;
    }
    if (i == det) {
      rec(i + 1);
      return;
    }
    for (int64_t v = pv[i].lo; v <= pv[i].hi; v++) {
      cur[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
}

inline std::vector<Decoration> enumerate_decorations(
    const Couple& c, int64_t k_num, int L, const DecorationDomain& dom = {}) {
  std::vector<Decoration> out;
  for_each_couple_decoration(c, k_num, L, dom,
                             [&](const Decoration& d) { out.push_back(d); });
  return out;
}

// k-decorations of a single tree: all leaves range over |k_l| <= bound
// with one leaf eliminated by the root conservation law.
inline void for_each_tree_decoration(
    const Tree& t, int64_t k_num, int L, int64_t bound_num,
    const std::function<void(const std::vector<int64_t>&)>& fn) {
  std::vector<int> leaves = t.leaves();
  std::vector<int> sgn;
  for (int l : leaves) sgn.push_back(t.nodes[l].sign * t.root_sign());
  int det = int(leaves.size()) - 1;  // last leaf always has coeff +1 or -1
  std::vector<int64_t> v(t.nodes.size(), 0);
  std::function<void(int, int64_t)> rec = [&](int i, int64_t acc) {
    if (i == det) {
      int64_t rem = k_num - acc;
      int64_t lv = sgn[det] > 0 ? rem : -rem;
      if (lv < -bound_num || lv > bound_num) return;
      v[leaves[det]] = lv;
      detail::fill_internal(t, v, 0);
      fn(v);
      return;
    }
    for (int64_t x = -bound_num; x <= bound_num; x++) {
      v[leaves[i]] = x;
      rec(i + 1, acc + sgn[i] * x);
    }
  };
  rec(0, 0);
}

}  // namespace wk
