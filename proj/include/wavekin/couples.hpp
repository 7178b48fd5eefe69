#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wavekin/trees.hpp"

namespace wk {

struct LeafRef {
  int8_t tree = 0;  // 0 = plus tree, 1 = minus tree
  int node = 0;
  bool operator==(const LeafRef&) const = default;
  auto operator<=>(const LeafRef&) const = default;
};

// A pair of opposite-sign trees plus a perfect pairing of all leaves
// into opposite-sign two-element blocks.
struct Couple {
  Tree plus, minus;
  std::vector<std::pair<LeafRef, LeafRef>> pairing;

  int order() const { return plus.order + minus.order; }

  const Tree& tree(int8_t t) const { return t == 0 ? plus : minus; }
  Tree& tree(int8_t t) { return t == 0 ? plus : minus; }
  int8_t leaf_sign(LeafRef l) const { return tree(l.tree).nodes[l.node].sign; }

  LeafRef partner_of(LeafRef l) const {
    for (auto& [a, b] : pairing) {
      if (a == l) return b;
      if (b == l) return a;
    }
    throw domain_error("couple: leaf not in pairing");
  }

  void normalize() {
    for (auto& [a, b] : pairing)
      if (b < a) std::swap(a, b);
    std::sort(pairing.begin(), pairing.end());
  }

  std::string key() const {
    std::string s = plus.shape() + "|" + minus.shape() + "|";
    for (auto& [a, b] : pairing) {
      s += std::to_string(a.tree * 1000 + a.node) + "-" +
           std::to_string(b.tree * 1000 + b.node) + ";";
    }
    return s;
  }

  void check() const {
    plus.check();
    minus.check();
    if (plus.root_sign() != +1 || minus.root_sign() != -1)
      throw domain_error("couple: tree signs must be (+,-)");
    size_t total_leaves = (2 * plus.order + 1) + (2 * minus.order + 1);
    if (pairing.size() * 2 != total_leaves)
      throw domain_error("couple: pairing must cover all leaves");
    if (pairing.size() != size_t(order() + 1))
      throw domain_error("couple: pairing block count must be order+1");
    std::vector<std::vector<char>> seen(2);
    seen[0].assign(plus.nodes.size(), 0);
    seen[1].assign(minus.nodes.size(), 0);
    for (auto& [a, b] : pairing) {
      for (LeafRef l : {a, b}) {
        if (!tree(l.tree).is_leaf(l.node))
          throw domain_error("couple: pairing references a branching node");
        if (seen[l.tree][l.node]++)
          throw domain_error("couple: leaf paired twice");
      }
      if (leaf_sign(a) + leaf_sign(b) != 0)
        throw domain_error("couple: paired leaves must have opposite signs");
    }
  }
};

inline Couple trivial_couple() {
  Couple c;
  c.plus = tree_from_shape("o", +1);
  c.minus = tree_from_shape("o", -1);
  c.pairing = {{LeafRef{0, 0}, LeafRef{1, 0}}};
  return c;
}

// Visits every couple of total order n: all order splits, all tree
// pairs, all opposite-sign perfect matchings. The couple reference is
// reused between calls; copy it to keep it.
inline void for_each_couple(int n, const std::function<void(const Couple&)>& fn) {
  if (n < 0 || n > 6)
    throw resource_error("for_each_couple: order must lie in [0,6]");
  for (int a = 0; a <= n; a++) {
    int b = n - a;
    auto plus_trees = enumerate_trees(a, +1);
    auto minus_trees = enumerate_trees(b, -1);
    for (const Tree& tp : plus_trees)
      for (const Tree& tm : minus_trees) {
        std::vector<LeafRef> plus_leaves, minus_leaves;  // by leaf SIGN
        for (int8_t ti = 0; ti < 2; ti++) {
          const Tree& t = ti == 0 ? tp : tm;
          for (int i = 0; i < int(t.nodes.size()); i++) {
            if (!t.is_leaf(i)) continue;
            (t.nodes[i].sign > 0 ? plus_leaves : minus_leaves)
                .push_back(LeafRef{ti, i});
          }
        }
        // bijections plus_leaves -> minus_leaves via permutations
        std::vector<int> perm(minus_leaves.size());
        for (size_t i = 0; i < perm.size(); i++) perm[i] = int(i);
        Couple c;
        c.plus = tp;
        c.minus = tm;
        do {
          c.pairing.clear();
          for (size_t i = 0; i < perm.size(); i++)
            c.pairing.push_back({plus_leaves[i], minus_leaves[perm[i]]});
          c.normalize();
          fn(c);
        } while (std::next_permutation(perm.begin(), perm.end()));
      }
  }
}

inline std::vector<Couple> enumerate_couples(int n) {
  if (n < 0 || n > 6)
    throw resource_error("enumerate_couples: order must lie in [0,6]");
  if (n > 4)
    throw resource_error(
        "enumerate_couples: orders above 4 exceed the materialization "
        "budget; use for_each_couple");
  std::vector<Couple> out;
  for_each_couple(n, [&](const Couple& c) { out.push_back(c); });
  return out;
}

}  // namespace wk
