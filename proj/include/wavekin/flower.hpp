#pragma once

#include <algorithm>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/couples.hpp"

namespace wk {

// A couple with one distinguished leaf pair: the two flowers, one per tree,
// paired with each other.  The stem of each tree is the branching-node path
// from the root down to its flower.
struct FlowerCouple {
  Couple base;
  LeafRef flowerPlus{0, 0}, flowerMinus{1, 0};
  std::vector<int> stemPlus, stemMinus;  // branching node ids, root first
  int heightPlus = 0, heightMinus = 0;
  // largest order among the subtrees hanging off either stem
  int maxStemSubtreeOrder = 0;

  bool admissible_for(int N) const { return maxStemSubtreeOrder <= N; }
};

namespace detail {

inline int subtree_order(const Tree& t, int node) {
  if (t.is_leaf(node)) return 0;
  int n = 1;
  for (int c : t.nodes[node].child) n += subtree_order(t, c);
  return n;
}

// stem nodes (root first) and the orders of the subtrees attached beside it
inline void build_stem(const Tree& t, int leaf, std::vector<int>& stem,
                       int& maxSub) {
  stem.clear();
  for (int n = t.nodes[leaf].parent; n >= 0; n = t.nodes[n].parent)
    stem.push_back(n);
  std::reverse(stem.begin(), stem.end());
  int on_path = leaf;
  for (auto it = stem.rbegin(); it != stem.rend(); ++it) {
    for (int c : t.nodes[*it].child)
      if (c != on_path) maxSub = std::max(maxSub, subtree_order(t, c));
    on_path = *it;
  }
}

}  // namespace detail

inline FlowerCouple flower_structure(const Couple& c, LeafRef flowerLeafPlus) {
  if (flowerLeafPlus.tree != 0)
    throw usage_error("flower_structure: flower must be chosen in the plus tree");
  if (!c.plus.is_leaf(flowerLeafPlus.node))
    throw usage_error("flower_structure: chosen node is not a leaf");
  LeafRef partner = c.partner_of(flowerLeafPlus);
  if (partner.tree == flowerLeafPlus.tree)
    throw domain_error("flower_structure: partner lies in the same tree");
  FlowerCouple f;
  f.base = c;
  f.flowerPlus = flowerLeafPlus;
  f.flowerMinus = partner;
  detail::build_stem(c.plus, flowerLeafPlus.node, f.stemPlus,
                     f.maxStemSubtreeOrder);
  detail::build_stem(c.minus, partner.node, f.stemMinus, f.maxStemSubtreeOrder);
  f.heightPlus = int(f.stemPlus.size());
  f.heightMinus = int(f.stemMinus.size());
  return f;
}

}  // namespace wk
