#pragma once

#include <array>
#include <string>
#include <vector>

#include "wavekin/common.hpp"

namespace wk {

// Ordered ternary tree with derived node signs: the children of a node
// with sign z carry (+z, -z, +z) left to right. order = number of
// branching nodes; a tree of order n has 2n+1 leaves.
struct Tree {
  struct Node {
    int parent = -1;
    int slot = -1;                       // index in parent's child triple
    std::array<int, 3> child{-1, -1, -1};
    int8_t sign = +1;
  };

  std::vector<Node> nodes;  // preorder, root at index 0
  int order = 0;

  int8_t root_sign() const { return nodes[0].sign; }
  bool is_leaf(int i) const { return nodes[i].child[0] < 0; }
  int root() const { return 0; }

  std::vector<int> leaves() const {
    std::vector<int> out;
    for (int i = 0; i < int(nodes.size()); i++)
      if (is_leaf(i)) out.push_back(i);
    return out;
  }

  // Canonical shape string, e.g. "o" or "(ooo)" or "((ooo)oo)".
  std::string shape() const { return shape_of(0); }

  std::string shape_of(int i) const {
    if (is_leaf(i)) return "o";
    std::string s = "(";
    for (int c : nodes[i].child) s += shape_of(c);
    return s + ")";
  }

  void check() const {
    int leaves_seen = 0, branch_seen = 0;
    for (int i = 0; i < int(nodes.size()); i++) {
      const Node& nd = nodes[i];
      if (is_leaf(i)) {
        leaves_seen++;
        continue;
      }
      branch_seen++;
      for (int s = 0; s < 3; s++) {
        const Node& c = nodes[nd.child[s]];
        if (c.parent != i || c.slot != s)
          throw domain_error("tree: broken parent/child links");
        int8_t want = (s == 1) ? int8_t(-nd.sign) : nd.sign;
        if (c.sign != want) throw domain_error("tree: sign rule violated");
      }
    }
    if (branch_seen != order || leaves_seen != 2 * order + 1)
      throw domain_error("tree: order/leaf count mismatch");
  }
};

namespace detail {

inline void gen_shapes(int n, std::vector<std::string>& out) {
  if (n == 0) {
    out.push_back("o");
    return;
  }
  for (int a = 0; a <= n - 1; a++)
    for (int b = 0; b + a <= n - 1; b++) {
      int c = n - 1 - a - b;
      std::vector<std::string> as, bs, cs;
      gen_shapes(a, as);
      gen_shapes(b, bs);
      gen_shapes(c, cs);
      for (auto& x : as)
        for (auto& y : bs)
          for (auto& z : cs) out.push_back("(" + x + y + z + ")");
    }
}

inline int build_from_shape(Tree& t, const std::string& s, size_t& pos,
                            int parent, int slot, int8_t sign) {
  int id = int(t.nodes.size());
  t.nodes.emplace_back();
  t.nodes[id].parent = parent;
  t.nodes[id].slot = slot;
  t.nodes[id].sign = sign;
  if (s[pos] == 'o') {
    pos++;
    return id;
  }
  pos++;  // '('
  t.order++;
  for (int k = 0; k < 3; k++) {
    int8_t cs = (k == 1) ? int8_t(-sign) : sign;
    t.nodes[id].child[k] = build_from_shape(t, s, pos, id, k, cs);
  }
  pos++;  // ')'
  return id;
}

}  // namespace detail

inline Tree tree_from_shape(const std::string& shape, int8_t root_sign) {
  Tree t;
  size_t pos = 0;
  detail::build_from_shape(t, shape, pos, -1, -1, root_sign);
  if (pos != shape.size()) throw domain_error("tree: malformed shape string");
  return t;
}

// All ordered ternary trees of the given order, canonical (preorder) ids.
inline std::vector<Tree> enumerate_trees(int n, int8_t root_sign) {
  if (n < 0 || n > 8)
    throw resource_error("enumerate_trees: order must lie in [0,8]");
  std::vector<std::string> shapes;
  detail::gen_shapes(n, shapes);
  std::vector<Tree> out;
  out.reserve(shapes.size());
  for (auto& s : shapes) out.push_back(tree_from_shape(s, root_sign));
  return out;
}

}  // namespace wk
