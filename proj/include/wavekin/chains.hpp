#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wavekin/decorations.hpp"
#include "wavekin/molecule.hpp"

namespace wk {

// Two parallel bonds between a pair of atoms. A CL (cancellation)
// double bond is one pairing bond plus one parent-child bond, which
// forces the two branching nodes into a parent-child relation; a CN
// double bond is two pairing bonds. Two parent-child bonds between the
// same pair cannot occur.
enum class DoubleBondKind : int8_t { CL, CN };
enum class BondOrientation : int8_t { Opposite, Same };

struct DoubleBondInfo {
  std::array<int, 2> atoms{-1, -1};     // CL: {parent side, child side}
  std::array<int, 2> bond_ids{-1, -1};  // CL: {PC, LP}
  DoubleBondKind kind = DoubleBondKind::CL;
  BondOrientation orientation = BondOrientation::Same;
  LeafRef node_a, node_b;  // branching nodes behind atoms[0]/atoms[1]
  // leaf pairs crossing the bond, each as (under atoms[0], under atoms[1])
  std::array<std::pair<LeafRef, LeafRef>, 2> leaf_pairs{};
  int pair_count = 0;
};

inline std::vector<DoubleBondInfo> find_double_bonds(const Molecule& m) {
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (const Bond& b : m.bonds) {
    if (!b.alive || b.self_loop()) continue;
    groups[{std::min(b.from, b.to), std::max(b.from, b.to)}].push_back(b.id);
  }
  std::vector<DoubleBondInfo> out;
  for (auto& [pr, ids] : groups) {
    if (ids.size() != 2) continue;  // singles, triples and beyond
    const Bond& b1 = m.bonds[ids[0]];
    const Bond& b2 = m.bonds[ids[1]];
    DoubleBondInfo info;
    int pc = (b1.label == BondLabel::PC) + (b2.label == BondLabel::PC);
    if (pc == 2)
      throw theory_violation("double bond with two parent-child bonds");
    info.orientation = (b1.from == b2.to && b1.to == b2.from)
                           ? BondOrientation::Opposite
                           : BondOrientation::Same;
    if (pc == 1) {
      const Bond& bpc = b1.label == BondLabel::PC ? b1 : b2;
      const Bond& blp = b1.label == BondLabel::PC ? b2 : b1;
      info.kind = DoubleBondKind::CL;
      info.atoms = {bpc.p_atom, bpc.other(bpc.p_atom)};
      info.bond_ids = {bpc.id, blp.id};
      bool flip = blp.from != info.atoms[0];
      info.leaf_pairs[0] = {flip ? blp.carrier_to : blp.carrier_from,
                            flip ? blp.carrier_from : blp.carrier_to};
      info.pair_count = 1;
    } else {
      info.kind = DoubleBondKind::CN;
      info.atoms = {pr.first, pr.second};
      info.bond_ids = {ids[0], ids[1]};
      for (int i = 0; i < 2; i++) {
        const Bond& b = m.bonds[ids[i]];
        bool flip = b.from != pr.first;
        info.leaf_pairs[i] = {flip ? b.carrier_to : b.carrier_from,
                              flip ? b.carrier_from : b.carrier_to};
      }
      info.pair_count = 2;
    }
    info.node_a = m.atom_node[info.atoms[0]];
    info.node_b = m.atom_node[info.atoms[1]];
    out.push_back(info);
  }
  return out;
}

enum class ChainKind : int8_t { Chain, Hyperchain, PseudoHyperchain };

// Maximal sequence of atoms joined consecutively by double bonds,
// possibly upgraded: a hyperchain closes the ends with a single bond, a
// pseudo-hyperchain hangs both ends off one outside atom via single
// bonds. irregular = all links CL with opposite directions.
struct ChainObject {
  std::vector<int> atoms;             // v0..vq along the chain
  std::vector<DoubleBondInfo> links;  // links[j] joins atoms[j], atoms[j+1]
  ChainKind kind = ChainKind::Chain;
  bool cl_only = false;
  bool negative = false;
  bool irregular = false;
  bool maximal = true;
  int cn_index = -1;       // at most one CN link
  int closing_bond = -1;   // hyperchain: single bond v0 -- vq
  int pseudo_atom = -1;    // pseudo-hyperchain: the shared neighbour
  std::array<int, 2> pseudo_bonds{-1, -1};
  int q() const { return int(links.size()); }
};

struct ChainScanOptions {
  bool negative_only = false;
};

inline std::vector<ChainObject> classify_chain_objects(
    const Molecule& m, ChainScanOptions opt = {}) {
  auto doubles = find_double_bonds(m);
  std::vector<int> use;
  for (int i = 0; i < int(doubles.size()); i++)
    if (!opt.negative_only ||
        doubles[i].orientation == BondOrientation::Opposite)
      use.push_back(i);
  std::map<int, std::vector<int>> adj;  // atom -> indices into doubles
  for (int i : use)
    for (int v : doubles[i].atoms) adj[v].push_back(i);
  for (auto& [v, ds] : adj)
    if (ds.size() > 2)
      throw theory_violation("atom carries more than two double bonds");
  std::vector<char> used(doubles.size(), 0);
  std::vector<ChainObject> out;
  for (auto& [v, ds] : adj) {
    if (ds.size() != 1 || used[ds[0]]) continue;  // walk from path ends
    ChainObject obj;
    obj.atoms.push_back(v);
    int cur = v, cur_link = ds[0];
    while (true) {
      used[cur_link] = 1;
      obj.links.push_back(doubles[cur_link]);
      int nxt = doubles[cur_link].atoms[0] == cur ? doubles[cur_link].atoms[1]
                                                  : doubles[cur_link].atoms[0];
      obj.atoms.push_back(nxt);
      cur = nxt;
      cur_link = -1;
      for (int d : adj[cur])
        if (!used[d]) cur_link = d;
      if (cur_link < 0) break;
    }
    if (obj.atoms.back() < obj.atoms.front()) {
      std::reverse(obj.atoms.begin(), obj.atoms.end());
      std::reverse(obj.links.begin(), obj.links.end());
    }
    obj.cl_only = true;
    obj.negative = true;
    for (int j = 0; j < int(obj.links.size()); j++) {
      if (obj.links[j].kind == DoubleBondKind::CN) {
        if (obj.cn_index >= 0)
          throw theory_violation("chain with two CN double bonds");
        obj.cn_index = j;
        obj.cl_only = false;
      }
      if (obj.links[j].orientation != BondOrientation::Opposite)
        obj.negative = false;
    }
    obj.irregular = obj.cl_only && obj.negative;

    std::vector<char> link_bond(m.bonds.size(), 0);
    for (auto& li : obj.links)
      for (int id : li.bond_ids) link_bond[id] = 1;
    std::vector<char> in_chain(m.atom_ids(), 0);
    for (int a : obj.atoms) in_chain[a] = 1;
    int v0 = obj.atoms.front(), vq = obj.atoms.back();
    for (const Bond& b : m.bonds) {
      if (!b.alive || b.self_loop() || link_bond[b.id]) continue;
      if ((b.from == v0 && b.to == vq) || (b.from == vq && b.to == v0))
        if (obj.closing_bond < 0) obj.closing_bond = b.id;
    }
    if (obj.closing_bond >= 0) {
      obj.kind = ChainKind::Hyperchain;
    } else {
      auto singles_at = [&](int end) {
        std::map<int, int> nb;  // neighbour atom -> lowest bond id
        for (const Bond& b : m.bonds) {
          if (!b.alive || b.self_loop() || link_bond[b.id]) continue;
          if (b.from != end && b.to != end) continue;
          int w = b.other(end);
          if (in_chain[w] || m.multiplicity(end, w) != 1) continue;
          if (!nb.count(w)) nb[w] = b.id;
        }
        return nb;
      };
      auto n0 = singles_at(v0), nq = singles_at(vq);
      for (auto& [w, id] : n0) {
        auto it = nq.find(w);
        if (it == nq.end()) continue;
        obj.kind = ChainKind::PseudoHyperchain;
        obj.pseudo_atom = w;
        obj.pseudo_bonds = {id, it->second};
        break;
      }
    }
    out.push_back(std::move(obj));
  }
  for (int i : use)
    if (!used[i]) throw theory_violation("double bonds form a closed cycle");
  std::sort(out.begin(), out.end(), [](const ChainObject& a,
                                       const ChainObject& b) {
    return a.atoms.front() < b.atoms.front();
  });
  return out;
}

enum class GapSize : int8_t { SG, LG };

struct GapClass {
  double h = 0.0;
  GapSize cls = GapSize::SG;
  double threshold = 0.0;
};

// Gap of an opposite-direction double bond, measured along the edge
// running from atoms[0] to atoms[1], as a numerator over L.
inline int64_t double_bond_gap_num(const Molecule& m,
                                   const MoleculeDecoration& d,
                                   const DoubleBondInfo& info) {
  if (info.orientation != BondOrientation::Opposite)
    throw domain_error("gap: double bond edges must run in opposite directions");
  int fwd = m.bonds[info.bond_ids[0]].from == info.atoms[0] ? info.bond_ids[0]
                                                            : info.bond_ids[1];
  int bwd = fwd == info.bond_ids[0] ? info.bond_ids[1] : info.bond_ids[0];
  return d.bond_num[fwd] - d.bond_num[bwd];
}

// All links of a decorated negative chain share one gap; SG means
// |h| <= threshold_constant / sqrt(T).
inline GapClass chain_gap(const Molecule& m, const MoleculeDecoration& d,
                          const ChainObject& obj, double T,
                          double threshold_constant = 1.0) {
  if (!obj.negative) throw domain_error("chain_gap: chain must be negative");
  int64_t h = 0;
  for (int j = 0; j < int(obj.links.size()); j++) {
    int64_t hj = double_bond_gap_num(m, d, obj.links[j]);
    if (obj.links[j].atoms[0] != obj.atoms[j]) hj = -hj;
    if (j == 0)
      h = hj;
    else if (hj != h)
      throw theory_violation("gaps disagree along a chain");
  }
  GapClass g;
  g.h = double(h) / double(d.L);
  g.threshold = threshold_constant / std::sqrt(T);
  g.cls = std::abs(g.h) <= g.threshold ? GapSize::SG : GapSize::LG;
  return g;
}

// Descending node path behind a CL stretch: nodes[j+1] is a child of
// nodes[j], and a leaf child of nodes[j] pairs with a leaf child of
// nodes[j+1].
struct CoupleChain {
  int8_t tree = 0;
  std::vector<int> nodes;
  int q() const { return int(nodes.size()) - 1; }
};

inline int atom_of_node(const Molecule& m, LeafRef nd) {
  for (int v = 0; v < m.atom_ids(); v++)
    if (m.atom_alive[v] && m.atom_node[v] == nd) return v;
  throw usage_error("atom_of_node: branching node not in molecule");
}

inline std::vector<CoupleChain> couple_cl_runs(const Couple& c,
                                               const Molecule& m,
                                               const ChainObject& obj) {
  std::vector<CoupleChain> out;
  int i = 0, n = int(obj.links.size());
  while (i < n) {
    if (obj.links[i].kind != DoubleBondKind::CL) {
      i++;
      continue;
    }
    int j = i;
    while (j + 1 < n && obj.links[j + 1].kind == DoubleBondKind::CL) j++;
    std::vector<int> seq(obj.atoms.begin() + i, obj.atoms.begin() + j + 2);
    if (obj.links[i].atoms[0] != seq.front())
      std::reverse(seq.begin(), seq.end());
    CoupleChain run;
    run.tree = m.atom_node[seq.front()].tree;
    for (int k = 0; k < int(seq.size()); k++) {
      LeafRef nd = m.atom_node[seq[k]];
      if (nd.tree != run.tree)
        throw theory_violation("CL stretch crosses trees");
      run.nodes.push_back(nd.node);
      if (k > 0 &&
          c.tree(run.tree).nodes[run.nodes[k]].parent != run.nodes[k - 1])
        throw theory_violation("CL stretch does not descend parent to child");
    }
    out.push_back(std::move(run));
    i = j + 1;
  }
  return out;
}

// The leaf pair witnessing a CL double bond above `node`: a leaf child
// of the parent paired with a leaf child of `node`. Empty when there is
// no such pair or when two of them stack into a triple bond.
inline std::optional<std::pair<int, int>> admissible_parent_pair(
    const Couple& c, int8_t ti, int node) {
  const Tree& t = c.tree(ti);
  if (node <= 0 || node >= int(t.nodes.size()) || t.is_leaf(node))
    return std::nullopt;
  int p = t.nodes[node].parent;
  if (p < 0) return std::nullopt;
  std::vector<std::pair<int, int>> found;
  for (int s = 0; s < 3; s++) {
    int x = t.nodes[p].child[s];
    if (x == node || !t.is_leaf(x)) continue;
    LeafRef partner = c.partner_of({ti, x});
    if (partner.tree == ti && t.nodes[partner.node].parent == node)
      found.push_back({x, partner.node});
  }
  if (found.size() != 1) return std::nullopt;
  return found[0];
}

inline bool twist_admissible(const Couple& c, int8_t ti, int node) {
  auto pr = admissible_parent_pair(c, ti, node);
  if (!pr) return false;
  const Tree& t = c.tree(ti);
  return t.nodes[node].sign == -t.nodes[pr->first].sign;
}

// Conservation at every branching node, equal values on paired leaves,
// equal root values. Holds for every decoration this library produces;
// a failure after a structural operation means the operation is broken.
inline void check_couple_decoration(const Couple& c, const Decoration& d) {
  for (int8_t ti = 0; ti < 2; ti++) {
    const Tree& t = c.tree(ti);
    if (d.val[ti].size() != t.nodes.size())
      throw usage_error("decoration does not cover the tree");
    for (int i = 0; i < int(t.nodes.size()); i++) {
      if (t.is_leaf(i)) continue;
      auto& ch = t.nodes[i].child;
      if (d.val[ti][i] !=
          d.val[ti][ch[0]] - d.val[ti][ch[1]] + d.val[ti][ch[2]])
        throw theory_violation("decoration violates conservation");
    }
  }
  if (d.val[0][0] != d.val[1][0])
    throw theory_violation("root values disagree between trees");
  for (auto& [a, b] : c.pairing)
    if (d.at(a) != d.at(b))
      throw theory_violation("paired leaves carry different values");
}

namespace detail {

// Fresh preorder ids after pointer surgery; signs recomputed from the
// slot rule. map[old] = new id, -1 for nodes no longer reachable.
inline Tree rebuild_preorder(const Tree& t, std::vector<int>& map) {
  Tree out;
  map.assign(t.nodes.size(), -1);
  std::function<int(int, int, int, int8_t)> rec = [&](int old_id, int parent,
                                                      int slot,
                                                      int8_t sign) -> int {
    int id = int(out.nodes.size());
    out.nodes.emplace_back();
    out.nodes[id].parent = parent;
    out.nodes[id].slot = slot;
    out.nodes[id].sign = sign;
    map[old_id] = id;
    if (t.nodes[old_id].child[0] >= 0) {
      out.order++;
      for (int s = 0; s < 3; s++) {
        int8_t cs = (s == 1) ? int8_t(-sign) : sign;
        int cn = rec(t.nodes[old_id].child[s], id, s, cs);
        out.nodes[id].child[s] = cn;
      }
    }
    return id;
  };
  rec(0, -1, -1, t.nodes[0].sign);
  return out;
}

}  // namespace detail

struct TwistResult {
  Couple couple;
  std::array<std::vector<int>, 2> node_map;  // old id -> new id
  bool has_dec = false;
  Decoration dec;
};

// Swap `node` with the paired leaf under its parent, swap the two
// untouched children of `node`, and renumber. Exactly the three nodes
// involved in the double bond flip sign; a supplied decoration is
// transported (the swapped positions exchange values, slot for slot).
inline TwistResult unit_twist(const Couple& c, int8_t ti, int node,
                              const Decoration* dec = nullptr) {
  const Tree& t0 = c.tree(ti);
  if (node <= 0 || node >= int(t0.nodes.size()) || t0.is_leaf(node))
    throw domain_error("unit_twist: need a non-root branching node");
  auto pr = admissible_parent_pair(c, ti, node);
  if (!pr)
    throw domain_error(
        "unit_twist: node and parent are not joined by a CL double bond");
  int m_leaf = pr->first, p_leaf = pr->second;
  if (t0.nodes[node].sign != -t0.nodes[m_leaf].sign)
    throw domain_error("unit_twist: double bond directions do not oppose");

  Tree t = t0;
  int p = t.nodes[node].parent;
  int s2 = t.nodes[node].slot, s12 = t.nodes[m_leaf].slot;
  t.nodes[p].child[s2] = m_leaf;
  t.nodes[p].child[s12] = node;
  t.nodes[m_leaf].slot = s2;
  t.nodes[node].slot = s12;
  int os[2], oi = 0;
  for (int s = 0; s < 3; s++)
    if (t.nodes[node].child[s] != p_leaf) os[oi++] = s;
  int ca = t.nodes[node].child[os[0]], cb = t.nodes[node].child[os[1]];
  t.nodes[node].child[os[0]] = cb;
  t.nodes[node].child[os[1]] = ca;
  t.nodes[cb].slot = os[0];
  t.nodes[ca].slot = os[1];

  TwistResult r;
  r.node_map[ti].clear();
  Tree nt = detail::rebuild_preorder(t, r.node_map[ti]);
  for (int v : r.node_map[ti])
    if (v < 0) throw theory_violation("unit_twist dropped a node");
  r.couple = c;
  r.couple.tree(ti) = std::move(nt);
  auto& other_map = r.node_map[1 - ti];
  other_map.resize(c.tree(int8_t(1 - ti)).nodes.size());
  for (int i = 0; i < int(other_map.size()); i++) other_map[i] = i;
  for (auto& [a, b] : r.couple.pairing) {
    if (a.tree == ti) a.node = r.node_map[ti][a.node];
    if (b.tree == ti) b.node = r.node_map[ti][b.node];
  }
  r.couple.normalize();
  r.couple.check();

  if (dec) {
    r.has_dec = true;
    r.dec.L = dec->L;
    r.dec.val[1 - ti] = dec->val[1 - ti];
    r.dec.val[ti].assign(r.couple.tree(ti).nodes.size(), 0);
    for (int o = 0; o < int(t0.nodes.size()); o++)
      r.dec.val[ti][r.node_map[ti][o]] = dec->val[ti][o];
    r.dec.val[ti][r.node_map[ti][node]] = dec->val[ti][m_leaf];
    r.dec.val[ti][r.node_map[ti][m_leaf]] = dec->val[ti][node];
    r.dec.val[ti][r.node_map[ti][p_leaf]] = dec->val[ti][node];
    check_couple_decoration(r.couple, r.dec);
  }
  return r;
}

// All images under subsets of twist positions, deduplicated.
inline std::vector<Couple> congruence_class(
    const Couple& c, const std::vector<std::pair<int8_t, int>>& M) {
  for (auto& [ti, nd] : M)
    if (!twist_admissible(c, ti, nd))
      throw domain_error("congruence_class: node not twist-admissible");
  std::map<std::string, Couple> seen;
  std::function<void(const Couple&, std::vector<std::pair<int8_t, int>>)> go =
      [&](const Couple& cur, std::vector<std::pair<int8_t, int>> rest) {
        if (rest.empty()) {
          Couple k = cur;
          k.normalize();
          seen.emplace(k.key(), std::move(k));
          return;
        }
        auto [ti, nd] = rest.back();
        rest.pop_back();
        go(cur, rest);
        TwistResult tw = unit_twist(cur, ti, nd);
        for (auto& [tj, nj] : rest) {
          nj = tw.node_map[tj][nj];
          if (nj < 0) throw theory_violation("twist removed a node");
        }
        go(tw.couple, std::move(rest));
      };
  go(c, M);
  std::vector<Couple> out;
  out.reserve(seen.size());
  for (auto& [k, v] : seen) out.push_back(v);
  return out;
}

struct SpliceTag {
  int8_t tree = 0;
  int node = -1;  // surviving head of the spliced stretch
  int q = 0;
  ChainKind kind = ChainKind::Chain;
};

struct SpliceResult {
  Couple couple;
  std::array<std::vector<int>, 2> node_map;  // old id -> new id, -1 removed
  SpliceTag tag;
  bool has_dec = false;
  Decoration dec;
};

// Remove the descending nodes of a CL chain together with their pair
// leaves; the two leftover children of the last node and the leftover
// child of the head refill the head's slots, matched by sign and, among
// equal signs, by their order under the last node. Order drops by q.
inline SpliceResult splice(const Couple& c, int8_t ti,
                           const std::vector<int>& chain_nodes,
                           const Decoration* dec = nullptr,
                           ChainKind kind_tag = ChainKind::Chain) {
  const Tree& t0 = c.tree(ti);
  if (chain_nodes.empty())
    throw domain_error("splice: empty chain");
  for (int nd : chain_nodes)
    if (nd < 0 || nd >= int(t0.nodes.size()) || t0.is_leaf(nd))
      throw domain_error("splice: chain entries must be branching nodes");
  int q = int(chain_nodes.size()) - 1;
  std::vector<std::pair<int, int>> pairs;  // (m under nodes[j], p under nodes[j+1])
  for (int j = 0; j < q; j++) {
    if (t0.nodes[chain_nodes[j + 1]].parent != chain_nodes[j])
      throw domain_error("splice: chain does not descend parent to child");
    auto pr = admissible_parent_pair(c, ti, chain_nodes[j + 1]);
    if (!pr)
      throw domain_error("splice: consecutive nodes lack a CL double bond");
    pairs.push_back(*pr);
  }

  SpliceResult r;
  r.tag = {ti, chain_nodes[0], q, kind_tag};
  if (q == 0) {
    r.couple = c;
    r.couple.normalize();
    for (int8_t tj = 0; tj < 2; tj++) {
      r.node_map[tj].resize(c.tree(tj).nodes.size());
      for (int i = 0; i < int(r.node_map[tj].size()); i++) r.node_map[tj][i] = i;
    }
    if (dec) {
      r.has_dec = true;
      r.dec = *dec;
    }
    return r;
  }

  Tree t = t0;
  int n0 = chain_nodes[0], nq = chain_nodes.back();
  int n1 = chain_nodes[1], m1 = pairs[0].first, pq = pairs.back().second;
  int n0_1 = -1;
  for (int s = 0; s < 3; s++) {
    int x = t.nodes[n0].child[s];
    if (x != n1 && x != m1) n0_1 = x;
  }
  int rem[2], ri = 0;
  for (int s = 0; s < 3; s++) {
    int x = t.nodes[nq].child[s];
    if (x != pq) rem[ri++] = x;
  }
  int cand[3] = {rem[0], rem[1], n0_1};
  bool taken[3] = {false, false, false};
  int new_child[3];
  for (int s = 0; s < 3; s++) {
    int8_t want = int8_t(((s == 1) ? -1 : +1) * t.nodes[n0].sign);
    int pick = -1;
    for (int i = 0; i < 3 && pick < 0; i++)
      if (!taken[i] && t.nodes[cand[i]].sign == want) pick = i;
    if (pick < 0)
      throw theory_violation("spliced children cannot fill the sign slots");
    taken[pick] = true;
    new_child[s] = cand[pick];
  }
  for (int s = 0; s < 3; s++) {
    t.nodes[n0].child[s] = new_child[s];
    t.nodes[new_child[s]].parent = n0;
    t.nodes[new_child[s]].slot = s;
  }

  r.node_map[ti].clear();
  Tree nt = detail::rebuild_preorder(t, r.node_map[ti]);
  if (int(nt.nodes.size()) != int(t0.nodes.size()) - 3 * q)
    throw theory_violation("splice removed the wrong number of nodes");
  r.couple = c;
  r.couple.tree(ti) = std::move(nt);
  auto& other_map = r.node_map[1 - ti];
  other_map.resize(c.tree(int8_t(1 - ti)).nodes.size());
  for (int i = 0; i < int(other_map.size()); i++) other_map[i] = i;

  auto mapped = [&](LeafRef l) {
    return LeafRef{l.tree, r.node_map[l.tree][l.node]};
  };
  std::vector<std::pair<LeafRef, LeafRef>> np;
  int dropped = 0;
  for (auto& [a, b] : r.couple.pairing) {
    LeafRef ma = mapped(a), mb = mapped(b);
    if (ma.node < 0 && mb.node < 0) {
      dropped++;
      continue;
    }
    if (ma.node < 0 || mb.node < 0)
      throw theory_violation("splice cut a pairing in half");
    np.push_back({ma, mb});
  }
  if (dropped != q)
    throw theory_violation("splice dropped the wrong number of pairs");
  r.couple.pairing = std::move(np);
  r.couple.normalize();
  r.couple.check();
  r.tag.node = r.node_map[ti][n0];

  if (dec) {
    r.has_dec = true;
    r.dec.L = dec->L;
    r.dec.val[1 - ti] = dec->val[1 - ti];
    r.dec.val[ti].assign(r.couple.tree(ti).nodes.size(), 0);
    for (int o = 0; o < int(t0.nodes.size()); o++)
      if (r.node_map[ti][o] >= 0)
        r.dec.val[ti][r.node_map[ti][o]] = dec->val[ti][o];
    check_couple_decoration(r.couple, r.dec);
  }
  return r;
}

namespace detail {

// Splice plan for one chain-like object: every descending CL position,
// except that a hyperchain or pseudo-hyperchain without a CN link keeps
// one position (the highest atom id by default; exclude_choice >= 0
// picks another). Contiguous kept positions form one spliceable chain.
inline std::vector<CoupleChain> plan_object_splices(const Couple& c,
                                                    const Molecule& m,
                                                    const ChainObject& obj,
                                                    int exclude_choice) {
  auto runs = couple_cl_runs(c, m, obj);
  struct Cand {
    int run, pos, atom;
  };
  std::vector<Cand> cands;
  for (int r = 0; r < int(runs.size()); r++)
    for (int p = 1; p < int(runs[r].nodes.size()); p++)
      cands.push_back({r, p, atom_of_node(m, {runs[r].tree, runs[r].nodes[p]})});
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.atom < b.atom; });
  int skip_run = -1, skip_pos = -1;
  if (obj.kind != ChainKind::Chain && obj.cn_index < 0 && !cands.empty()) {
    const Cand& x = exclude_choice < 0
                        ? cands.back()
                        : cands[exclude_choice % int(cands.size())];
    skip_run = x.run;
    skip_pos = x.pos;
  }
  std::vector<CoupleChain> out;
  for (int r = 0; r < int(runs.size()); r++) {
    int qn = int(runs[r].nodes.size()) - 1;
    int p = 1;
    while (p <= qn) {
      if (r == skip_run && p == skip_pos) {
        p++;
        continue;
      }
      int b = p;
      while (b + 1 <= qn && !(r == skip_run && b + 1 == skip_pos)) b++;
      CoupleChain sub;
      sub.tree = runs[r].tree;
      sub.nodes.assign(runs[r].nodes.begin() + (p - 1),
                       runs[r].nodes.begin() + b + 1);
      out.push_back(std::move(sub));
      p = b + 1;
    }
  }
  return out;
}

}  // namespace detail

// The nodes to splice for the selected chain-like objects.
inline std::vector<std::pair<int8_t, int>> choose_splice_set(
    const Couple& c, const std::vector<ChainObject>& selection,
    int exclude_choice = -1) {
  Molecule m = build_molecule(c);
  auto all = classify_chain_objects(m);
  auto neg = classify_chain_objects(m, {.negative_only = true});
  for (const ChainObject& obj : selection) {
    bool ok = false;
    for (auto* pool : {&all, &neg})
      for (const ChainObject& have : *pool)
        if (have.atoms == obj.atoms && have.kind == obj.kind) ok = true;
    if (!ok)
      throw domain_error(
          "choose_splice_set: selection is not a chain-like object of the "
          "molecule");
  }
  std::vector<std::pair<int8_t, int>> out;
  for (const ChainObject& obj : selection)
    for (const CoupleChain& sub :
         detail::plan_object_splices(c, m, obj, exclude_choice))
      for (int k = 1; k < int(sub.nodes.size()); k++)
        out.push_back({sub.tree, sub.nodes[k]});
  std::sort(out.begin(), out.end());
  return out;
}

struct PreprocessOptions {
  int exclude_choice = -1;  // -1: keep the highest-atom position
};

struct PreprocessResult {
  Couple couple;
  std::vector<SpliceTag> spliced_at;
  int rounds = 0;
};

// Splice every chain-like object down to its residue: chains collapse
// to an atom or a lone CN double bond, hyperchains to a triple bond,
// pseudo-hyperchains to a single double bond.
inline PreprocessResult preprocess(const Couple& c,
                                   PreprocessOptions opt = {}) {
  PreprocessResult res;
  res.couple = c;
  res.couple.normalize();
  int guard = c.order() + 2;
  while (res.couple.order() > 0) {
    if (--guard < 0)
      throw theory_violation("pre-processing failed to terminate");
    Molecule m = build_molecule(res.couple);
    auto C = classify_chain_objects(m);
    bool did = false;
    for (const ChainObject& obj : C) {
      auto plan = detail::plan_object_splices(res.couple, m, obj,
                                              opt.exclude_choice);
      if (plan.empty()) continue;
      SpliceResult sp =
          splice(res.couple, plan[0].tree, plan[0].nodes, nullptr, obj.kind);
      for (SpliceTag& t : res.spliced_at) {
        if (t.tree != sp.tag.tree) continue;
        t.node = sp.node_map[t.tree][t.node];
        if (t.node < 0)
          throw theory_violation("splice removed a tagged node");
      }
      res.spliced_at.push_back(sp.tag);
      res.couple = std::move(sp.couple);
      res.rounds++;
      did = true;
      break;
    }
    if (!did) break;
  }
  return res;
}

// After pre-processing: every remaining chain-like object is one double
// bond, no hyperchains survive, and a CL double bond only survives
// inside a pseudo-hyperchain.
inline bool verify_preprocessed(const Molecule& m, std::string* why = nullptr) {
  auto C = classify_chain_objects(m);
  for (const ChainObject& obj : C) {
    if (obj.q() != 1) {
      if (why) *why = "chain longer than one double bond remains";
      return false;
    }
    if (obj.kind == ChainKind::Hyperchain) {
      if (why) *why = "hyperchain remains";
      return false;
    }
    if (obj.links[0].kind == DoubleBondKind::CL &&
        obj.kind != ChainKind::PseudoHyperchain) {
      if (why) *why = "CL double bond outside a pseudo-hyperchain";
      return false;
    }
  }
  return true;
}

// Interaction filter at a node whose chain was spliced out: the
// coincidence between the middle child and the leftover child is
// allowed there, so the factor becomes 1 whenever k2 == k3.
inline int spliced_epsilon(int64_t k1, int64_t k2, int64_t k3,
                           bool* relaxed = nullptr) {
  int plain = epsilon_filter(k1, k2, k3);
  int out = (k2 == k3) ? 1 : plain;
  if (relaxed) *relaxed = out != plain;
  return out;
}

struct TwistSumReport {
  int q = 0;
  double h = 0.0;
  double lhs = 0.0, rhs = 0.0;
  double abs_err = 0.0, scale = 0.0, rel_err = 0.0;
  bool pass = false;
};

// Summing the chain amplitude over all 2^q twist images must factor
// into prod_j (n(k_j - h) - n(k_j)): each twist flips one sign and
// swaps the value k_j - h for k_j, leaving the phases untouched.
inline TwistSumReport twist_sum_factorization_check(
    int q, double h, const std::vector<double>& ks,
    const std::function<double(double)>& nin, double tol = 1e-12) {
  if (q < 1 || q > 4) throw usage_error("twist_sum: q must lie in [1,4]");
  if (int(ks.size()) != q)
    throw usage_error("twist_sum: need one wave number per position");
  std::vector<long double> shifted(q), plain(q);
  for (int j = 0; j < q; j++) {
    shifted[j] = nin(ks[j] - h);
    plain[j] = nin(ks[j]);
  }
  long double lhs = 0, scale = 0;
  for (int mask = 0; mask < (1 << q); mask++) {
    long double term = 1, mag = 1;
    for (int j = 0; j < q; j++) {
      long double f = (mask >> j & 1) ? -plain[j] : shifted[j];
      term *= f;
      mag *= f < 0 ? -f : f;
    }
    lhs += term;
    scale += mag;
  }
  long double rhs = 1;
  for (int j = 0; j < q; j++) rhs *= shifted[j] - plain[j];
  TwistSumReport r;
  r.q = q;
  r.h = h;
  r.lhs = double(lhs);
  r.rhs = double(rhs);
  long double err = lhs - rhs;
  r.abs_err = double(err < 0 ? -err : err);
  r.scale = double(scale);
  r.rel_err = r.scale > 0 ? r.abs_err / r.scale : 0.0;
  r.pass = r.abs_err <= tol * r.scale;
  return r;
}

// Couple-side gap of a descending chain: head value minus the value of
// the head's leftover child.
inline int64_t irregular_chain_gap_num(const Couple& c, const Decoration& d,
                                       int8_t ti,
                                       const std::vector<int>& chain_nodes) {
  if (chain_nodes.size() < 2)
    throw domain_error("chain gap: need at least one double bond");
  auto pr = admissible_parent_pair(c, ti, chain_nodes[1]);
  if (!pr) throw domain_error("chain gap: not a CL chain");
  const Tree& t = c.tree(ti);
  int n0_1 = -1;
  for (int s = 0; s < 3; s++) {
    int x = t.nodes[chain_nodes[0]].child[s];
    if (x != chain_nodes[1] && x != pr->first) n0_1 = x;
  }
  return d.val[ti][chain_nodes[0]] - d.val[ti][n0_1];
}

}  // namespace wk
