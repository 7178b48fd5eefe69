#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "wavekin/decorations.hpp"

namespace wk {

enum class BondLabel : int8_t { LP, PC };

// Directed edge between atoms. Atoms and bonds keep stable ids so that
// removals during graph reduction never invalidate references.
struct Bond {
  int id = -1;
  int from = -1, to = -1;
  BondLabel label = BondLabel::LP;
  bool alive = true;
  int p_atom = -1;  // PC only: atom holding the P mark
  // Couple node whose wavenumber the bond carries, seen from each
  // endpoint: the child leaf for LP, the child branching node for PC.
  LeafRef carrier_from, carrier_to;

  bool self_loop() const { return from == to; }
  int other(int v) const { return v == from ? to : from; }
};

// Directed multigraph on the branching nodes of a couple: out- and
// in-degree at most 2 per atom, self-loops allowed, no component made
// of degree-4 atoms only.
struct Molecule {
  std::vector<LeafRef> atom_node;  // atom id -> branching node
  std::vector<char> atom_alive;
  std::vector<Bond> bonds;

  int atom_ids() const { return int(atom_node.size()); }
  int atom_count() const {
    int n = 0;
    for (char a : atom_alive) n += a != 0;
    return n;
  }
  int bond_count() const {
    int n = 0;
    for (const Bond& b : bonds) n += b.alive;
    return n;
  }

  int add_atom(LeafRef node) {
    atom_node.push_back(node);
    atom_alive.push_back(1);
    return int(atom_node.size()) - 1;
  }

  int add_bond(int from, int to, BondLabel label, LeafRef cf, LeafRef ct,
               int p_atom = -1) {
    Bond b;
    b.id = int(bonds.size());
    b.from = from;
    b.to = to;
    b.label = label;
    b.carrier_from = cf;
    b.carrier_to = ct;
    b.p_atom = p_atom;
    bonds.push_back(b);
    return b.id;
  }

  int degree(int v) const {  // self-loops count twice
    int d = 0;
    for (const Bond& b : bonds)
      if (b.alive) d += (b.from == v) + (b.to == v);
    return d;
  }
  int out_degree(int v) const {
    int d = 0;
    for (const Bond& b : bonds)
      if (b.alive && b.from == v) d++;
    return d;
  }
  int in_degree(int v) const {
    int d = 0;
    for (const Bond& b : bonds)
      if (b.alive && b.to == v) d++;
    return d;
  }
  int multiplicity(int a, int b) const {
    int m = 0;
    for (const Bond& bd : bonds)
      if (bd.alive && ((bd.from == a && bd.to == b) ||
                       (bd.from == b && bd.to == a)))
        m++;
    return m;
  }

  std::vector<int> incident(int v) const {
    std::vector<int> out;
    for (const Bond& b : bonds)
      if (b.alive && (b.from == v || b.to == v)) out.push_back(b.id);
    return out;
  }

  // Undirected connectivity over alive atoms; optionally labels each
  // alive atom with a component index.
  int components(std::vector<int>* label = nullptr,
                 int skip_bond = -1) const {
    std::vector<int> lab(atom_node.size(), -1);
    int comp = 0;
    for (int s = 0; s < int(atom_node.size()); s++) {
      if (!atom_alive[s] || lab[s] >= 0) continue;
      std::vector<int> stack{s};
      lab[s] = comp;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const Bond& b : bonds) {
          if (!b.alive || b.id == skip_bond) continue;
          int w = -1;
          if (b.from == v) w = b.to;
          else if (b.to == v) w = b.from;
          else continue;
          if (lab[w] < 0) {
            lab[w] = comp;
            stack.push_back(w);
          }
        }
      }
      comp++;
    }
    if (label) *label = lab;
    return comp;
  }

  int chi() const { return bond_count() - atom_count() + components(); }

  bool is_bridge(int bond_id) const {
    const Bond& b = bonds[bond_id];
    if (!b.alive || b.self_loop()) return false;
    return components(nullptr, bond_id) > components();
  }

  std::vector<int> bridges() const {
    std::vector<int> out;
    int base = components();
    for (const Bond& b : bonds)
      if (b.alive && !b.self_loop() && components(nullptr, b.id) > base)
        out.push_back(b.id);
    return out;
  }

  void check() const {
    for (int v = 0; v < atom_ids(); v++) {
      if (!atom_alive[v]) continue;
      if (out_degree(v) > 2 || in_degree(v) > 2)
        throw domain_error("molecule: out/in degree above 2");
    }
    for (const Bond& b : bonds)
      if (b.alive && (!atom_alive[b.from] || !atom_alive[b.to]))
        throw domain_error("molecule: bond touches a dead atom");
    std::vector<int> lab;
    int f = components(&lab);
    std::vector<char> has_non4(f, 0);
    for (int v = 0; v < atom_ids(); v++)
      if (atom_alive[v] && degree(v) != 4) has_non4[lab[v]] = 1;
    for (int c = 0; c < f; c++)
      if (!has_non4[c])
        throw domain_error("molecule: component of only degree-4 atoms");
  }
};

// Atoms are the branching nodes of both trees; a PC bond joins each
// branching node to its parent, an LP bond joins the parent atoms of
// every paired leaf pair whose two leaves both have parents. LP bonds
// run from the minus child's atom to the plus child's atom; PC bonds
// run P to C when the child node has sign minus and C to P otherwise.
inline Molecule build_molecule(const Couple& c) {
  if (c.order() == 0)
    throw domain_error("build_molecule: couple must be nontrivial");
  Molecule m;
  std::array<std::vector<int>, 2> atom_of;
  for (int8_t ti = 0; ti < 2; ti++) {
    const Tree& t = c.tree(ti);
    atom_of[ti].assign(t.nodes.size(), -1);
    for (int i = 0; i < int(t.nodes.size()); i++)
      if (!t.is_leaf(i)) atom_of[ti][i] = m.add_atom(LeafRef{ti, i});
  }
  for (int8_t ti = 0; ti < 2; ti++) {
    const Tree& t = c.tree(ti);
    for (int i = 0; i < int(t.nodes.size()); i++) {
      if (t.is_leaf(i) || t.nodes[i].parent < 0) continue;
      int child_atom = atom_of[ti][i];
      int parent_atom = atom_of[ti][t.nodes[i].parent];
      LeafRef carrier{ti, i};
      if (t.nodes[i].sign < 0)
        m.add_bond(parent_atom, child_atom, BondLabel::PC, carrier, carrier,
                   parent_atom);
      else
        m.add_bond(child_atom, parent_atom, BondLabel::PC, carrier, carrier,
                   parent_atom);
    }
  }
  for (auto& [a, b] : c.pairing) {
    if (a.node == 0 || b.node == 0) continue;  // trivial-tree root leaf
    LeafRef plus = c.leaf_sign(a) > 0 ? a : b;
    LeafRef minus = c.leaf_sign(a) > 0 ? b : a;
    int from = atom_of[minus.tree][c.tree(minus.tree).nodes[minus.node].parent];
    int to = atom_of[plus.tree][c.tree(plus.tree).nodes[plus.node].parent];
    m.add_bond(from, to, BondLabel::LP, minus, plus);
  }
  m.check();
  return m;
}

// Induced sub-multigraph: the chosen atoms plus every bond joining two
// of them, keeping all ids.
inline Molecule atomic_group(const Molecule& m, const std::vector<int>& atoms) {
  Molecule g = m;
  std::vector<char> keep(m.atom_ids(), 0);
  for (int v : atoms) keep[v] = 1;
  for (int v = 0; v < g.atom_ids(); v++)
    if (!keep[v]) g.atom_alive[v] = 0;
  for (Bond& b : g.bonds)
    if (b.alive && (!keep[b.from] || !keep[b.to])) b.alive = false;
  return g;
}

struct MoleculeDecoration {
  std::vector<int64_t> bond_num;  // by bond id, numerator over L
  std::vector<int64_t> atom_kv;   // by atom id, numerator over L
  std::vector<double> atom_beta;  // by atom id
  int L = 1;
  double T = 1.0;
};

// Gamma_v = sum over incident bonds of zeta * omega(k_l), with zeta +1
// on outgoing and -1 on incoming bonds; self-loops cancel exactly.
inline double gamma_v(const Molecule& m, const MoleculeDecoration& d, int v,
                      double sigma) {
  double g = 0;
  for (const Bond& b : m.bonds) {
    if (!b.alive) continue;
    double w = omega_of(double(d.bond_num[b.id]) / d.L, sigma);
    if (b.from == v) g += w;
    if (b.to == v) g -= w;
  }
  return g;
}

inline int64_t conservation_sum(const Molecule& m, const MoleculeDecoration& d,
                                int v) {
  int64_t s = 0;
  for (const Bond& b : m.bonds) {
    if (!b.alive) continue;
    if (b.from == v) s += d.bond_num[b.id];
    if (b.to == v) s -= d.bond_num[b.id];
  }
  return s;
}

// An atom is degenerate when two incident bonds of opposite direction
// carry the same value; a self-loop supplies both directions at once.
inline bool atom_degenerate(const Molecule& m, const MoleculeDecoration& d,
                            int v) {
  std::vector<int64_t> in, out;
  for (const Bond& b : m.bonds) {
    if (!b.alive) continue;
    if (b.from == v) out.push_back(d.bond_num[b.id]);
    if (b.to == v) in.push_back(d.bond_num[b.id]);
  }
  for (int64_t a : in)
    for (int64_t b : out)
      if (a == b) return true;
  return false;
}

inline bool atom_fully_degenerate(const Molecule& m,
                                  const MoleculeDecoration& d, int v) {
  bool first = true;
  int64_t val = 0;
  for (const Bond& b : m.bonds) {
    if (!b.alive || (b.from != v && b.to != v)) continue;
    if (first) {
      val = d.bond_num[b.id];
      first = false;
    } else if (d.bond_num[b.id] != val) {
      return false;
    }
  }
  return !first;
}

struct StructureReport {
  int V = 0, E = 0, F = 0, chi = 0;
  bool connected = false;
  std::vector<int> degree_hist;  // index = degree
  std::vector<int> bridge_ids;
  std::vector<int> degenerate_atoms;
  std::vector<int> fully_degenerate;
};

inline StructureReport structure_report(
    const Molecule& m, const MoleculeDecoration* dec = nullptr) {
  StructureReport r;
  r.V = m.atom_count();
  r.E = m.bond_count();
  r.F = m.components();
  r.chi = r.E - r.V + r.F;
  r.connected = r.F <= 1;
  r.degree_hist.assign(5, 0);
  for (int v = 0; v < m.atom_ids(); v++) {
    if (!m.atom_alive[v]) continue;
    int d = m.degree(v);
    if (d >= int(r.degree_hist.size())) r.degree_hist.resize(d + 1, 0);
    r.degree_hist[d]++;
  }
  r.bridge_ids = m.bridges();
  if (dec) {
    for (int v = 0; v < m.atom_ids(); v++) {
      if (!m.atom_alive[v]) continue;
      if (atom_degenerate(m, *dec, v)) r.degenerate_atoms.push_back(v);
      if (atom_fully_degenerate(m, *dec, v)) r.fully_degenerate.push_back(v);
    }
  }
  return r;
}

// Moves a couple decoration onto the bonds: every bond takes the value
// of its carrier nodes. Both carriers must agree, and the induced atom
// data must satisfy the conservation law and the degree case table.
inline MoleculeDecoration decoration_transfer(const Molecule& m,
                                              const Decoration& dec,
                                              double T = 1.0) {
  MoleculeDecoration d;
  d.L = dec.L;
  d.T = T;
  d.bond_num.assign(m.bonds.size(), 0);
  for (const Bond& b : m.bonds) {
    if (!b.alive) continue;
    int64_t vf = dec.val[b.carrier_from.tree][b.carrier_from.node];
    int64_t vt = dec.val[b.carrier_to.tree][b.carrier_to.node];
    if (vf != vt)
      throw theory_violation("transfer: bond value differs between carriers");
    d.bond_num[b.id] = vf;
  }
  int64_t k = dec.root_num();
  d.atom_kv.assign(m.atom_ids(), 0);
  d.atom_beta.assign(m.atom_ids(), 0.0);
  for (int v = 0; v < m.atom_ids(); v++) {
    if (!m.atom_alive[v]) continue;
    int od = m.out_degree(v), id = m.in_degree(v);
    int64_t kv = 0;
    if (od + id == 3) kv = od == 2 ? k : -k;
    d.atom_kv[v] = kv;
    if (conservation_sum(m, d, v) != kv)
      throw theory_violation("transfer: atom conservation broke");
  }
  return d;
}

// Checks the transferred frequency sums against the couple's resonance
// factors: degree 2 gives 0, degree 4 gives -zeta*Omega, degree 3 gives
// -zeta*Omega plus omega(k) on two-out atoms and minus omega(k) on
// two-in atoms.
inline void verify_transfer_gamma(const Molecule& m, const Couple& c,
                                  const Decoration& dec,
                                  const MoleculeDecoration& d, double sigma,
                                  double tol = 1e-9) {
  double wk = omega_of(double(dec.root_num()) / dec.L, sigma);
  for (int v = 0; v < m.atom_ids(); v++) {
    if (!m.atom_alive[v]) continue;
    LeafRef nd = m.atom_node[v];
    auto [om, eps] =
        local_factors(dec, c.tree(nd.tree), nd.tree, nd.node, sigma);
    (void)eps;
    double zeta = c.tree(nd.tree).nodes[nd.node].sign;
    double expect;
    int od = m.out_degree(v), id = m.in_degree(v);
    if (od + id == 2) expect = 0.0;
    else if (od + id == 4) expect = -zeta * om;
    else if (od == 2 && id == 1) expect = -zeta * om + wk;
    else expect = -zeta * om - wk;
    double got = gamma_v(m, d, v, sigma);
    if (std::abs(got - expect) > tol)
      throw theory_violation("transfer: frequency table mismatch");
  }
}

// Rebuilds the couple decoration from bond values; the root value must
// be supplied because pairings with a trivial-tree root carry no bond.
inline Decoration invert_transfer(const Molecule& m, const Couple& c,
                                  const MoleculeDecoration& d, int64_t k_num) {
  Decoration dec;
  dec.L = d.L;
  dec.val[0].assign(c.plus.nodes.size(), 0);
  dec.val[1].assign(c.minus.nodes.size(), 0);
  for (const Bond& b : m.bonds) {
    if (!b.alive || b.label != BondLabel::LP) continue;
    dec.val[b.carrier_from.tree][b.carrier_from.node] = d.bond_num[b.id];
    dec.val[b.carrier_to.tree][b.carrier_to.node] = d.bond_num[b.id];
  }
  for (auto& [a, b] : c.pairing)
    if (a.node == 0 || b.node == 0) {
      dec.val[a.tree][a.node] = k_num;
      dec.val[b.tree][b.node] = k_num;
    }
  detail::fill_internal(c.plus, dec.val[0], 0);
  detail::fill_internal(c.minus, dec.val[1], 0);
  if (dec.val[0][0] != k_num || dec.val[1][0] != k_num)
    throw theory_violation("invert_transfer: root value mismatch");
  for (const Bond& b : m.bonds) {
    if (!b.alive) continue;
    if (dec.val[b.carrier_from.tree][b.carrier_from.node] != d.bond_num[b.id])
      throw theory_violation("invert_transfer: bond value round trip failed");
  }
  return dec;
}

struct MolCountOptions {
  bool strict_window = true;  // |Gamma - beta| < 1/T, else <= 1/T
  bool require_nondegenerate = false;
  bool validate_small_boxes = false;  // counting side conditions on boxes
  std::vector<int> stem_exempt;       // atoms freed from the two-small rule
};

// Exact count of molecule decorations: bond values in Z_L, conservation
// at every atom with k_v from the degree table, per-atom frequency
// windows when beta data is present, and radius-1 boxes around the
// given centers. Free bonds are the complement of a spanning forest
// plus the self-loops, and every free bond needs a box. Derived bonds
// are solved and tested as soon as their dependencies are fixed.
inline int64_t count_molecule_decorations(
    const Molecule& m, int64_t k_num, const std::vector<double>& beta,
    const std::map<int, int64_t>& box, double D, double T, int L, double sigma,
    const MolCountOptions& opt = {}) {
  if (L > 32) throw resource_error("molecule count: L above 32");
  if (!beta.empty() && int(beta.size()) < m.atom_ids())
    throw usage_error("molecule count: beta must cover all atoms");
  std::vector<int> alive_bonds;
  for (const Bond& b : m.bonds)
    if (b.alive) alive_bonds.push_back(b.id);
  for (auto& [id, c0] : box) {
    (void)c0;
    if (id < 0 || id >= int(m.bonds.size()))
      throw usage_error("molecule count: box on unknown bond id");
  }

  if (opt.validate_small_boxes) {
    int64_t dnum = int64_t(D * L + 1e-9);
    for (int id : alive_bonds) {
      auto it = box.find(id);
      if (m.bonds[id].label == BondLabel::LP &&
          (it == box.end() || std::abs(it->second) > dnum))
        throw domain_error("molecule count: LP bond needs a box within D");
    }
    for (int v = 0; v < m.atom_ids(); v++) {
      if (!m.atom_alive[v]) continue;
      if (std::count(opt.stem_exempt.begin(), opt.stem_exempt.end(), v))
        continue;
      int small = 0;
      for (int id : alive_bonds) {
        const Bond& b = m.bonds[id];
        if (b.from != v && b.to != v) continue;
        auto it = box.find(id);
        if (it != box.end() && std::abs(it->second) <= dnum) small++;
      }
      if (small < 2)
        throw domain_error(
            "molecule count: atom needs two bonds boxed within D");
    }
  }

  // free bonds: self-loops and the complement of a spanning forest
  std::vector<int> uf(m.atom_ids());
  for (int i = 0; i < int(uf.size()); i++) uf[i] = i;
  std::function<int(int)> find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<int> free_bonds;
  for (int id : alive_bonds) {
    const Bond& b = m.bonds[id];
    int ra = find(b.from), rb = find(b.to);
    if (ra != rb) uf[ra] = rb;
    else free_bonds.push_back(id);
  }
  if (int(free_bonds.size()) > 5)
    throw resource_error("molecule count: more than 5 free bonds");
  for (int id : free_bonds)
    if (!box.count(id))
      throw domain_error("molecule count: free bond without a box");

  std::vector<int64_t> kv(m.atom_ids(), 0);
  for (int v = 0; v < m.atom_ids(); v++) {
    if (!m.atom_alive[v]) continue;
    int d = m.degree(v), od = m.out_degree(v);
    if (d == 3) kv[v] = od == 2 ? k_num : -k_num;
    else if (d != 2 && d != 4)
      throw domain_error("molecule count: atom degree outside {2,3,4}");
  }

  int nfree = int(free_bonds.size());
  std::vector<int> free_slot(m.bonds.size(), -1);
  for (int i = 0; i < nfree; i++) free_slot[free_bonds[i]] = i;

  // depth after which a bond's value is known: free bonds when their
  // slot is assigned, derived bonds when all inputs of their solving
  // atom are known
  struct Step {
    int bond = -1;
    int zeta = 1;
    int64_t kv = 0;
    int64_t lo = 0, hi = 0;
    bool boxed = false;
    std::vector<std::pair<int, int>> dep;  // (bond id, sign at atom)
  };
  std::vector<int> resolved_at(m.bonds.size(), -1);
  for (int id : free_bonds) resolved_at[id] = free_slot[id] + 1;
  std::vector<char> known(m.bonds.size(), 0);
  for (int id : free_bonds) known[id] = 1;
  for (int id : alive_bonds)
    if (m.bonds[id].self_loop()) known[id] = 1;
  std::vector<Step> steps;
  std::vector<char> atom_used(m.atom_ids(), 0);
  for (bool progress = true; progress;) {
    progress = false;
    for (int v = 0; v < m.atom_ids(); v++) {
      if (!m.atom_alive[v] || atom_used[v]) continue;
      int unknown = -1, cnt = 0;
      for (int id : alive_bonds) {
        const Bond& b = m.bonds[id];
        if (known[id] || b.self_loop()) continue;
        if (b.from == v || b.to == v) {
          unknown = id;
          cnt++;
        }
      }
      if (cnt != 1) continue;
      Step s;
      s.bond = unknown;
      s.zeta = m.bonds[unknown].from == v ? +1 : -1;
      s.kv = kv[v];
      int depth = 0;
      for (int id : alive_bonds) {
        const Bond& b = m.bonds[id];
        if (id == unknown || b.self_loop()) continue;
        int sg = 0;
        if (b.from == v) sg += 1;
        if (b.to == v) sg -= 1;
        if (sg == 0) continue;
        s.dep.push_back({id, sg});
        depth = std::max(depth, resolved_at[id]);
      }
      auto it = box.find(unknown);
      if (it != box.end()) {
        s.boxed = true;
        s.lo = it->second - L;
        s.hi = it->second + L;
      }
      resolved_at[unknown] = depth;
      known[unknown] = 1;
      atom_used[v] = 1;
      steps.push_back(s);
      progress = true;
    }
  }
  for (int id : alive_bonds)
    if (!known[id])
      throw theory_violation("molecule count: elimination failed");

  // per-atom checks grouped by the depth at which they become testable
  struct AtomCheck {
    int64_t kv = 0;
    bool window = false;
    double beta_v = 0;
    std::vector<std::pair<int, int>> inc;  // non-loop (bond id, sign)
  };
  std::vector<std::vector<Step>> steps_at(nfree + 1);
  for (const Step& s : steps) steps_at[resolved_at[s.bond]].push_back(s);
  std::vector<std::vector<AtomCheck>> checks_at(nfree + 1);
  for (int v = 0; v < m.atom_ids(); v++) {
    if (!m.atom_alive[v]) continue;
    AtomCheck ac;
    ac.kv = kv[v];
    if (!beta.empty()) {
      ac.window = true;
      ac.beta_v = beta[v];
    }
    bool has_loop = false;
    int depth = 0;
    for (int id : alive_bonds) {
      const Bond& b = m.bonds[id];
      if (b.from != v && b.to != v) continue;
      if (b.self_loop()) {
        has_loop = true;
        continue;
      }
      ac.inc.push_back({id, b.from == v ? +1 : -1});
      depth = std::max(depth, resolved_at[id]);
    }
    if (opt.require_nondegenerate && has_loop) return 0;
    checks_at[depth].push_back(ac);
  }

  double window = 1.0 / T;
  std::vector<int64_t> val(m.bonds.size(), 0);
  int64_t count = 0;
  std::function<void(int)> rec = [&](int depth) {
    for (const Step& s : steps_at[depth]) {
      int64_t acc = 0;
      for (auto& [id, sg] : s.dep) acc += sg * val[id];
      int64_t x = s.zeta * (s.kv - acc);
      if (s.boxed && (x < s.lo || x > s.hi)) return;
      val[s.bond] = x;
    }
    for (const AtomCheck& ac : checks_at[depth]) {
      int64_t acc = 0;
      for (auto& [id, sg] : ac.inc) acc += sg * val[id];
      if (acc != ac.kv) return;
      if (ac.window) {
        double g = 0;
        for (auto& [id, sg] : ac.inc)
          g += sg * omega_of(double(val[id]) / L, sigma);
        double dev = std::abs(g - ac.beta_v);
        if (opt.strict_window ? dev >= window : dev > window) return;
      }
      if (opt.require_nondegenerate) {
        for (auto& [i1, s1] : ac.inc) {
          if (s1 != +1) continue;
          for (auto& [i2, s2] : ac.inc)
            if (s2 == -1 && val[i2] == val[i1]) return;
        }
      }
    }
    if (depth == nfree) {
      count++;
      return;
    }
    int id = free_bonds[depth];
    int64_t c0 = box.at(id);
    for (int64_t x = c0 - L; x <= c0 + L; x++) {
      val[id] = x;
      rec(depth + 1);
    }
  };
  rec(0);
  return count;
}

inline double decoration_count_bound(int n, int L, double T, double D,
                                     double sigma, double theta, double C) {
  return std::pow(C, n) * std::pow(double(L), n * (1.0 + theta)) *
         std::pow(T, -n / 5.0 - 3.0 / 5.0) * std::pow(D, n * (2.0 - sigma));
}

// True when the molecule avoids both closed triangle patterns: three
// pairwise joined atoms each carrying a double bond out of the
// triangle, and a triangle whose one side is a triple bond with a
// double bond leaving the opposite corner.
inline bool forbidden_triangle_check(const Molecule& m) {
  std::vector<int> atoms;
  for (int v = 0; v < m.atom_ids(); v++)
    if (m.atom_alive[v]) atoms.push_back(v);
  auto double_out = [&](int v, int x1, int x2, int x3) {
    for (int w : atoms)
      if (w != x1 && w != x2 && w != x3 && m.multiplicity(v, w) >= 2)
        return true;
    return false;
  };
  for (int a : atoms)
    for (int b : atoms) {
      if (b == a) continue;
      for (int c : atoms) {
        if (c == a || c == b) continue;
        int ab = m.multiplicity(a, b), bc = m.multiplicity(b, c),
            ca = m.multiplicity(c, a);
        if (ab >= 1 && bc >= 1 && ca >= 1 && double_out(a, a, b, c) &&
            double_out(b, a, b, c) && double_out(c, a, b, c))
          return false;
        if (bc >= 3 && ab >= 1 && ca >= 1 && double_out(a, a, b, c))
          return false;
      }
    }
  return true;
}

}  // namespace wk
