#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "wavekin/chains.hpp"
#include "wavekin/molecule.hpp"

namespace wk {

// Reduction operations 0..10. Each removes one atom together with its
// bonds, except 1 which removes a single bridge bond and 9 which
// removes a bare atom. 10 exists only in relaxed runs.
enum class CountClass : int8_t { Bridge, Sole, TwoVector, ThreeVector, SelfLoop };

inline CountClass count_class(int kind) {
  switch (kind) {
    case 1: return CountClass::Bridge;
    case 9: return CountClass::Sole;
    case 10: return CountClass::SelfLoop;
    case 2:
    case 3:
    case 4: return CountClass::ThreeVector;
    case 0:
    case 5:
    case 6:
    case 7:
    case 8: return CountClass::TwoVector;
    default: throw usage_error("count_class: kind outside 0..10");
  }
}

inline int class_delta_chi(CountClass c) {
  switch (c) {
    case CountClass::Bridge:
    case CountClass::Sole: return 0;
    case CountClass::TwoVector:
    case CountClass::SelfLoop: return -1;
    case CountClass::ThreeVector: return -2;
  }
  return 0;
}

// Per-operation cost unit of a decoration count.
inline double counting_cost(CountClass c, double L, double T, double D,
                            double sigma, double theta) {
  switch (c) {
    case CountClass::Bridge:
    case CountClass::Sole:
    case CountClass::SelfLoop: return 1.0;
    case CountClass::TwoVector: return L;
    case CountClass::ThreeVector:
      return std::pow(L, 2.0 + theta) / T * std::pow(D, 2.0 - sigma);
  }
  return 1.0;
}

// Where the scan resumes after an operation, when running with jumps
// instead of rescanning from 0.
inline int jump_target(int kind) {
  switch (kind) {
    case 2:
    case 4:
    case 5:
    case 6:
    case 8: return 1;
    case 7: return 2;
    default: return 0;  // 0, 1, 3, 9, 10
  }
}

struct OperationRecord {
  int kind = -1;
  int subscript = 0;
  int node = 1;  // operation-tree node, doubling as component id
  int atom = -1;
  std::vector<int> bonds;
  int sub_case = 0;  // operation 5 only: 1..4 for the four patterns
  CountClass cls = CountClass::Sole;
  int dchi = 0;
};

struct OpNode {
  int id = 1;
  std::vector<std::pair<int, int>> recs;  // (kind, subscript) in order
  std::array<int, 2> child{-1, -1};
};

struct OperationTree {
  std::map<int, OpNode> nodes;  // keyed by id; root is 1; children 2n, 2n+1

  bool is_leaf(int id) const {
    const OpNode& n = nodes.at(id);
    return n.child[0] < 0 && n.child[1] < 0;
  }
  std::vector<int> leaves() const {
    std::vector<int> out;
    for (auto& [id, n] : nodes)
      if (n.child[0] < 0 && n.child[1] < 0) out.push_back(id);
    return out;
  }
};

struct OperationCounts {
  int m0 = 0, m1 = 0, m2 = 0, m3 = 0, m4 = 0;

  void add(CountClass c) {
    switch (c) {
      case CountClass::Bridge: m0++; break;
      case CountClass::Sole: m1++; break;
      case CountClass::TwoVector: m2++; break;
      case CountClass::ThreeVector: m3++; break;
      case CountClass::SelfLoop: m4++; break;
    }
  }
};

struct TieBreak {
  bool random = false;
  uint64_t seed = 0;

  static TieBreak lowest() { return {}; }
  static TieBreak randomized(uint64_t s) { return {true, s}; }
};

struct AlgorithmOptions {
  TieBreak tie{};
  bool relaxed = false;
  bool jump_scan = false;
};

struct AlgorithmResult {
  OperationTree tree;
  OperationCounts counts;
  std::vector<OperationRecord> trace;
  int start_atoms = 0;
  int start_min_degree = 0;
};

namespace detail {

inline bool atom_has_loop(const Molecule& m, int v) {
  for (const Bond& b : m.bonds)
    if (b.alive && b.self_loop() && b.from == v) return true;
  return false;
}

inline bool double_bond_at(const Molecule& m, int v) {
  for (int w = 0; w < m.atom_ids(); w++)
    if (w != v && m.atom_alive[w] && m.multiplicity(v, w) == 2) return true;
  return false;
}

inline int count_deg2_with_double(const Molecule& m) {
  int c = 0;
  for (int v = 0; v < m.atom_ids(); v++)
    if (m.atom_alive[v] && m.degree(v) == 2 && double_bond_at(m, v)) c++;
  return c;
}

inline int count_soles(const Molecule& m) {
  int c = 0;
  for (int v = 0; v < m.atom_ids(); v++)
    if (m.atom_alive[v] && m.degree(v) == 0) c++;
  return c;
}

// Operation 5 pattern test, in listed order; 0 when none applies.
inline int op5_sub_case(Molecule& m, int v, int u, int w) {
  int muw = m.multiplicity(u, w);
  if (muw == 2) return 1;
  if (muw == 1) {
    int e = -1;
    for (const Bond& b : m.bonds)
      if (b.alive && !b.self_loop() &&
          ((b.from == u && b.to == w) || (b.from == w && b.to == u)))
        e = b.id;
    std::vector<int> cut;
    for (const Bond& b : m.bonds)
      if (b.alive && (b.from == v || b.to == v)) cut.push_back(b.id);
    for (int id : cut) m.bonds[id].alive = false;
    m.atom_alive[v] = 0;
    bool bridge = m.is_bridge(e);
    m.atom_alive[v] = 1;
    for (int id : cut) m.bonds[id].alive = true;
    if (bridge) return 2;
    if (!double_bond_at(m, u) && !double_bond_at(m, w)) return 3;
    return 0;
  }
  if (muw == 0) return 4;
  return 0;
}

// The two distinct single-bond neighbours of a degree-2 atom, if that
// is what its bonds look like.
inline bool two_single_neighbours(const Molecule& m, int v, int& u, int& w) {
  if (m.degree(v) != 2 || atom_has_loop(m, v)) return false;
  std::vector<int> nb;
  for (const Bond& b : m.bonds)
    if (b.alive && (b.from == v || b.to == v)) nb.push_back(b.other(v));
  if (nb.size() != 2 || nb[0] == nb[1]) return false;
  u = nb[0];
  w = nb[1];
  return true;
}

}  // namespace detail

// Runs the prioritized reduction until no atom remains, recording every
// step into a trace and an operation tree. At each step the applicable
// operation with the lowest number runs; jump_scan instead resumes the
// scan at the previous operation's target and must behave identically.
inline AlgorithmResult run_algorithm(const Molecule& m0,
                                     const AlgorithmOptions& opt = {}) {
  Molecule m = m0;
  m.check();
  if (m.atom_count() == 0)
    throw domain_error("algorithm: molecule has no atoms");
  if (m.components() != 1)
    throw domain_error("algorithm: molecule must be connected");
  if (!opt.relaxed) {
    for (const Bond& b : m.bonds)
      if (b.alive && b.self_loop())
        throw domain_error("algorithm: self-loop requires a relaxed run");
    int d3 = 0;
    for (int v = 0; v < m.atom_ids(); v++) {
      if (!m.atom_alive[v]) continue;
      int d = m.degree(v);
      if (d == 3) d3++;
      else if (d != 4)
        throw domain_error(
            "algorithm: expected two degree-3 atoms and the rest degree 4");
    }
    if (d3 != 2)
      throw domain_error(
          "algorithm: expected two degree-3 atoms and the rest degree 4");
    for (const ChainObject& o : classify_chain_objects(m))
      if (o.q() > 1)
        throw domain_error("algorithm: double bonds still form a chain");
  }

  AlgorithmResult res;
  res.start_atoms = m.atom_count();
  res.start_min_degree = 1 << 20;
  for (int v = 0; v < m.atom_ids(); v++)
    if (m.atom_alive[v])
      res.start_min_degree = std::min(res.start_min_degree, m.degree(v));

  std::vector<int> comp_node(m.atom_ids(), 1);
  res.tree.nodes[1] = OpNode{1, {}, {-1, -1}};
  std::map<int, int> counter;
  counter[1] = 1;
  std::mt19937_64 rng(opt.tie.seed);
  auto pick = [&](int n) {
    return opt.tie.random ? int(rng() % uint64_t(n)) : 0;
  };

  int max_kind = opt.relaxed ? 10 : 9;
  int scan_from = 0;
  while (m.atom_count() > 0) {
    int kind = -1, atom = -1, bond = -1, sub = 0;
    for (int k = opt.jump_scan ? scan_from : 0; k <= max_kind && kind < 0;
         k++) {
      if (k == 1) {
        std::vector<int> br = m.bridges();
        if (!br.empty()) {
          kind = 1;
          bond = br[pick(int(br.size()))];
        }
        continue;
      }
      std::vector<std::pair<int, int>> cand;  // (atom, sub case)
      for (int v = 0; v < m.atom_ids(); v++) {
        if (!m.atom_alive[v]) continue;
        int d = m.degree(v);
        bool loop = detail::atom_has_loop(m, v);
        switch (k) {
          case 0:
            if (d == 2 && !loop && detail::double_bond_at(m, v))
              cand.push_back({v, 0});
            break;
          case 2:
          case 3:
          case 4: {
            if (d != 3 || loop) break;
            int best = 0;
            for (int w = 0; w < m.atom_ids(); w++)
              if (w != v && m.atom_alive[w])
                best = std::max(best, m.multiplicity(v, w));
            if ((k == 2 && best == 3) || (k == 3 && best == 2) ||
                (k == 4 && best == 1))
              cand.push_back({v, 0});
            break;
          }
          case 5:
          case 6:
          case 7:
          case 8: {
            int u, w;
            if (!detail::two_single_neighbours(m, v, u, w)) break;
            int muw = m.multiplicity(u, w);
            if (k == 5) {
              int s = detail::op5_sub_case(m, v, u, w);
              if (s > 0) cand.push_back({v, s});
            } else if (k == 6) {
              if (muw == 1 && (detail::double_bond_at(m, u) !=
                               detail::double_bond_at(m, w)))
                cand.push_back({v, 0});
            } else if (k == 7) {
              if (muw == 3) cand.push_back({v, 0});
            } else {
              if (muw == 1 && detail::double_bond_at(m, u) &&
                  detail::double_bond_at(m, w))
                cand.push_back({v, 0});
            }
            break;
          }
          case 9:
            if (d == 0) cand.push_back({v, 0});
            break;
          case 10: {
            auto inc = m.incident(v);
            if (inc.size() == 1 && m.bonds[inc[0]].self_loop())
              cand.push_back({v, 0});
            break;
          }
          default: break;
        }
      }
      if (!cand.empty()) {
        kind = k;
        auto [a, s] = cand[pick(int(cand.size()))];
        atom = a;
        sub = s;
      }
    }
    if (kind < 0)
      throw theory_violation(
          opt.jump_scan ? "algorithm: jump scan found nothing applicable"
                        : "algorithm: no operation applies");

    int chi_before = m.chi();
    int soles_before = detail::count_soles(m);

    OperationRecord rec;
    rec.kind = kind;
    rec.sub_case = sub;
    rec.cls = count_class(kind);
    rec.dchi = class_delta_chi(rec.cls);

    if (kind == 1) {
      const Bond& b = m.bonds[bond];
      int n = comp_node[b.from];
      rec.node = n;
      rec.subscript = counter[n];
      rec.bonds = {bond};
      res.tree.nodes[n].recs.push_back({1, counter[n]});
      counter[n]++;
      int head = b.to, tail = b.from;
      m.bonds[bond].alive = false;
      std::vector<int> lab;
      m.components(&lab);
      for (int v = 0; v < m.atom_ids(); v++) {
        if (!m.atom_alive[v] || comp_node[v] != n) continue;
        comp_node[v] = lab[v] == lab[head] ? 2 * n : 2 * n + 1;
      }
      (void)tail;
      res.tree.nodes[n].child = {2 * n, 2 * n + 1};
      res.tree.nodes[2 * n] = OpNode{2 * n, {{1, 0}}, {-1, -1}};
      res.tree.nodes[2 * n + 1] = OpNode{2 * n + 1, {{1, 0}}, {-1, -1}};
      counter[2 * n] = counter[2 * n + 1] = 1;
    } else {
      int n = comp_node[atom];
      rec.node = n;
      rec.subscript = counter[n];
      rec.atom = atom;
      rec.bonds = m.incident(atom);
      res.tree.nodes[n].recs.push_back({kind, counter[n]});
      if (kind != 9 && kind != 10) counter[n]++;
      for (int id : rec.bonds) m.bonds[id].alive = false;
      m.atom_alive[atom] = 0;
    }

    if (m.chi() - chi_before != rec.dchi)
      throw theory_violation("algorithm: Euler characteristic step mismatch");
    int d2d = detail::count_deg2_with_double(m);
    if ((kind == 2 || (kind >= 4 && kind <= 10)) && d2d != 0)
      throw theory_violation(
          "algorithm: degree-2 double-bond atom left after the operation");
    if (kind == 3 && d2d > 1)
      throw theory_violation("algorithm: operation 3 made two degree-2 "
                             "double-bond atoms");
    if (kind == 1 && d2d > 2)
      throw theory_violation("algorithm: bridge removal made three degree-2 "
                             "double-bond atoms");
    if (kind == 0 && d2d > 1)
      throw theory_violation("algorithm: operation 0 left two degree-2 "
                             "double-bond atoms");
    if (kind >= 5 && kind <= 8) {
      int odd = 0;
      for (int v = 0; v < m.atom_ids(); v++)
        if (m.atom_alive[v] && comp_node[v] == rec.node &&
            (m.degree(v) == 1 || m.degree(v) == 3))
          odd++;
      if (odd < 2)
        throw theory_violation(
            "algorithm: component lacks two odd-degree atoms after removal");
    }
    int new_soles =
        detail::count_soles(m) - soles_before + (kind == 9 ? 1 : 0);
    if (new_soles > 0 && kind != 1 && kind != 2)
      throw theory_violation("algorithm: only a bridge or triple-bond "
                             "removal may strand a sole atom");
    if (new_soles > (kind == 1 ? 2 : 1))
      throw theory_violation("algorithm: operation stranded too many atoms");

    res.counts.add(rec.cls);
    res.trace.push_back(std::move(rec));
    scan_from = jump_target(kind);
  }

  for (int id : res.tree.leaves()) {
    const auto& r = res.tree.nodes[id].recs;
    bool ok = false;
    if (!r.empty()) {
      int last = r.back().first;
      if (last == 10) {
        ok = opt.relaxed;  // a lone loop atom can be left by most removals
      } else if (last == 9) {
        if (r.size() == 1) ok = opt.relaxed;  // bare one-atom molecule
        else if (r.size() == 2 && r[0] == std::make_pair(1, 0)) ok = true;
        else ok = r[r.size() - 2].first == 2;
      }
    }
    if (!ok)
      throw theory_violation("algorithm: leaf does not close with the "
                             "expected records");
  }
  return res;
}

struct OpTuple {
  int node = 0, k = 0, o = 0;
  auto operator<=>(const OpTuple&) const = default;
};

inline bool tuple_node_descends(int anc, int desc) {
  if (desc <= anc) return false;
  while (desc > anc) desc >>= 1;
  return desc == anc;
}

// Strict partial order: same node with smaller subscript, or an
// ancestor node.
inline bool tuple_before(const OpTuple& a, const OpTuple& b) {
  if (a.node == b.node) return a.k < b.k;
  return tuple_node_descends(a.node, b.node);
}

struct TupleSets {
  std::vector<OpTuple> all, t2, t3;
};

inline bool in_t3(int o) { return o >= 1 && o <= 4; }
inline bool in_t2(int o) { return o == 0 || (o >= 5 && o <= 8); }

inline TupleSets build_operation_tuples(const OperationTree& ot) {
  TupleSets s;
  for (auto& [id, node] : ot.nodes)
    for (auto& [kind, sub] : node.recs) {
      OpTuple t{id, sub, kind};
      s.all.push_back(t);
      if (in_t3(kind)) s.t3.push_back(t);
      if (in_t2(kind)) s.t2.push_back(t);
    }
  return s;
}

namespace detail {

inline int rec_position(const OperationTree& ot, const OpTuple& t) {
  auto it = ot.nodes.find(t.node);
  if (it == ot.nodes.end())
    throw usage_error("operation tuple names an unknown tree node");
  const auto& r = it->second.recs;
  for (int i = 0; i < int(r.size()); i++)
    if (r[i].second == t.k && r[i].first == t.o) return i;
  throw usage_error("operation tuple is not recorded at its node");
}

}  // namespace detail

// The unique tuple directly after t; none for a terminal record. Not
// defined for bridge records, whose successors branch.
inline std::optional<OpTuple> next_tuple(const OperationTree& ot,
                                         const OpTuple& t) {
  if (t.o == 1)
    throw usage_error("next tuple is not defined for a bridge record");
  const auto& r = ot.nodes.at(t.node).recs;
  int p = detail::rec_position(ot, t);
  if (p + 1 >= int(r.size())) return std::nullopt;
  return OpTuple{t.node, r[p + 1].second, r[p + 1].first};
}

inline std::optional<OpTuple> immediately_preceding(const OperationTree& ot,
                                                    const OpTuple& t) {
  int p = detail::rec_position(ot, t);
  if (p > 0) {
    const auto& r = ot.nodes.at(t.node).recs;
    return OpTuple{t.node, r[p - 1].second, r[p - 1].first};
  }
  if (t.node == 1) return std::nullopt;
  int parent = t.node / 2;
  const auto& r = ot.nodes.at(parent).recs;
  return OpTuple{parent, r.back().second, r.back().first};
}

namespace detail {

inline OpTuple latest_t3_before(const OperationTree& ot, const OpTuple& t) {
  int p = rec_position(ot, t);
  for (int node = t.node;;) {
    const auto& r = ot.nodes.at(node).recs;
    for (int i = p - 1; i >= 0; i--)
      if (in_t3(r[i].first)) return OpTuple{node, r[i].second, r[i].first};
    if (node == 1) break;
    node /= 2;
    p = int(ot.nodes.at(node).recs.size());
  }
  throw theory_violation("operation map: no earlier three-vector or bridge "
                         "record");
}

}  // namespace detail

// Sends every two-vector record to a three-vector or bridge record:
// usually the latest one before it, except that a 0-record directly
// followed by a 5-record takes the next one after it, and a 0-record
// directly followed by a 6-record skips ahead past records that sit
// right after a 6.
inline std::map<OpTuple, OpTuple> phi_map(const OperationTree& ot) {
  TupleSets s = build_operation_tuples(ot);
  std::map<OpTuple, OpTuple> phi;
  for (const OpTuple& t : s.t2) {
    const auto& r = ot.nodes.at(t.node).recs;
    int p = detail::rec_position(ot, t);
    if (t.o != 0) {
      phi[t] = detail::latest_t3_before(ot, t);
      continue;
    }
    if (p + 1 >= int(r.size()))
      throw theory_violation("operation map: 0-record closes a node");
    int next_kind = r[p + 1].first;
    if (next_kind < 5 || next_kind > 8) {
      phi[t] = detail::latest_t3_before(ot, t);
    } else if (next_kind == 5) {
      OpTuple got{};
      bool found = false;
      for (int i = p + 1; i < int(r.size()) && !found; i++)
        if (in_t3(r[i].first)) {
          got = {t.node, r[i].second, r[i].first};
          found = true;
        }
      if (!found)
        throw theory_violation("operation map: no later three-vector or "
                               "bridge record");
      phi[t] = got;
    } else if (next_kind == 6) {
      OpTuple got{};
      bool found = false;
      for (int i = p + 1; i < int(r.size()) && !found; i++)
        if (in_t3(r[i].first) && r[i - 1].first != 6) {
          got = {t.node, r[i].second, r[i].first};
          found = true;
        }
      if (!found)
        throw theory_violation("operation map: every later target follows a "
                               "6-record");
      phi[t] = got;
    } else {
      throw theory_violation("operation map: 0-record directly before a 7- "
                             "or 8-record");
    }
  }
  return phi;
}

struct PhiReport {
  bool well_defined = true;
  bool injective = true;
  bool same_node = true;
  int t2 = 0, t3 = 0;
  int missed = 0, leaves = 0;
  std::vector<OpTuple> missed_tuples;
};

inline PhiReport verify_phi(const OperationTree& ot) {
  PhiReport rep;
  TupleSets s = build_operation_tuples(ot);
  rep.t2 = int(s.t2.size());
  rep.t3 = int(s.t3.size());
  rep.leaves = int(ot.leaves().size());
  std::map<OpTuple, OpTuple> phi;
  try {
    phi = phi_map(ot);
  } catch (const theory_violation&) {
    rep.well_defined = false;
    return rep;
  }
  std::set<OpTuple> image;
  for (auto& [from, to] : phi) {
    if (!image.insert(to).second) rep.injective = false;
    if (to.node != from.node) rep.same_node = false;
  }
  for (const OpTuple& t : s.t3)
    if (!image.count(t)) rep.missed_tuples.push_back(t);
  rep.missed = int(rep.missed_tuples.size());
  return rep;
}

struct CountIdentityReport {
  bool bonds_identity = false;    // 3 m3 + 2 m2 + m0 (+ m4) = 2n - 1
  bool atoms_identity = false;    // 2 m3 + m2 (+ m4) = n
  bool steps_identity = false;    // m3 + m2 + m0 = n - 1
  bool bridge_bound = false;      // m0 < m3 (+ m4)
  bool two_vector_bound = false;  // m2 <= 3 (m3 - 1) (+ 2 m4)
  bool bound_checked = true;
};

// Asserts the count identities for a fully consumed molecule of n
// atoms; bound_applies should be false when the starting molecule had
// an atom of degree below 3, where the two-vector bound's pairing
// argument does not run.
inline CountIdentityReport verify_count_identities(
    const OperationCounts& c, int n, bool strict, bool bound_applies = true) {
  CountIdentityReport r;
  if (strict && c.m4 != 0)
    throw theory_violation("counts: self-loop removals in a strict run");
  r.bonds_identity = 3 * c.m3 + 2 * c.m2 + c.m0 + c.m4 == 2 * n - 1;
  r.atoms_identity = 2 * c.m3 + c.m2 + c.m4 == n;
  r.steps_identity = c.m3 + c.m2 + c.m0 == n - 1;
  r.bridge_bound = c.m0 < c.m3 + c.m4;
  if (!r.bonds_identity)
    throw theory_violation("counts: bond total identity failed");
  if (!r.atoms_identity)
    throw theory_violation("counts: atom total identity failed");
  if (!r.steps_identity)
    throw theory_violation("counts: step total identity failed");
  if (!r.bridge_bound)
    throw theory_violation("counts: bridge operations not below "
                           "three-vector ones");
  r.bound_checked = strict || bound_applies;
  if (r.bound_checked) {
    int slack = strict ? 0 : 2 * c.m4;
    r.two_vector_bound = c.m2 <= 3 * (c.m3 - 1) + slack;
    if (!r.two_vector_bound)
      throw theory_violation("counts: two-vector operations exceed the "
                             "three-vector bound");
  }
  return r;
}

}  // namespace wk
