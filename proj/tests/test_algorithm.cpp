#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "chain_fixtures.hpp"
#include "wavekin/algorithm.hpp"
#include "wavekin/couples.hpp"

using namespace wk;

namespace {

std::vector<int> trace_kinds(const AlgorithmResult& r) {
  std::vector<int> out;
  for (const OperationRecord& rec : r.trace) out.push_back(rec.kind);
  return out;
}

std::vector<int> trace_atoms(const AlgorithmResult& r) {
  std::vector<int> out;
  for (const OperationRecord& rec : r.trace) out.push_back(rec.atom);
  return out;
}

bool same_trace(const AlgorithmResult& a, const AlgorithmResult& b) {
  if (a.trace.size() != b.trace.size()) return false;
  for (size_t i = 0; i < a.trace.size(); i++) {
    const OperationRecord &x = a.trace[i], &y = b.trace[i];
    if (x.kind != y.kind || x.atom != y.atom || x.bonds != y.bonds ||
        x.node != y.node || x.subscript != y.subscript ||
        x.sub_case != y.sub_case)
      return false;
  }
  return true;
}

bool strict_eligible(const Molecule& m) {
  for (const Bond& b : m.bonds)
    if (b.alive && b.self_loop()) return false;
  int d3 = 0;
  for (int v = 0; v < m.atom_ids(); v++) {
    if (!m.atom_alive[v]) continue;
    int d = m.degree(v);
    if (d == 3) d3++;
    else if (d != 4) return false;
  }
  if (d3 != 2) return false;
  for (const ChainObject& o : classify_chain_objects(m))
    if (o.q() > 1) return false;
  return true;
}

Molecule two_atom_molecule(int mult) {
  Molecule m;
  m.add_atom({0, 0});
  m.add_atom({0, 1});
  for (int i = 0; i < mult; i++) {
    if (i % 2 == 0) m.add_bond(0, 1, BondLabel::LP, {0, 0}, {0, 1});
    else m.add_bond(1, 0, BondLabel::LP, {0, 1}, {0, 0});
  }
  return m;
}

}  // namespace

TEST_CASE("operation classes, characteristic steps, and jump targets") {
  CHECK(count_class(1) == CountClass::Bridge);
  CHECK(count_class(9) == CountClass::Sole);
  CHECK(count_class(10) == CountClass::SelfLoop);
  for (int k : {2, 3, 4}) CHECK(count_class(k) == CountClass::ThreeVector);
  for (int k : {0, 5, 6, 7, 8}) CHECK(count_class(k) == CountClass::TwoVector);
  CHECK_THROWS_AS(count_class(11), usage_error);
  CHECK_THROWS_AS(count_class(-1), usage_error);

  CHECK(class_delta_chi(CountClass::Bridge) == 0);
  CHECK(class_delta_chi(CountClass::Sole) == 0);
  CHECK(class_delta_chi(CountClass::TwoVector) == -1);
  CHECK(class_delta_chi(CountClass::SelfLoop) == -1);
  CHECK(class_delta_chi(CountClass::ThreeVector) == -2);

  std::vector<int> targets = {0, 0, 1, 0, 1, 1, 1, 2, 1, 0, 0};
  for (int k = 0; k <= 10; k++) CHECK(jump_target(k) == targets[k]);

  double L = 16, T = 4, D = 2, sigma = 1.5, theta = 0.25;
  for (CountClass c :
       {CountClass::Bridge, CountClass::Sole, CountClass::SelfLoop})
    CHECK(counting_cost(c, L, T, D, sigma, theta) == 1.0);
  CHECK(counting_cost(CountClass::TwoVector, L, T, D, sigma, theta) == L);
  CHECK_THAT(counting_cost(CountClass::ThreeVector, L, T, D, sigma, theta),
             Catch::Matchers::WithinRel(
                 std::pow(L, 2.25) / T * std::pow(D, 0.5), 1e-12));
}

TEST_CASE("tiny molecules reduce to the pinned traces") {
  SECTION("one atom, no bonds") {
    Molecule m;
    m.add_atom({0, 0});
    CHECK_THROWS_AS(run_algorithm(m), domain_error);
    AlgorithmResult r = run_algorithm(m, {.relaxed = true});
    CHECK(trace_kinds(r) == std::vector<int>{9});
    CHECK(r.counts.m1 == 1);
    CHECK(r.counts.m0 + r.counts.m2 + r.counts.m3 + r.counts.m4 == 0);
    REQUIRE(r.tree.nodes.size() == 1);
    CHECK(r.tree.nodes.at(1).recs ==
          std::vector<std::pair<int, int>>{{9, 1}});
  }
  SECTION("one atom with a self-loop") {
    Molecule m;
    m.add_atom({0, 0});
    m.add_bond(0, 0, BondLabel::LP, {0, 0}, {0, 0});
    CHECK_THROWS_AS(run_algorithm(m), domain_error);
    AlgorithmResult r = run_algorithm(m, {.relaxed = true});
    CHECK(trace_kinds(r) == std::vector<int>{10});
    CHECK(r.counts.m4 == 1);
    CHECK(r.start_min_degree == 2);
    CHECK_THROWS_AS(verify_count_identities(r.counts, 1, false, true),
                    theory_violation);
  }
  SECTION("two atoms joined by a triple bond") {
    Molecule m = two_atom_molecule(3);
    AlgorithmResult r = run_algorithm(m);
    CHECK(trace_kinds(r) == std::vector<int>{2, 9});
    CHECK(trace_atoms(r) == std::vector<int>{0, 1});
    CHECK(r.tree.nodes.at(1).recs ==
          std::vector<std::pair<int, int>>{{2, 1}, {9, 2}});
    CHECK(r.counts.m3 == 1);
    CHECK(r.counts.m1 == 1);
    CountIdentityReport rep = verify_count_identities(r.counts, 2, true);
    CHECK(rep.bonds_identity);
    CHECK(rep.atoms_identity);
    CHECK(rep.steps_identity);
    CHECK(rep.bridge_bound);
    CHECK(rep.two_vector_bound);
  }
  SECTION("two atoms joined by one single bond") {
    Molecule m = two_atom_molecule(1);
    CHECK_THROWS_AS(run_algorithm(m), domain_error);
    AlgorithmResult r = run_algorithm(m, {.relaxed = true});
    CHECK(trace_kinds(r) == std::vector<int>{1, 9, 9});
    CHECK(trace_atoms(r) == std::vector<int>{-1, 0, 1});
    // the bond points 0 -> 1, so its head 1 lands in the first child
    CHECK(r.trace[1].node == 3);
    CHECK(r.trace[2].node == 2);
    CHECK(r.tree.nodes.at(2).recs ==
          std::vector<std::pair<int, int>>{{1, 0}, {9, 1}});
    CHECK(r.tree.nodes.at(3).recs ==
          std::vector<std::pair<int, int>>{{1, 0}, {9, 1}});
    CHECK(r.counts.m0 == 1);
    CHECK(r.counts.m1 == 2);
    // one bridge, two leaves: more tuples go unmapped than leaves alone
    PhiReport pr = verify_phi(r.tree);
    CHECK(pr.well_defined);
    CHECK(pr.missed == 3);
    CHECK(pr.leaves == 2);
  }
  SECTION("degree-2 atom hanging off a triple bond") {
    Molecule m;
    for (int i = 0; i < 3; i++) m.add_atom({0, i});
    m.add_bond(0, 1, BondLabel::LP, {0, 0}, {0, 1});
    m.add_bond(2, 0, BondLabel::LP, {0, 2}, {0, 0});
    m.add_bond(1, 2, BondLabel::LP, {0, 1}, {0, 2});
    m.add_bond(2, 1, BondLabel::LP, {0, 2}, {0, 1});
    m.add_bond(1, 2, BondLabel::LP, {0, 1}, {0, 2});
    AlgorithmResult r = run_algorithm(m, {.relaxed = true});
    CHECK(trace_kinds(r) == std::vector<int>{7, 2, 9});
    CHECK(r.counts.m2 == 1);
    CHECK(r.counts.m3 == 1);
    CHECK(r.counts.m1 == 1);
    CHECK(r.start_min_degree == 2);
    CountIdentityReport rep =
        verify_count_identities(r.counts, 3, false, false);
    CHECK(rep.bonds_identity);
    CHECK(!rep.bound_checked);
    CHECK_THROWS_AS(verify_count_identities(r.counts, 3, false, true),
                    theory_violation);
    // the first record is a two-vector with nothing mappable before it
    CHECK(!verify_phi(r.tree).well_defined);
  }
  SECTION("self-loop beside a double bond") {
    Molecule m;
    m.add_atom({0, 0});
    m.add_atom({0, 1});
    m.add_bond(0, 0, BondLabel::LP, {0, 0}, {0, 0});
    m.add_bond(0, 1, BondLabel::LP, {0, 0}, {0, 1});
    m.add_bond(1, 0, BondLabel::LP, {0, 1}, {0, 0});
    AlgorithmResult r = run_algorithm(m, {.relaxed = true});
    CHECK(trace_kinds(r) == std::vector<int>{0, 10});
    CHECK(trace_atoms(r) == std::vector<int>{1, 0});
    CHECK(r.counts.m2 == 1);
    CHECK(r.counts.m4 == 1);
    verify_count_identities(r.counts, 2, false, false);
  }
}

TEST_CASE("twelve-atom reduction lands on the pinned operation tree") {
  Molecule m = fix::make_grid_molecule();
  REQUIRE(strict_eligible(m));
  AlgorithmResult r = run_algorithm(m);

  CHECK(trace_kinds(r) ==
        std::vector<int>{3, 0, 6, 3, 5, 1, 0, 6, 3, 5, 1, 9, 9, 9});
  CHECK(trace_atoms(r) ==
        std::vector<int>{0, 9, 1, 2, 3, -1, 4, 5, 6, 7, -1, 8, 10, 11});
  CHECK(r.trace[4].sub_case == 2);
  CHECK(r.trace[9].sub_case == 2);
  CHECK(r.trace[5].bonds == std::vector<int>{16});
  CHECK(r.trace[5].node == 1);
  CHECK(r.trace[10].bonds == std::vector<int>{20});
  CHECK(r.trace[10].node == 3);

  std::set<int> ids;
  for (auto& [id, node] : r.tree.nodes) ids.insert(id);
  CHECK(ids == std::set<int>{1, 2, 3, 6, 7});
  using Recs = std::vector<std::pair<int, int>>;
  CHECK(r.tree.nodes.at(1).recs ==
        Recs{{3, 1}, {0, 2}, {6, 3}, {3, 4}, {5, 5}, {1, 6}});
  CHECK(r.tree.nodes.at(2).recs == Recs{{1, 0}, {9, 1}});
  CHECK(r.tree.nodes.at(3).recs ==
        Recs{{1, 0}, {0, 1}, {6, 2}, {3, 3}, {5, 4}, {1, 5}});
  CHECK(r.tree.nodes.at(6).recs == Recs{{1, 0}, {9, 1}});
  CHECK(r.tree.nodes.at(7).recs == Recs{{1, 0}, {9, 1}});
  CHECK(r.tree.nodes.at(1).child == std::array<int, 2>{2, 3});
  CHECK(r.tree.nodes.at(3).child == std::array<int, 2>{6, 7});
  std::vector<int> lv = r.tree.leaves();
  CHECK(lv == std::vector<int>{2, 6, 7});

  CHECK(r.counts.m0 == 2);
  CHECK(r.counts.m1 == 3);
  CHECK(r.counts.m2 == 6);
  CHECK(r.counts.m3 == 3);
  CHECK(r.counts.m4 == 0);
  CHECK(r.counts.m2 == 3 * (r.counts.m3 - 1));
  verify_count_identities(r.counts, 12, true);

  AlgorithmResult relaxed = run_algorithm(m, {.relaxed = true});
  CHECK(same_trace(r, relaxed));
}

TEST_CASE("jump scan matches the full scan") {
  auto both = [](const Molecule& m, TieBreak tb, bool relaxed) {
    AlgorithmResult full =
        run_algorithm(m, {.tie = tb, .relaxed = relaxed, .jump_scan = false});
    AlgorithmResult jump =
        run_algorithm(m, {.tie = tb, .relaxed = relaxed, .jump_scan = true});
    REQUIRE(same_trace(full, jump));
    return full;
  };
  both(fix::make_grid_molecule(), TieBreak::lowest(), false);
  both(fix::make_repeat_molecule(1), TieBreak::lowest(), false);
  both(fix::make_repeat_molecule(3), TieBreak::lowest(), false);
  both(two_atom_molecule(3), TieBreak::lowest(), false);
  for (uint64_t s = 1; s <= 10; s++)
    both(fix::make_grid_molecule(), TieBreak::randomized(s), false);
}

TEST_CASE("repeat family saturates the two-vector bound") {
  for (int r = 1; r <= 3; r++) {
    Molecule m = fix::make_repeat_molecule(r);
    REQUIRE(strict_eligible(m));
    AlgorithmResult res = run_algorithm(m);
    INFO("r = " << r);
    CHECK(res.counts.m0 == r);
    CHECK(res.counts.m1 == r + 1);
    CHECK(res.counts.m2 == 3 * r);
    CHECK(res.counts.m3 == r + 1);
    CHECK(res.counts.m4 == 0);
    CHECK(res.counts.m2 == 3 * (res.counts.m3 - 1));
    verify_count_identities(res.counts, 2 + 5 * r, true);
  }
  AlgorithmResult r1 = run_algorithm(fix::make_repeat_molecule(1));
  CHECK(trace_kinds(r1) == std::vector<int>{3, 0, 6, 3, 5, 1, 9, 9});
  CHECK(trace_atoms(r1) == std::vector<int>{0, 5, 1, 2, 3, -1, 4, 6});
}

TEST_CASE("random tie-breaks preserve the count identities") {
  Molecule grid = fix::make_grid_molecule();
  std::set<std::array<int, 4>> seen;
  for (uint64_t s = 0; s < 50; s++) {
    AlgorithmResult r =
        run_algorithm(grid, {.tie = TieBreak::randomized(s)});
    verify_count_identities(r.counts, 12, true);
    seen.insert({r.counts.m0, r.counts.m1, r.counts.m2, r.counts.m3});
  }
  CHECK(!seen.empty());
  for (uint64_t s = 0; s < 10; s++) {
    AlgorithmResult r = run_algorithm(fix::make_repeat_molecule(1),
                                      {.tie = TieBreak::randomized(s)});
    verify_count_identities(r.counts, 7, true);
  }
}

TEST_CASE("strict runs reject out-of-scope molecules") {
  SECTION("disconnected") {
    Molecule m;
    m.add_atom({0, 0});
    m.add_atom({0, 1});
    CHECK_THROWS_WITH(run_algorithm(m),
                      Catch::Matchers::ContainsSubstring("connected"));
  }
  SECTION("empty") {
    Molecule m;
    CHECK_THROWS_AS(run_algorithm(m, {.relaxed = true}), domain_error);
  }
  SECTION("chains of double bonds survive") {
    Molecule m = build_molecule(fix::make_chain_couple(2));
    CHECK_THROWS_WITH(run_algorithm(m),
                      Catch::Matchers::ContainsSubstring("chain"));
  }
  SECTION("self-loop") {
    Molecule m = build_molecule(fix::make_pseudo_couple(2));
    CHECK_THROWS_WITH(run_algorithm(m),
                      Catch::Matchers::ContainsSubstring("relaxed"));
  }
}

TEST_CASE("fabricated counts trip the identity checks") {
  OperationCounts c;
  c.m0 = 1;
  c.m1 = 1;
  CHECK_THROWS_WITH(verify_count_identities(c, 2, false, false),
                    Catch::Matchers::ContainsSubstring("bond total"));
  OperationCounts rel;
  rel.m4 = 1;
  CHECK_THROWS_WITH(verify_count_identities(rel, 1, true),
                    Catch::Matchers::ContainsSubstring("strict"));
  OperationCounts fig;
  fig.m0 = 2;
  fig.m1 = 3;
  fig.m2 = 6;
  fig.m3 = 3;
  CHECK_THROWS_WITH(verify_count_identities(fig, 13, true),
                    Catch::Matchers::ContainsSubstring("bond total"));
}

TEST_CASE("every small preprocessed couple reduces cleanly") {
  int strict_seen = 0, relaxed_seen = 0;
  uint64_t seed = 0;
  auto drive = [&](const Couple& c) {
    PreprocessResult pre = preprocess(c);
    if (pre.couple.order() == 0) return;
    Molecule m = build_molecule(pre.couple);
    CHECK(forbidden_triangle_check(m));
    bool strict = strict_eligible(m);
    (strict ? strict_seen : relaxed_seen)++;
    AlgorithmOptions opt{.relaxed = !strict};
    AlgorithmResult full = run_algorithm(m, opt);
    opt.jump_scan = true;
    AlgorithmResult jump = run_algorithm(m, opt);
    REQUIRE(same_trace(full, jump));
    int v = m.atom_count();
    bool applies = full.start_min_degree >= 3;
    verify_count_identities(full.counts, v, strict, applies);
    TupleSets ts = build_operation_tuples(full.tree);
    CHECK(int(ts.t3.size()) == full.counts.m3 + 3 * full.counts.m0);
    if (applies) {
      PhiReport pr = verify_phi(full.tree);
      CHECK(pr.well_defined);
      CHECK(pr.injective);
      CHECK(pr.same_node);
      // at least one miss per leaf; the surplus is exactly the slack
      // left in the two-vector bound
      CHECK(pr.missed >= pr.leaves);
      CHECK(pr.missed - pr.leaves ==
            3 * (full.counts.m3 - 1) + 2 * full.counts.m4 - full.counts.m2);
    }
    AlgorithmResult rnd = run_algorithm(
        m, {.tie = TieBreak::randomized(++seed), .relaxed = !strict});
    verify_count_identities(rnd.counts, v, strict,
                            rnd.start_min_degree >= 3);
  };
  for (int n = 1; n <= 4; n++) for_each_couple(n, drive);
  int idx = 0;
  for_each_couple(5, [&](const Couple& c) {
    if (idx++ % 97 == 0) drive(c);
  });
  CHECK(strict_seen > 0);
  CHECK(relaxed_seen > 0);
}
