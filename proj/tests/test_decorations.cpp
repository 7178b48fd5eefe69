#include <catch2/catch_amalgamated.hpp>

#include "wavekin/decorations.hpp"

using namespace wk;

// brute force over all leaf assignments, checking the definition directly
static int64_t oracle_count(const Couple& c, int64_t k_num, int L,
                            int64_t bound_num,
                            const DecorationDomain& dom = {}) {
  std::array<const Tree*, 2> tr{&c.plus, &c.minus};
  std::array<std::vector<int>, 2> leaves{c.plus.leaves(), c.minus.leaves()};
  int nl = int(leaves[0].size() + leaves[1].size());
  std::vector<int64_t> a(nl, -bound_num);
  int64_t count = 0;
  auto leaf_at = [&](int i) {
    return i < int(leaves[0].size())
               ? LeafRef{0, leaves[0][i]}
               : LeafRef{1, leaves[1][i - int(leaves[0].size())]};
  };
  auto value_of = [&](LeafRef l) {
    for (int i = 0; i < nl; i++) {
      LeafRef li = leaf_at(i);
      if (li.tree == l.tree && li.node == l.node) return a[i];
    }
    throw usage_error("oracle: unknown leaf");
  };
  // signed bottom-up root value: zeta_n k_n = sum of zeta_child k_child
  std::function<int64_t(const Tree&, int8_t, int)> node_val =
      [&](const Tree& t, int8_t ti, int n) -> int64_t {
    if (t.is_leaf(n)) return value_of(LeafRef{ti, n});
    int64_t acc = 0;
    for (int ch : t.nodes[n].child)
      acc += t.nodes[ch].sign * node_val(t, ti, ch);
    return acc * t.nodes[n].sign;  // zeta in {+-1} so dividing == multiplying
  };
  while (true) {
    bool ok = true;
    for (auto& [x, y] : c.pairing)
      if (value_of(x) != value_of(y)) ok = false;
    if (ok)
      for (auto& [bl, center] : dom.box_centers)
        for (int i = 0; i < nl && ok; i++) {
          LeafRef li = leaf_at(i);
          if (li.tree == bl.tree && li.node == bl.node &&
              std::abs(a[i] - center) > L)
            ok = false;
        }
    if (ok && node_val(c.plus, 0, 0) == k_num && node_val(c.minus, 1, 0) == k_num)
      count++;
    int i = 0;
    while (i < nl && a[i] == bound_num) a[i++] = -bound_num;
    if (i == nl) break;
    a[i]++;
  }
  return count;
}

static Couple couple_of_orders(const std::string& ps, const std::string& ms) {
  Couple c;
  c.plus = tree_from_shape(ps, +1);
  c.minus = tree_from_shape(ms, -1);
  std::vector<LeafRef> plus, minus;
  for (int8_t ti = 0; ti < 2; ti++) {
    const Tree& t = ti ? c.minus : c.plus;
    for (int l : t.leaves())
      (t.nodes[l].sign > 0 ? plus : minus).push_back({ti, l});
  }
  for (size_t i = 0; i < plus.size(); i++)
    c.pairing.push_back({plus[i], minus[i]});
  c.normalize();
  c.check();
  return c;
}

TEST_CASE("local factors") {
  Couple c = couple_of_orders("(ooo)", "o");
  Decoration dec;
  dec.L = 1;
  dec.val[0] = {2, 1, 2, 3};
  dec.val[1] = {2};

  SECTION("sigma = 2 arithmetic") {
    auto [om, eps] = local_factors(dec, c.plus, 0, 0, 2.0);
    CHECK(om == 2.0);  // 1 - 4 + 9 - 4
    CHECK(eps == 1);
  }
  SECTION("all children equal") {
    dec.val[0] = {1, 1, 1, 1};
    auto [om, eps] = local_factors(dec, c.plus, 0, 0, 2.0);
    CHECK(om == 0.0);
    CHECK(eps == -1);
  }
  SECTION("conjugate child collides") {
    dec.val[0] = {3, 1, 1, 3};
    auto [om, eps] = local_factors(dec, c.plus, 0, 0, 2.0);
    CHECK(om == 0.0);
    CHECK(eps == 0);
  }
  SECTION("fractional dispersion") {
    dec.val[0] = {4, 4, 1, 1};
    auto [om, eps] = local_factors(dec, c.plus, 0, 0, 0.5);
    CHECK(std::abs(om) < 1e-15);  // 2 - 2 + 1 - 1
    CHECK(eps == 0);              // k2 = k3
  }
  SECTION("leaf rejected") {
    CHECK_THROWS_AS(local_factors(dec, c.plus, 0, 1, 2.0), usage_error);
  }
}

TEST_CASE("trivial couple has exactly one decoration") {
  auto decs = enumerate_decorations(trivial_couple(), 3, 2);
  REQUIRE(decs.size() == 1);
  CHECK(decs[0].val[0][0] == 3);
  CHECK(decs[0].val[1][0] == 3);
}

TEST_CASE("order-1 counts match the brute-force oracle") {
  DecorationDomain dom;
  dom.value_bound = 1.0;
  for (const Couple& c : enumerate_couples(1)) {
    auto decs = enumerate_decorations(c, 0, 2, dom);
    CHECK(int64_t(decs.size()) == oracle_count(c, 0, 2, 2));
    CHECK(decs.size() == 5);
  }
}

TEST_CASE("order-2 counts match the brute-force oracle") {
  DecorationDomain dom;
  dom.value_bound = 1.0;
  auto couples = enumerate_couples(2);
  for (size_t i = 0; i < couples.size(); i += 9) {
    auto decs = enumerate_decorations(couples[i], 1, 2, dom);
    CHECK(int64_t(decs.size()) == oracle_count(couples[i], 1, 2, 2));
  }
}

TEST_CASE("decorations satisfy conservation, pairing, and boxes") {
  DecorationDomain dom;
  dom.value_bound = 1.5;
  for (const Couple& c : enumerate_couples(2)) {
    for (const Decoration& d : enumerate_decorations(c, 2, 2, dom)) {
      const std::array<const Tree*, 2> tr{&c.plus, &c.minus};
      for (int8_t ti = 0; ti < 2; ti++)
        for (size_t n = 0; n < tr[ti]->nodes.size(); n++) {
          if (tr[ti]->is_leaf(int(n))) continue;
          int64_t acc = 0;
          for (int ch : tr[ti]->nodes[n].child)
            acc += tr[ti]->nodes[ch].sign * d.val[ti][ch];
          CHECK(acc == tr[ti]->nodes[n].sign * d.val[ti][n]);
        }
      for (auto& [x, y] : c.pairing) CHECK(d.at(x) == d.at(y));
      CHECK(d.val[0][0] == 2);
      CHECK(d.val[1][0] == 2);
    }
  }
}

TEST_CASE("boxes restrict and can empty the result") {
  Couple c = enumerate_couples(1)[0];
  LeafRef some_leaf = c.pairing[0].first;

  DecorationDomain dom;
  dom.value_bound = 3.5;
  int64_t base = int64_t(enumerate_decorations(c, 7, 2, dom).size());
  CHECK(base == oracle_count(c, 7, 2, 7));
  CHECK(base > 0);

  dom.box_centers = {{some_leaf, -7}};
  auto decs = enumerate_decorations(c, 7, 2, dom);
  CHECK(int64_t(decs.size()) == oracle_count(c, 7, 2, 7, dom));
  for (const Decoration& d : decs) CHECK(std::abs(d.at(some_leaf) + 7) <= 2);

  dom.box_centers = {{some_leaf, 1000}};
  CHECK(enumerate_decorations(c, 7, 2, dom).empty());
}

TEST_CASE("free-slot guard") {
  Couple c6 = couple_of_orders("(((ooo)oo)oo)", "(((ooo)oo)oo)");
  REQUIRE(c6.order() == 6);
  DecorationDomain dom;
  dom.value_bound = 1.0;
  CHECK_THROWS_AS(enumerate_decorations(c6, 0, 32, dom), resource_error);
}
