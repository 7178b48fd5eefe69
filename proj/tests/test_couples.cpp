#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "wavekin/couples.hpp"
#include "wavekin/flower.hpp"

using namespace wk;

static int64_t catalan3(int n) {
  static std::vector<int64_t> memo{1};
  while (int(memo.size()) <= n) {
    int m = int(memo.size());
    int64_t acc = 0;
    for (int a = 0; a < m; a++)
      for (int b = 0; a + b < m; b++) acc += memo[a] * memo[b] * memo[m - 1 - a - b];
    memo.push_back(acc);
  }
  return memo[n];
}

// matchings are unconstrained beyond opposite signs, so the couple count
// factorizes: (n+1)! matchings for every ordered pair of tree shapes
static int64_t couple_count_oracle(int n) {
  int64_t fact = 1;
  for (int i = 2; i <= n + 1; i++) fact *= i;
  int64_t shapes = 0;
  for (int a = 0; a <= n; a++) shapes += catalan3(a) * catalan3(n - a);
  return fact * shapes;
}

static Couple figure_couple() {
  Couple c;
  c.plus = tree_from_shape("((ooo)(ooo)o)", +1);
  c.minus = tree_from_shape("(oo(ooo))", -1);
  c.pairing = {{{0, 2}, {0, 6}}, {{0, 3}, {1, 2}}, {{0, 4}, {1, 6}},
               {{0, 7}, {1, 4}}, {{0, 8}, {1, 5}}, {{0, 9}, {1, 1}}};
  c.normalize();
  c.check();
  return c;
}

TEST_CASE("couple counts match the matching oracle") {
  CHECK(enumerate_couples(0).size() == 1);
  CHECK(enumerate_couples(1).size() == 4);
  for (int n = 0; n <= 4; n++)
    CHECK(int64_t(enumerate_couples(n).size()) == couple_count_oracle(n));
  for (int n = 5; n <= 6; n++) {
    int64_t cnt = 0;
    for_each_couple(n, [&](const Couple&) { cnt++; });
    CHECK(cnt == couple_count_oracle(n));
  }
  CHECK(couple_count_oracle(5) == 524160);
  CHECK(couple_count_oracle(6) == 19535040);
}

TEST_CASE("guards") {
  CHECK_THROWS_AS(enumerate_couples(5), resource_error);
  int64_t dummy = 0;
  CHECK_THROWS_AS(for_each_couple(7, [&](const Couple&) { dummy++; }),
                  resource_error);
}

TEST_CASE("couple invariants") {
  for (int n = 0; n <= 3; n++) {
    std::set<std::string> keys;
    for_each_couple(n, [&](const Couple& c) {
      c.check();
      CHECK(c.order() == n);
      CHECK(int(c.pairing.size()) == n + 1);
      for (auto& [a, b] : c.pairing) CHECK(c.leaf_sign(a) == -c.leaf_sign(b));
      keys.insert(c.key());
    });
    CHECK(int64_t(keys.size()) == couple_count_oracle(n));
  }
}

TEST_CASE("order-5 enumeration contains the two-tree reference couple") {
  std::string want = figure_couple().key();
  bool found = false;
  for_each_couple(5, [&](const Couple& c) {
    if (!found && c.key() == want) found = true;
  });
  CHECK(found);
}

TEST_CASE("flower structure of the trivial couple") {
  FlowerCouple f = flower_structure(trivial_couple(), LeafRef{0, 0});
  CHECK(f.heightPlus == 0);
  CHECK(f.heightMinus == 0);
  CHECK(f.stemPlus.empty());
  CHECK(f.stemMinus.empty());
  CHECK(f.maxStemSubtreeOrder == 0);
  CHECK(f.admissible_for(0));
}

TEST_CASE("flower structure of the reference couple") {
  Couple c = figure_couple();
  FlowerCouple f = flower_structure(c, LeafRef{0, 9});
  CHECK(f.stemPlus == std::vector<int>{0});
  CHECK(f.heightPlus == 1);
  CHECK(f.flowerMinus == (LeafRef{1, 1}));
  CHECK(f.stemMinus == std::vector<int>{0});
  CHECK(f.heightMinus == 1);
  CHECK(f.maxStemSubtreeOrder == 1);
  CHECK(f.admissible_for(1));
  CHECK_FALSE(f.admissible_for(0));
}

TEST_CASE("flower errors") {
  Couple c = figure_couple();
  // leaf paired within the plus tree
  CHECK_THROWS_AS(flower_structure(c, LeafRef{0, 2}), domain_error);
  // not a leaf / wrong tree
  CHECK_THROWS_AS(flower_structure(c, LeafRef{0, 1}), usage_error);
  CHECK_THROWS_AS(flower_structure(c, LeafRef{1, 1}), usage_error);
}
