#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "wavekin/counting.hpp"

using namespace wk;

namespace {

CountingProblem pair_problem(int s2, double a1, double a2, double k,
                             double beta, int L, double T, double sigma,
                             double D) {
  std::vector<TupleEntry> e{{1, +1}, {2, s2}};
  return one_tuple(make_tuple(e, {a1, a2}, k, beta, L, T, sigma, D));
}

CountingProblem triple_problem(int L, double T) {
  return one_tuple(
      make_tuple(parse_tuple_spec("1+,2-,3+"), {0, 0, 0}, 0, 0, L, T, 2, 1));
}

}  // namespace

TEST_CASE("tuple specs parse into signed indices") {
  auto e = parse_tuple_spec("1+,2-,3+");
  REQUIRE(e.size() == 3);
  CHECK(e[0].j == 1);
  CHECK(e[0].sign == +1);
  CHECK(e[1].j == 2);
  CHECK(e[1].sign == -1);
  CHECK(e[2].j == 3);
  CHECK(e[2].sign == +1);

  CHECK(parse_tuple_spec(" 4 - ").size() == 1);
  CHECK_THROWS_AS(parse_tuple_spec(""), usage_error);
  CHECK_THROWS_WITH(parse_tuple_spec("1*,2-"),
                    Catch::Matchers::ContainsSubstring("bad tuple spec"));
  CHECK_THROWS_AS(parse_tuple_spec("+1"), usage_error);
}

TEST_CASE("problems reject malformed input") {
  CHECK_THROWS_WITH(validate_problem(CountingProblem{}),
                    Catch::Matchers::ContainsSubstring("no tuples"));

  auto base = triple_problem(16, 4);

  SECTION("index multiplicity") {
    auto p = base;
    p.tuples[0].entries[1].j = 1;
    CHECK_THROWS_WITH(validate_problem(p), Catch::Matchers::ContainsSubstring(
                                               "repeated index"));
  }
  SECTION("tuple arity") {
    auto p = base;
    p.tuples[0].entries.push_back({4, +1});
    p.tuples[0].centers[4] = 0;
    CHECK_THROWS_WITH(validate_problem(p), Catch::Matchers::ContainsSubstring(
                                               "one to three indices"));
  }
  SECTION("shared parameters") {
    auto p = five_vector_problem(16, 4);
    p.tuples[1].T = 8;
    CHECK_THROWS_WITH(
        validate_problem(p),
        Catch::Matchers::ContainsSubstring("share L, T, sigma and D"));
  }
  SECTION("shared centres") {
    auto p = five_vector_problem(16, 4);
    p.tuples[1].centers[1] = 0.5;
    CHECK_THROWS_WITH(validate_problem(p), Catch::Matchers::ContainsSubstring(
                                               "conflicting centers"));
  }
  SECTION("sign values") {
    auto p = base;
    p.tuples[0].entries[0].sign = 2;
    CHECK_THROWS_AS(validate_problem(p), usage_error);
  }
  SECTION("dispersion range") {
    CHECK_THROWS_WITH(
        count_solutions(pair_problem(-1, 0, 0, 0, 0, 16, 4, 1.0, 1)),
        Catch::Matchers::ContainsSubstring("differ from 1"));
  }
  SECTION("centre list length") {
    CHECK_THROWS_WITH(
        make_tuple(parse_tuple_spec("1+,2-"), {0}, 0, 0, 16, 4, 2, 1),
        Catch::Matchers::ContainsSubstring("one centre per tuple index"));
  }
}

TEST_CASE("centre size rules gate opposite corners") {
  auto p = pair_problem(-1, 5, 5, 0, 0, 16, 4, 2, 1);

  CHECK(count_solutions(p, CenterSizeRule::AtMostTwoLarge) == 33);
  CHECK_THROWS_WITH(
      count_solutions(p, CenterSizeRule::AtLeastTwoSmall),
      Catch::Matchers::ContainsSubstring("fewer than two of k and the centers"));

  auto q = triple_problem(16, 4);
  q.tuples[0].centers = {{1, 5}, {2, 5}, {3, 5}};
  CHECK_THROWS_WITH(
      count_solutions(q, CenterSizeRule::AtMostTwoLarge),
      Catch::Matchers::ContainsSubstring("more than two of k and the centers"));
}

TEST_CASE("pair counts on the diagonal") {
  for (int L : {8, 16, 32, 64}) {
    auto p = pair_problem(-1, 0, 0, 0, 0, L, 4, 2, 1);
    CHECK(count_solutions(p) == 2 * L + 1);
  }

  std::vector<TupleEntry> swapped{{2, +1}, {1, -1}};
  CHECK(count_solutions(one_tuple(
            make_tuple(swapped, {0, 0}, 0, 0, 16, 4, 2, 1))) == 33);

  CHECK(count_solutions(pair_problem(+1, 0, 0, 0, 0, 16, 4, 2, 1)) == 11);
  CHECK(count_solutions(pair_problem(+1, 0, 2, 2, 4.0, 16, 4, 2, 2),
                        CenterSizeRule::AtLeastTwoSmall) == 2);

  CHECK(count_solutions(pair_problem(-1, 0, -4, 0, 0, 16, 4, 2, 4)) == 0);
  CHECK(count_solutions(pair_problem(-1, 0, 0, 0.3, 0, 16, 4, 2, 1)) == 0);
}

TEST_CASE("triple counts against frozen enumerations") {
  CHECK(count_solutions(triple_problem(8, 4)) == 109);
  CHECK(count_solutions(triple_problem(16, 4)) == 401);
  CHECK(count_solutions(triple_problem(32, 4)) == 1565);

  SECTION("counts are invariant under relabelling") {
    auto p = one_tuple(
        make_tuple(parse_tuple_spec("3+,2-,1+"), {0, 0, 0}, 0, 0, 16, 4, 2, 1));
    CHECK(count_solutions(p) == 401);
  }
  SECTION("counts are invariant under global sign flips") {
    auto p = one_tuple(
        make_tuple(parse_tuple_spec("1-,2+,3-"), {0, 0, 0}, 0, 0, 16, 4, 2, 1));
    CHECK(count_solutions(p) == 401);
  }
  SECTION("problem size is the number of distinct indices") {
    CHECK(n_vector(triple_problem(16, 4)) == 3);
    CHECK(n_vector(five_vector_problem(16, 4)) == 5);
  }
}

TEST_CASE("enumeration guard trips before runaway searches") {
  CHECK_THROWS_AS(count_solutions(five_vector_problem(512, 32)),
                  resource_error);
  CHECK_THROWS_WITH(
      count_solutions(five_vector_problem(512, 32)),
      Catch::Matchers::ContainsSubstring("enumeration guard"));
}

TEST_CASE("bound sweep stays within frozen constants") {
  SweepReport rep = verify_vc_bounds(SweepGrid{});

  REQUIRE(rep.records.size() == 717);
  CHECK(rep.skipped == 14);
  CHECK(rep.flagged.empty());

  const BoundFit& two = rep.fits.at("two-vector");
  CHECK_THAT(two.max_ratio, Catch::Matchers::WithinAbs(17.0 / 8.0, 1e-12));
  CHECK_THAT(two.max_ratio_by_L.at(8),
             Catch::Matchers::WithinAbs(17.0 / 8.0, 1e-12));
  CHECK_THAT(two.max_ratio_by_L.at(16),
             Catch::Matchers::WithinAbs(33.0 / 16.0, 1e-12));
  CHECK_THAT(two.max_ratio_by_L.at(32),
             Catch::Matchers::WithinAbs(65.0 / 32.0, 1e-12));
  CHECK_THAT(two.max_ratio_by_L.at(64),
             Catch::Matchers::WithinAbs(129.0 / 64.0, 1e-12));
  CHECK_THAT(two.max_growth, Catch::Matchers::WithinAbs(1.1, 1e-9));

  double lo = two.max_ratio_by_L.at(64), hi = two.max_ratio_by_L.at(8);
  CHECK(hi / lo < 1.2);

  const BoundFit& uni = rep.fits.at("uni-directional");
  for (int L : {8, 16, 32, 64})
    CHECK_THAT(uni.max_ratio_by_L.at(L),
               Catch::Matchers::WithinAbs(1.7677669529663689, 1e-12));
  CHECK(uni.max_growth <= 1.5);

  const BoundFit& gap = rep.fits.at("large-gap");
  CHECK_THAT(gap.max_ratio, Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK(gap.max_growth <= 1.5);

  const BoundFit& three = rep.fits.at("three-vector");
  CHECK_THAT(three.max_ratio, Catch::Matchers::WithinAbs(5.410106, 1e-5));
  CHECK(three.max_ratio_by_L.at(64) < three.max_ratio_by_L.at(8));
  CHECK(three.max_growth <= 1.5);

  const BoundFit& crit = rep.fits.at("three-vector-critical");
  CHECK_THAT(crit.max_ratio_by_L.at(16),
             Catch::Matchers::WithinAbs(401.0 / 64.0, 1e-12));
  CHECK_THAT(crit.max_ratio_by_L.at(64),
             Catch::Matchers::WithinAbs(3865.0 / 512.0, 1e-12));
  CHECK_THAT(crit.max_ratio_by_L.at(256),
             Catch::Matchers::WithinAbs(36501.0 / 4096.0, 1e-12));
  CHECK(crit.max_ratio_by_L.at(16) / std::log(16.0) >
        crit.max_ratio_by_L.at(64) / std::log(64.0));
  CHECK(crit.max_ratio_by_L.at(64) / std::log(64.0) >
        crit.max_ratio_by_L.at(256) / std::log(256.0));

  SECTION("no record beats its family constant") {
    for (const SweepRecord& r : rep.records) {
      double c = rep.fits.at(r.family).max_ratio;
      CHECK(double(r.count) <= c * r.bound * (1.0 + 1e-9));
    }
  }
  SECTION("gap records sit under both envelope arms") {
    int seen = 0;
    for (const SweepRecord& r : rep.records) {
      if (r.family != "large-gap") continue;
      seen++;
      double h = std::min(1.0, std::abs(r.k));
      double arm1 = 2.125 * r.L;
      double arm2 = 2.0 * (r.L / (r.T * h)) * std::pow(r.D, 2.0 - r.sigma);
      CHECK(double(r.count) <= std::min(arm1, arm2) * (1.0 + 1e-9));
    }
    CHECK(seen > 100);
  }
}

TEST_CASE("sweep report serializes to csv") {
  SweepReport rep = verify_vc_bounds(SweepGrid{});
  std::ostringstream os;
  write_sweep_csv(rep, os);
  std::istringstream is(os.str());
  std::string header, first;
  REQUIRE(std::getline(is, header));
  CHECK(header == "problemId,L,T,sigma,D,k,beta,count,bound,ratio");
  REQUIRE(std::getline(is, first));
  CHECK(first == "two-vector/1+2-/T2/s0.5/D1,16,2,0.5,1,0,0,33,16,2.0625");
  int lines = 1;
  std::string line;
  while (std::getline(is, line)) lines++;
  CHECK(lines == 717);
}

TEST_CASE("joint pair problems match the summed reduction") {
  for (auto [L, T] : std::vector<std::pair<int, double>>{{16, 4}, {64, 8}}) {
    CHECK(count_solutions(five_vector_problem(L, T)) ==
          five_vector_count(L, T));
  }
}

TEST_CASE("joint count dominates the box construction") {
  struct Row {
    int L;
    double T;
    int64_t box, count;
    bool enumerated;
  };
  const Row frozen[] = {
      {16, 4, 98, 7869, true},         {64, 8, 3844, 253401, true},
      {128, 8, 31752, 2006257, true},  {256, 16, 129032, 8212481, true},
      {512, 32, 520200, 33241953, false},
  };
  for (const Row& row : frozen) {
    FiveVectorReport r = five_vector_lower_bound(row.L, row.T);
    CHECK(r.box == row.box);
    CHECK(r.count == row.count);
    CHECK(r.enumerated == row.enumerated);
    CHECK(r.count >= r.box);
  }
  CHECK(five_vector_box(256, 16) == 8 * 127 * 127);

  CHECK_THROWS_AS(five_vector_lower_bound(64, 0.5), domain_error);
  CHECK_THROWS_AS(five_vector_lower_bound(64, 64), domain_error);
}

TEST_CASE("joint count scales like a cube over the grid") {
  std::vector<std::pair<int, double>> pts;
  for (int L : {128, 256, 512})
    for (double T : {8.0, 16.0, 32.0}) pts.push_back({L, T});
  ExponentFit f = fit_five_vector_exponents(pts);

  CHECK_THAT(f.l_exp, Catch::Matchers::WithinAbs(2.9912, 5e-3));
  CHECK_THAT(f.t_exp, Catch::Matchers::WithinAbs(-0.9663, 5e-3));
  CHECK(f.l_exp > 2.8);
  CHECK(f.l_exp < 3.2);
  CHECK(f.t_exp > -1.2);
  CHECK(f.t_exp < -0.8);

  SECTION("normalized family counts keep increasing") {
    double prev = 0;
    for (int L : {128, 256, 512}) {
      double T = L / 16.0;
      double norm = double(five_vector_count(L, T)) /
                    (std::pow(double(L), 3.0) * std::pow(T, -1.5));
      CHECK(norm > prev);
      prev = norm;
    }
    CHECK_THAT(prev, Catch::Matchers::WithinRel(44.83339, 1e-4));
  }
  SECTION("a single family cannot pin two exponents") {
    std::vector<std::pair<int, double>> fam{{128, 8}, {256, 16}, {512, 32}};
    CHECK_THROWS_WITH(
        fit_five_vector_exponents(fam),
        Catch::Matchers::ContainsSubstring("degenerate"));
    CHECK_THROWS_AS(fit_five_vector_exponents({{16, 4}, {32, 4}}),
                    usage_error);
  }
}

namespace {

double narrow_gaussian(double u1, double u3) {
  return std::exp(-4.0 * (u1 * u1 + u3 * u3));
}

double wide_gaussian(double u1, double u3) {
  return std::exp(-0.25 * (u1 * u1 + u3 * u3));
}

}  // namespace

TEST_CASE("lattice sum tracks the integral inside the bound") {
  IterateConfig cfg;
  cfg.support = 2.0;
  IterateReport r =
      iterate_sum_vs_integral(0, 64, 8, 2.0, narrow_gaussian, fejer_bump, cfg);

  CHECK_THAT(r.lhs, Catch::Matchers::WithinRel(1178.709504, 1e-8));
  CHECK_THAT(r.rhs, Catch::Matchers::WithinRel(r.lhs, 1e-8));
  CHECK(r.ratio <= 1e-7);
  CHECK(r.f_cut == 0);
  CHECK_THAT(r.R, Catch::Matchers::WithinRel(8.0 * std::pow(64.0, -0.7),
                                             1e-12));
  CHECK(r.discrepancy <= r.bound);
}

TEST_CASE("discrepancy ratio halves when the box doubles") {
  IterateConfig cfg;
  cfg.support = 3.0;
  IterateReport a =
      iterate_sum_vs_integral(0, 64, 8.0, 2.0, wide_gaussian, fejer_bump, cfg);
  IterateReport b = iterate_sum_vs_integral(0, 128, 8.0 * std::sqrt(2.0), 2.0,
                                            wide_gaussian, fejer_bump, cfg);

  CHECK_THAT(a.ratio, Catch::Matchers::WithinRel(5.45306e-4, 1e-3));
  double factor = b.ratio / a.ratio;
  CHECK(factor >= 1.0 / 3.0);
  CHECK(factor <= 0.75);
  CHECK_THAT(factor, Catch::Matchers::WithinAbs(0.5015, 0.01));
}

TEST_CASE("image corrections keep the quadrature convergent") {
  IterateConfig cfg;
  cfg.support = 1.0;
  cfg.f_scale = 2.0;
  auto W = [](double u1, double u3) {
    return std::exp(-(u1 * u1 + u3 * u3) / 0.0625);
  };
  IterateReport r = iterate_sum_vs_integral(0, 8, 4, 2.0, W, fejer_bump, cfg);

  CHECK(r.f_cut == 1);
  CHECK_THAT(r.lhs, Catch::Matchers::WithinRel(10.95321515, 1e-8));
  CHECK(r.ratio <= 1e-6);
}

TEST_CASE("trivial weights and bad input short-circuit") {
  auto zero = [](double, double) { return 0.0; };
  IterateReport r = iterate_sum_vs_integral(0, 64, 8, 2.0, zero, fejer_bump);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
  CHECK(r.discrepancy == 0.0);
  CHECK(r.ratio == 0.0);

  auto one = [](double, double) { return 1.0; };
  auto bad = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(iterate_sum_vs_integral(0, 16, 4, 2.0, one, bad),
                  numeric_error);

  CHECK_THROWS_AS(iterate_sum_vs_integral(0.3, 16, 4, 2.0, one, fejer_bump),
                  usage_error);
  CHECK_THROWS_AS(iterate_sum_vs_integral(0, 0, 4, 2.0, one, fejer_bump),
                  domain_error);
  CHECK_THROWS_AS(iterate_sum_vs_integral(0, 16, -1, 2.0, one, fejer_bump),
                  domain_error);
  CHECK_THROWS_AS(iterate_sum_vs_integral(0, 16, 4, 1.0, one, fejer_bump),
                  domain_error);
}
