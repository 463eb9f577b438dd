#include <doctest.h>

#include "twlab/grid.hpp"

using namespace twlab;

TEST_CASE("children bisect an interval in order") {
  Grid g(1, 3, {0.0, 0.0}, 1.0);
  const auto ch = g.children(g.root());
  REQUIRE(ch.size() == 2);
  CHECK(g.box(ch[0]).lo[0] == 0.0);
  CHECK(g.box(ch[0]).hi[0] == 0.5);
  CHECK(g.box(ch[1]).lo[0] == 0.5);
  CHECK(g.box(ch[1]).hi[0] == 1.0);
}

TEST_CASE("children of the unit square are the four quadrants in lex order") {
  Grid g(2, 2, {0.0, 0.0}, 1.0);
  const auto ch = g.children(g.root());
  REQUIRE(ch.size() == 4);
  // lex over (axis0 offset, axis1 offset): (0,0), (0,1), (1,0), (1,1)
  CHECK(g.box(ch[0]).lo == Point{0.0, 0.0});
  CHECK(g.box(ch[1]).lo == Point{0.0, 0.5});
  CHECK(g.box(ch[2]).lo == Point{0.5, 0.0});
  CHECK(g.box(ch[3]).lo == Point{0.5, 0.5});
}

TEST_CASE("leaf cubes have no children") {
  Grid g(1, 2, {0.0, 0.0}, 1.0);
  const Cube leaf{2, {3, 0}};
  CHECK_THROWS_AS(g.children(leaf), config_error);
}

TEST_CASE("child volumes sum to the parent volume") {
  Grid g(2, 4, {-1.0, 2.0}, 3.0);
  for (const Cube& c : g.all_cubes()) {
    if (g.is_leaf(c)) continue;
    double sum = 0.0;
    for (const Cube& ch : g.children(c)) sum += g.box(ch).volume(2);
    CHECK(sum == doctest::Approx(g.box(c).volume(2)).epsilon(1e-15));
  }
}

TEST_CASE("any two cubes are nested or disjoint") {
  Grid g(1, 4, {0.0, 0.0}, 1.0);
  const auto cubes = g.all_cubes();
  for (const Cube& a : cubes)
    for (const Cube& b : cubes) {
      const Box ba = g.box(a), bb = g.box(b);
      const bool nested = g.contains(a, b) || g.contains(b, a);
      const bool disjoint = ba.disjoint(bb, 1);
      CHECK((nested || disjoint));
    }
}

TEST_CASE("deep embedding: boundary contact fails") {
  Grid g(1, 5, {0.0, 0.0}, 1.0);
  // J = [0, 1/8) touches the child boundary point 0 of I = [0,1)
  const Cube J{3, {0, 0}};
  CHECK_FALSE(is_deeply_embedded(g, J, g.root(), 2, 0.5));
}

TEST_CASE("deep embedding: J equal to I fails") {
  Grid g(1, 4, {0.0, 0.0}, 1.0);
  CHECK_FALSE(is_deeply_embedded(g, g.root(), g.root(), 1, 0.5));
}

TEST_CASE("deep embedding: direct evaluation of both inequalities") {
  Grid g(1, 4, {0.0, 0.0}, 1.0);
  // J = [3/8, 1/2), I = [0,1), r = 2, eps = 1/4.
  // ell(J) = 1/8 <= 2^-2: ok.  Child boundaries of I: {0, 1/2, 1}.
  // dist(J, {0,1/2,1}) = 0 (J's closure touches 1/2), so embedding fails.
  const Cube J{3, {3, 0}};
  CHECK_FALSE(is_deeply_embedded(g, J, g.root(), 2, 0.25));
  // J' = [1/4+1/8, 1/4+2/8) x ... pick J'' = [5/16, 6/16): dist to {0,1/2,1}
  // is 1/8... evaluate directly: need >= 2 (1/16)^eps (1)^(1-eps).
  const Cube J2{4, {5, 0}};  // [5/16, 6/16)
  const double d = 0.5 - 6.0 / 16.0;  // 1/8
  const double need = 2.0 * std::pow(1.0 / 16.0, 0.25);
  REQUIRE(d < need);  // 0.125 < 2 * 0.5 = 1: fails
  CHECK_FALSE(is_deeply_embedded(g, J2, g.root(), 2, 0.25));
  // A genuinely embedded pair at higher depth: J3 at depth 4 in [0,1),
  // eps = 0.25 needs dist >= 2 * (1/16)^{1/4} = 1.0: impossible inside [0,1).
  // With eps = 0.9: need = 2 * (1/16)^{0.9} = 0.165; J3 = [7/16, 8/16) has
  // dist 0 to 1/2; J4 = [4/16, 5/16) has dist min(1/4, 3/16) = 3/16 >= 0.165.
  const Cube J4{4, {4, 0}};
  const double need2 = 2.0 * std::pow(1.0 / 16.0, 0.9);
  REQUIRE(3.0 / 16.0 >= need2);
  CHECK(is_deeply_embedded(g, J4, g.root(), 2, 0.9));
}

TEST_CASE("goodness: root and depth-1 cubes") {
  Grid g(1, 5, {0.0, 0.0}, 1.0);
  GoodnessConfig cfg;
  cfg.r = 2;
  cfg.eps = 0.5;
  cfg.tau = 3;
  cfg.rho = 6;
  CHECK(is_good(g, g.root(), cfg));
  CHECK(is_good(g, Cube{1, {0, 0}}, cfg));  // side-length clause vs the root
  CHECK(is_good(g, Cube{1, {1, 0}}, cfg));
}

TEST_CASE("goodness labeling matches exhaustive definition on a depth-5 grid") {
  Grid g(1, 5, {0.0, 0.0}, 1.0);
  GoodnessConfig cfg;
  cfg.r = 2;
  cfg.eps = 0.5;
  cfg.tau = 3;
  cfg.rho = 6;
  int good = 0;
  for (const Cube& J : g.all_cubes()) {
    bool expect = true;
    for (int lvl = 0; lvl < J.level; ++lvl) {
      const Cube L = g.ancestor(J, lvl);
      const bool size_ok = J.level - L.level <= cfg.r - 1;
      if (!size_ok && !is_deeply_embedded(g, J, L, cfg.r, cfg.eps)) expect = false;
    }
    CHECK(is_good(g, J, cfg) == expect);
    good += expect;
  }
  CHECK(good >= 1);
}

TEST_CASE("goodness is monotone in eps") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  for (double e1 : {0.2, 0.4, 0.6}) {
    const double e2 = e1 + 0.3;
    GoodnessConfig a{2, e1, 3, 6}, b{2, e2, 3, 6};
    for (const Cube& J : g.all_cubes()) {
      if (is_good(g, J, a)) CHECK(is_good(g, J, b));
    }
  }
}

TEST_CASE("goodness config invariants") {
  GoodnessConfig bad{2, 0.5, 2, 6};
  CHECK_THROWS_AS(bad.validate(), config_error);
  GoodnessConfig bad2{2, 0.5, 3, 5};
  CHECK_THROWS_AS(bad2.validate(), config_error);
  GoodnessConfig ok{2, 0.2, 3, 6};
  CHECK_NOTHROW(ok.validate());
  // eps must stay below kappa/(n+kappa-alpha)
  GoodnessConfig tight{2, 0.67, 3, 6};
  CHECK_THROWS_AS(tight.validate_for(1, 2, 0.0), config_error);
  GoodnessConfig fine{2, 0.5, 3, 6};
  CHECK_NOTHROW(fine.validate_for(1, 2, 0.0));
}
