#include <doctest.h>

#include "twlab/measure.hpp"
#include "twlab/rng.hpp"

using namespace twlab;

namespace {
Measure lebesgue(int n, int depth) {
  Grid g(n, depth, {0.0, 0.0}, 1.0);
  return Measure(g, std::vector<double>(g.leaf_count(), 1.0));
}
}  // namespace

TEST_CASE("mass of aligned cubes") {
  Measure mu = lebesgue(1, 4);
  CHECK(mu.mass_box({{0.0, 0.0}, {0.25, 0.0}}) == doctest::Approx(0.25).epsilon(1e-15));
  Grid g(1, 1, {0.0, 0.0}, 1.0);
  std::vector<double> d{2.0, 0.0};
  Measure half(g, d);
  CHECK(half.mass(g.root()) == doctest::Approx(1.0));
}

TEST_CASE("fractional boxes are exact for cell-constant densities") {
  Grid g(1, 3, {0.0, 0.0}, 1.0);
  std::vector<double> d(8);
  for (int i = 0; i < 8; ++i) d[i] = 1.0 + i;
  Measure mu(g, d);
  // integral over [0.3, 0.6]: cells [0.3,0.375)*3, [0.375,0.5)*4, [0.5,0.6)*5
  const double expect = 0.075 * 3 + 0.125 * 4 + 0.1 * 5;
  CHECK(mu.mass_box({{0.3, 0.0}, {0.6, 0.0}}) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("off-lattice aligned query throws") {
  Measure mu = lebesgue(1, 3);
  CHECK_THROWS_AS(mu.mass_aligned({{0.3, 0.0}, {0.5, 0.0}}), config_error);
  CHECK_NOTHROW(mu.mass_aligned({{0.25, 0.0}, {0.5, 0.0}}));
}

TEST_CASE("mass matches naive summation on random measures") {
  Grid g(2, 4, {0.0, 0.0}, 1.0);
  Measure mu = random_doubling(g, 0.2, 7);
  for (const Cube& c : g.all_cubes()) {
    CHECK(mu.mass(c) == doctest::Approx(mu.mass_naive(c)).epsilon(1e-12));
  }
}

TEST_CASE("parent mass equals the sum of child masses exactly") {
  Grid g(1, 8, {0.0, 0.0}, 1.0);
  Measure mu = random_doubling(g, 0.3, 11);
  for (const Cube& c : g.all_cubes()) {
    if (g.is_leaf(c)) continue;
    double s = 0.0;
    for (const Cube& ch : g.children(c)) s += mu.mass(ch);
    CHECK(mu.mass(c) == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("additivity over random disjoint lattice pieces") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  Measure mu = random_doubling(g, 0.25, 3);
  SplitMix64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    // random partition of [0,1) into lattice intervals
    const int m = g.leaves_per_axis();
    std::vector<int> cuts{0, m};
    for (int i = 0; i < 5; ++i) cuts.push_back(static_cast<int>(rng.next_u64() % (m + 1)));
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      Box b{{cuts[i] * g.leaf_side(), 0.0}, {cuts[i + 1] * g.leaf_side(), 0.0}};
      total += mu.mass_box(b);
    }
    CHECK(total == doctest::Approx(mu.total_mass()).epsilon(1e-12));
  }
}

TEST_CASE("doubling constant of Lebesgue measure") {
  CHECK(doubling_stats(lebesgue(1, 5)).c_doub == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(doubling_stats(lebesgue(2, 3)).c_doub == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("non-doubling detection") {
  Grid g(1, 3, {0.0, 0.0}, 1.0);
  std::vector<double> d(8, 0.0);
  d[0] = 1.0;
  d[3] = 1.0;  // zero in the middle: some Q has mass 0 while 2Q does not
  Measure mu(g, d);
  const auto st = doubling_stats(mu);
  CHECK_FALSE(st.doubling);
  CHECK(std::isinf(st.c_doub));
}

TEST_CASE("generated measures are doubling and reproducible") {
  Grid g(1, 8, {0.0, 0.0}, 1.0);
  const Measure a = random_doubling(g, 0.25, 1);
  const Measure b = random_doubling(g, 0.25, 1);
  CHECK(a.densities() == b.densities());  // bit-identical
  const Measure c = random_doubling(g, 0.25, 2);
  CHECK(a.densities() != c.densities());

  const auto st = doubling_stats(a);
  CHECK(std::isfinite(st.c_doub));
  CHECK(st.c_doub >= 1.0);
}

TEST_CASE("beta at the degenerate split gives Lebesgue") {
  Grid g(1, 5, {0.0, 0.0}, 1.0);
  const Measure mu = random_doubling(g, 0.5, 42);
  for (std::int64_t i = 0; i < g.leaf_count(); ++i)
    CHECK(mu.density(i) == doctest::Approx(1.0).epsilon(1e-12));
  Grid g2(2, 3, {0.0, 0.0}, 1.0);
  const Measure mu2 = random_doubling(g2, 0.25, 42);
  for (std::int64_t i = 0; i < g2.leaf_count(); ++i)
    CHECK(mu2.density(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("beta above 2^-n is rejected") {
  Grid g(1, 4, {0.0, 0.0}, 1.0);
  CHECK_THROWS_AS(random_doubling(g, 0.51, 1), config_error);
  Grid g2(2, 3, {0.0, 0.0}, 1.0);
  CHECK_THROWS_AS(random_doubling(g2, 0.3, 1), config_error);
}

TEST_CASE("doubling constant decreases as beta rises on matched seeds") {
  Grid g(1, 7, {0.0, 0.0}, 1.0);
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double beta : {0.2, 0.3, 0.4, 0.45}) {
      const double cd = doubling_stats(random_doubling(g, beta, seed)).c_doub;
      CHECK(cd <= prev * (1.0 + 1e-9));
      prev = cd;
    }
  }
}

TEST_CASE("reverse doubling exponent bounds all sampled shrink ratios") {
  Grid g(1, 7, {0.0, 0.0}, 1.0);
  const Measure mu = random_doubling(g, 0.3, 17);
  const auto st = doubling_stats(mu);
  CHECK(st.theta_rev > 0.0);
  for (const Cube& c : g.all_cubes()) {
    const double mq = mu.mass(c);
    if (mq <= 0.0) continue;
    for (int k = 1; k <= std::min(g.depth(), 6); ++k) {
      const double s = std::ldexp(1.0, -k);
      const double ms = mu.mass_box(g.box(c).dilated(s, 1));
      CHECK(ms <= std::pow(s, st.theta_rev) * mq * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("json round trip") {
  Grid g(2, 3, {0.5, -0.5}, 2.0);
  Measure mu = random_doubling(g, 0.2, 5);
  const std::string text = mu.to_json();
  Measure back = Measure::from_json(text);
  CHECK(back.densities() == mu.densities());
  CHECK(back.grid().root_side() == mu.grid().root_side());
  CHECK_THROWS_AS(Measure::from_json("{\"dimension\":1,\"depth\":2,\"origin\":[0],"
                                     "\"side\":1.0,\"densities\":[1,2,3]}"),
                  config_error);
  CHECK_THROWS_AS(Measure::from_json("{\"dimension\":1,\"depth\":1,\"origin\":[0],"
                                     "\"side\":1.0,\"densities\":[1,-2]}"),
                  config_error);
}
