#include <doctest.h>

#include <set>

#include "twlab/constants.hpp"
#include "twlab/corona.hpp"
#include "twlab/rng.hpp"

using namespace twlab;

namespace {

Measure lebesgue(int n, int depth) {
  Grid g(n, depth, {0.0, 0.0}, 1.0);
  return Measure(g, std::vector<double>(g.leaf_count(), 1.0));
}

// Independent recursion evaluating the stopping triggers literally.
struct OracleCorona {
  std::set<std::int64_t> stops;
  void build(const Grid& g, const Measure& sigma, const Measure& omega,
             const std::vector<double>& f, const CoronaConfig& cfg, const Cube& F) {
    stops.insert(g.cube_id(F));
    double fabsF = 0.0, massF = sigma.mass(F);
    g.for_each_leaf(F, [&](std::int64_t i) { fabsF += std::abs(f[i]) * sigma.leaf_mass(i); });
    const double ef = massF > 0.0 ? fabsF / massF : 0.0;
    const std::function<void(const Cube&)> walk = [&](const Cube& c) {
      const double ms = sigma.mass(c);
      bool trig = false;
      if (ms > 0.0) {
        double fa = 0.0;
        g.for_each_leaf(c, [&](std::int64_t i) { fa += std::abs(f[i]) * sigma.leaf_mass(i); });
        if (ef > 0.0 && fa / ms >= cfg.gamma * ef) trig = true;
        if (!trig) {
          const double p = poisson_tail(sigma, cfg.kappa, cfg.alpha, g.box(c), F);
          if (p * p * omega.mass(c) >= cfg.gamma * ms) trig = true;
        }
      }
      if (trig) {
        build(g, sigma, omega, f, cfg, c);
        return;
      }
      if (!g.is_leaf(c))
        for (const Cube& ch : g.children(c)) walk(ch);
    };
    if (!g.is_leaf(F))
      for (const Cube& ch : g.children(F)) walk(ch);
  }
};

}  // namespace

TEST_CASE("constant data on the Lebesgue pair yields a single corona") {
  Measure leb = lebesgue(1, 6);
  const Grid& g = leb.grid();
  std::vector<double> f(g.leaf_count(), 3.0);
  CoronaTree tree = build_corona(f, leb, leb, {4.0, 2, 0.0});
  CHECK(tree.stops().size() == 1);
  for (const Cube& c : g.all_cubes()) CHECK(tree.corona_of(c) == 0);
}

TEST_CASE("zero omega disables the tail trigger") {
  Grid g(1, 5, {0.0, 0.0}, 1.0);
  Measure sigma = random_doubling(g, 0.3, 3);
  Measure zero(g, std::vector<double>(g.leaf_count(), 0.0));
  std::vector<double> f(g.leaf_count(), 1.0);
  f[7] = 60.0;  // spike
  CoronaTree tree = build_corona(f, sigma, zero, {1.5, 2, 0.0});
  // with omega = 0 every stopping cube must trigger on averages alone
  OracleCorona oracle;
  oracle.build(g, sigma, zero, f, {1.5, 2, 0.0}, g.root());
  std::set<std::int64_t> got;
  for (const auto& st : tree.stops()) got.insert(g.cube_id(st.cube));
  CHECK(got == oracle.stops);
  CHECK(tree.stops().size() > 1);
}

TEST_CASE("spike data produces the oracle's stopping chain") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  Measure sigma = random_doubling(g, 0.3, 9);
  Measure omega = random_doubling(g, 0.3, 10);
  std::vector<double> f(g.leaf_count(), 1.0);
  f[37] = 200.0;
  const CoronaConfig cfg{1.4, 2, 0.0};
  CoronaTree tree = build_corona(f, sigma, omega, cfg);
  OracleCorona oracle;
  oracle.build(g, sigma, omega, f, cfg, g.root());
  std::set<std::int64_t> got;
  for (const auto& st : tree.stops()) got.insert(g.cube_id(st.cube));
  CHECK(got == oracle.stops);
  CHECK(tree.generations() >= 2);
  // the spike's ancestors appear in the stopping set
  bool spike_chain = false;
  for (const auto& st : tree.stops())
    if (st.cube.level == g.depth() && st.cube.idx[0] == 37) spike_chain = true;
  CHECK(spike_chain);
}

TEST_CASE("coronas partition the tree and maximality holds") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  Measure sigma = random_doubling(g, 0.27, 19);
  Measure omega = random_doubling(g, 0.27, 20);
  std::vector<double> f(g.leaf_count());
  SplitMix64 rng(5);
  for (auto& x : f) x = rng.next_in(0.1, 2.0);
  f[11] = 90.0;
  const CoronaConfig cfg{1.6, 2, 0.0};
  CoronaTree tree = build_corona(f, sigma, omega, cfg);
  // partition
  for (const Cube& c : g.all_cubes()) {
    const int s = tree.corona_of(c);
    REQUIRE(s >= 0);
    CHECK(g.contains(tree.stops()[s].cube, c));
    // not below any deeper stopping cube of the same corona
    for (const auto& st : tree.stops())
      if (st.cube != tree.stops()[s].cube && g.contains(tree.stops()[s].cube, st.cube) &&
          g.contains(st.cube, c))
        CHECK(false);
  }
  // maximality: the parent of a stopping cube never triggers inside its corona
  const auto diag = verify_corona(tree, f, sigma, omega,
                                  sqr(pivotal_constant(sigma, omega, 0.0, 2).value));
  CHECK(diag.avg_control_max < 1.0 + 1e-12);
  CHECK(diag.piv_control_max < 1.0 + 1e-12);
  CHECK(diag.first_step_max <= 1.0 + 1e-12);
  CHECK(diag.carleson_max >= 1.0);
  CHECK(diag.quasi_ratio > 0.0);
}

TEST_CASE("single corona diagnostics are trivial") {
  Measure leb = lebesgue(1, 5);
  const Grid& g = leb.grid();
  std::vector<double> f(g.leaf_count(), 2.0);
  CoronaTree tree = build_corona(f, leb, leb, {4.0, 2, 0.0});
  const auto diag = verify_corona(tree, f, leb, leb, 1.0);
  CHECK(diag.carleson_max == doctest::Approx(1.0));
  CHECK(diag.quasi_ratio <= 1.0 + 1e-12);  // Cauchy-Schwarz
}

TEST_CASE("single-corona shifted membership keeps exactly the deep levels") {
  Measure leb = lebesgue(1, 6);
  const Grid& g = leb.grid();
  std::vector<double> f(g.leaf_count(), 1.0);
  CoronaTree tree = build_corona(f, leb, leb, {4.0, 2, 0.0});
  const int tau = 3;
  ShiftedCorona sc = shifted_corona(tree, tau);
  REQUIRE(sc.members.size() == 1);
  for (const Cube& c : g.all_cubes()) {
    const bool member = sc.home[g.cube_id(c)] == 0;
    CHECK(member == (c.level >= tau));
  }
  CHECK(sc.max_overlap <= tau);
}

TEST_CASE("two-generation shifted membership matches the set-algebra oracle") {
  Grid g(1, 6, {0.0, 0.0}, 1.0);
  Measure sigma = random_doubling(g, 0.3, 23);
  Measure omega = random_doubling(g, 0.3, 24);
  std::vector<double> f(g.leaf_count(), 1.0);
  f[11] = 150.0;
  CoronaTree tree = build_corona(f, sigma, omega, {1.4, 2, 0.0});
  REQUIRE(tree.stops().size() > 1);
  const int tau = 2;
  ShiftedCorona sc = shifted_corona(tree, tau);
  CHECK(sc.max_overlap <= tau);
  // oracle: literal set evaluation per stopping cube
  for (std::size_t s = 0; s < tree.stops().size(); ++s) {
    const Cube F = tree.stops()[s].cube;
    std::set<std::int64_t> expect;
    for (const Cube& J : g.all_cubes()) {
      if (!g.contains(F, J)) continue;
      const bool in_ntau_F = J.level < F.level + tau;
      bool member = tree.corona_of(J) == static_cast<int>(s) && !in_ntau_F;
      if (!member) {
        for (int t : tree.children_of(static_cast<int>(s))) {
          const Cube Fp = tree.stops()[t].cube;
          if (g.contains(Fp, J) && J.level < Fp.level + tau && !in_ntau_F) member = true;
        }
      }
      if (member) expect.insert(g.cube_id(J));
    }
    std::set<std::int64_t> got;
    for (const Cube& J : sc.members[s]) got.insert(g.cube_id(J));
    CHECK(got == expect);
  }
  // the chain rule gives the same home assignment
  for (const Cube& J : g.all_cubes()) {
    int expect_home = -1;
    // walk stopping ancestors of J from the corona upward
    int s = tree.corona_of(J);
    while (s >= 0) {
      const Cube F = tree.stops()[s].cube;
      if (J.level >= F.level + tau) {
        expect_home = s;
        break;
      }
      s = tree.stops()[s].parent;
    }
    CHECK(sc.home[g.cube_id(J)] == expect_home);
  }
}

TEST_CASE("gamma below one is rejected and zero-mass roots fail") {
  Grid g(1, 3, {0.0, 0.0}, 1.0);
  Measure sigma = random_doubling(g, 0.3, 1);
  std::vector<double> f(g.leaf_count(), 1.0);
  CHECK_THROWS_AS(build_corona(f, sigma, sigma, {1.0, 2, 0.0}), config_error);
  Measure zero(g, std::vector<double>(g.leaf_count(), 0.0));
  CHECK_THROWS_AS(build_corona(f, zero, sigma, {2.0, 2, 0.0}), config_error);
}
