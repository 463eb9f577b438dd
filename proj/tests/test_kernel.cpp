#include <doctest.h>

#include "twlab/kernel.hpp"
#include "twlab/rng.hpp"

using namespace twlab;

TEST_CASE("smoothstep endpoints and flat derivatives") {
  for (int order : {1, 2, 3, 4, 5}) {
    CHECK(smoothstep(order, 0.0) == 0.0);
    CHECK(smoothstep(order, 1.0) == 1.0);
    CHECK(smoothstep(order, -2.0) == 0.0);
    CHECK(smoothstep(order, 3.0) == 1.0);
    CHECK(smoothstep(order, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    const double h = 1e-3;
    CHECK(std::abs(smoothstep(order, h) - smoothstep(order, 0.0)) <=
          2.0 * std::pow(h, order + 1) * std::pow(4.0, order + 1));
  }
}

TEST_CASE("truncation window: inner cutoff, plateau, outer cutoff") {
  TruncationSpec t{1.0 / 16, 4.0, 3};
  KernelSpec h = KernelSpec::make(KernelFamily::hilbert, 1);
  CHECK(eval_truncated(h, t, {0.0, 0.0}, {0.05, 0.0}) == 0.0);  // inside delta
  CHECK(eval_truncated(h, t, {0.0, 0.0}, {0.0, 0.0}) == 0.0);   // coincident
  CHECK(eval_truncated(h, t, {0.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(eval_truncated(h, t, {0.0, 0.0}, {9.0, 0.0}) == 0.0);  // beyond 2R
  KernelSpec z = KernelSpec::make(KernelFamily::zero, 1);
  CHECK(eval_truncated(z, t, {0.0, 0.0}, {1.0, 0.0}) == 0.0);
}

TEST_CASE("truncation is C^k at the knots") {
  TruncationSpec t{0.5, 8.0, 3};
  const double h = 1e-3;
  const auto deriv = [&](double x, int order, double step) {
    std::vector<double> v(order + 1);
    for (int i = 0; i <= order; ++i) v[i] = t.eta(x + (i - order * 0.5) * step);
    for (int o = 0; o < order; ++o)
      for (int i = 0; i + 1 < static_cast<int>(v.size()) - o; ++i)
        v[i] = (v[i + 1] - v[i]) / step;
    return v[0];
  };
  for (double knot : {t.delta, 2 * t.delta, t.R, 2 * t.R}) {
    for (int order = 0; order <= t.smooth_order; ++order) {
      const double left = deriv(knot - (order + 2) * h, order, h);
      const double right = deriv(knot + (order + 2) * h, order, h);
      CHECK(std::abs(left - right) <= 1e-6 * std::pow(h, -order));
    }
  }
}

TEST_CASE("antisymmetry of hilbert and riesz kernels") {
  SplitMix64 rng(4);
  KernelSpec h = KernelSpec::make(KernelFamily::hilbert, 1);
  KernelSpec r = KernelSpec::make(KernelFamily::riesz, 2, 0.5, 1);
  for (int i = 0; i < 100; ++i) {
    const Point x{rng.next_in(-1, 1), rng.next_in(-1, 1)};
    const Point y{rng.next_in(-1, 1), rng.next_in(-1, 1)};
    CHECK(h.eval(x, y) == doctest::Approx(-h.eval(y, x)).epsilon(1e-12));
    CHECK(r.eval(x, y) == doctest::Approx(-r.eval(y, x)).epsilon(1e-12));
  }
}

TEST_CASE("size and smoothness ratios for the hilbert kernel are factorials") {
  KernelSpec k = KernelSpec::make(KernelFamily::hilbert, 1);
  TruncationSpec t{1e-3, 100.0, 4};
  std::vector<std::pair<Point, Point>> pairs;
  SplitMix64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const double d = rng.next_in(0.01, 10.0);
    const double x = rng.next_in(-5, 5);
    pairs.push_back({{x, 0.0}, {x + d, 0.0}});
  }
  const auto rep = verify_cz(k, t, pairs, 2);
  CHECK(rep.used == 50);
  CHECK(rep.max_ratio[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.max_ratio[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.max_ratio[2] == doctest::Approx(2.0).epsilon(1e-4));
  for (std::size_t j = 0; j < rep.max_ratio.size(); ++j)
    CHECK(rep.max_ratio[j] <= k.c_cz * 1.01);
}

TEST_CASE("pairs inside the cutoff are skipped and reported") {
  KernelSpec k = KernelSpec::make(KernelFamily::hilbert, 1);
  TruncationSpec t{0.5, 100.0, 3};
  std::vector<std::pair<Point, Point>> pairs{{{0.0, 0.0}, {0.3, 0.0}},
                                             {{0.0, 0.0}, {3.0, 0.0}}};
  const auto rep = verify_cz(k, t, pairs, 1);
  CHECK(rep.skipped == 1);
  CHECK(rep.used == 1);
}

TEST_CASE("riesz finite differences match closed-form gradients") {
  const double alpha = 0.0;
  KernelSpec k = KernelSpec::make(KernelFamily::riesz, 2, alpha, 0);
  TruncationSpec t{1e-4, 1e4, 4};
  const double p = 3.0 - alpha;  // n + 1 - alpha

  // Closed forms for K = r0 |r|^-p with r = y - x.
  const auto d1 = [&](const Point& x, const Point& y, int l) {
    const double r0 = y[0] - x[0], r1 = y[1] - x[1];
    const double rn = std::hypot(r0, r1);
    const double rl = l == 0 ? r0 : r1;
    const double dk = l == 0 ? 1.0 : 0.0;
    return -dk * std::pow(rn, -p) + p * r0 * rl * std::pow(rn, -p - 2);
  };
  const auto d2 = [&](const Point& x, const Point& y, int kk, int l) {
    const double r[2] = {y[0] - x[0], y[1] - x[1]};
    const double rn = std::hypot(r[0], r[1]);
    const double dck = kk == 0 ? 1.0 : 0.0;
    const double dcl = l == 0 ? 1.0 : 0.0;
    const double dkl = kk == l ? 1.0 : 0.0;
    return -p * ((dck * r[l] + dcl * r[kk] + dkl * r[0]) * std::pow(rn, -p - 2) -
                 (p + 2) * r[0] * r[kk] * r[l] * std::pow(rn, -p - 4));
  };

  SplitMix64 rng(12);
  for (int i = 0; i < 40; ++i) {
    Point x{rng.next_in(-2, 2), rng.next_in(-2, 2)};
    Point y{x[0] + rng.next_in(0.2, 3.0), x[1] + rng.next_in(0.2, 3.0)};
    std::vector<std::pair<Point, Point>> one{{x, y}};
    const auto rep = verify_cz(k, t, one, 2);
    const double rn = std::hypot(y[0] - x[0], y[1] - x[1]);
    const double cf0 = std::abs(k.eval(x, y)) * std::pow(rn, 2 - alpha);
    double cf1 = 0.0, cf2 = 0.0;
    for (int l = 0; l < 2; ++l) cf1 = std::max(cf1, std::abs(d1(x, y, l)));
    for (int kk = 0; kk < 2; ++kk)
      for (int l = 0; l < 2; ++l) cf2 = std::max(cf2, std::abs(d2(x, y, kk, l)));
    cf1 *= std::pow(rn, 3 - alpha);
    cf2 *= std::pow(rn, 4 - alpha);
    CHECK(rep.max_ratio[0] == doctest::Approx(cf0).epsilon(1e-10));
    CHECK(rep.max_ratio[1] == doctest::Approx(cf1).epsilon(1e-5));
    CHECK(rep.max_ratio[2] == doctest::Approx(cf2).epsilon(1e-3));
    CHECK(rep.max_ratio[2] <= k.c_cz * 1.01);
  }
}

TEST_CASE("ellipticity constants per family") {
  TruncationSpec t{1e-3, 100.0, 3};
  KernelSpec h = KernelSpec::make(KernelFamily::hilbert, 1);
  CHECK(ellipticity_constant(h, t, 0.01, 50.0, 64) == doctest::Approx(1.0).epsilon(1e-12));
  KernelSpec r = KernelSpec::make(KernelFamily::riesz, 2, 0.5, 1);
  CHECK(ellipticity_constant(r, t, 0.01, 50.0, 64) == doctest::Approx(1.0).epsilon(1e-12));
  KernelSpec f = KernelSpec::make(KernelFamily::fractional, 2, 1.0);
  CHECK(ellipticity_constant(f, t, 0.01, 50.0, 64) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec::make(KernelFamily::hilbert, 2), config_error);
  CHECK_THROWS_AS(KernelSpec::make(KernelFamily::hilbert, 1, 0.5), config_error);
  CHECK_THROWS_AS(KernelSpec::make(KernelFamily::riesz, 2, 2.5), config_error);
  CHECK_THROWS_AS(KernelSpec::make(KernelFamily::riesz, 2, 0.0, 5), config_error);
}
