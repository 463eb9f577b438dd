#include "twlab/measure.hpp"

#include <algorithm>
#include <cmath>

#include "twlab/rng.hpp"
#include <json.hpp>

namespace twlab {

Measure::Measure(Grid grid, std::vector<double> leaf_densities)
    : grid_(grid), density_(std::move(leaf_densities)) {
  if (static_cast<std::int64_t>(density_.size()) != grid_.leaf_count())
    throw config_error("measure: density vector length must equal leaf count");
  for (double d : density_)
    if (!(d >= 0.0) || !std::isfinite(d))
      throw config_error("measure: densities must be finite and nonnegative");

  leaf_volume_ = std::pow(grid_.leaf_side(), grid_.dim());
  const int m = grid_.leaves_per_axis();
  if (grid_.dim() == 1) {
    sat_.assign(m + 1, 0.0);
    for (int i = 0; i < m; ++i) sat_[i + 1] = sat_[i] + density_[i] * leaf_volume_;
    total_ = sat_[m];
  } else {
    sat_.assign(static_cast<std::size_t>(m + 1) * (m + 1), 0.0);
    const auto at = [m](std::vector<double>& s, int i, int j) -> double& {
      return s[static_cast<std::size_t>(i) * (m + 1) + j];
    };
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        at(sat_, i + 1, j + 1) = density_[static_cast<std::size_t>(i) * m + j] * leaf_volume_ +
                                 at(sat_, i, j + 1) + at(sat_, i + 1, j) - at(sat_, i, j);
    total_ = sat_.back();
  }
}

double Measure::prefix_at(double u0, double u1) const {
  const int m = grid_.leaves_per_axis();
  const auto clamp01 = [m](double u) { return std::min(std::max(u, 0.0), static_cast<double>(m)); };
  u0 = clamp01(u0);
  if (grid_.dim() == 1) {
    const int i = std::min(static_cast<int>(std::floor(u0)), m - 1);
    const double t = u0 - i;
    return sat_[i] + t * (sat_[i + 1] - sat_[i]);
  }
  u1 = clamp01(u1);
  const int i = std::min(static_cast<int>(std::floor(u0)), m - 1);
  const int j = std::min(static_cast<int>(std::floor(u1)), m - 1);
  const double s = u0 - i, t = u1 - j;
  const auto at = [this, m](int a, int b) {
    return sat_[static_cast<std::size_t>(a) * (m + 1) + b];
  };
  return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) +
         (1 - s) * t * at(i, j + 1) + s * t * at(i + 1, j + 1);
}

double Measure::mass(const Cube& c) const {
  const auto r = grid_.leaf_span(c);
  if (grid_.dim() == 1) return sat_[r.hi[0]] - sat_[r.lo[0]];
  const int m = grid_.leaves_per_axis();
  const auto at = [this, m](int a, int b) {
    return sat_[static_cast<std::size_t>(a) * (m + 1) + b];
  };
  return at(r.hi[0], r.hi[1]) - at(r.lo[0], r.hi[1]) - at(r.hi[0], r.lo[1]) + at(r.lo[0], r.lo[1]);
}

double Measure::mass_box(const Box& b, bool* clipped) const {
  const double h = grid_.leaf_side();
  const Point& o = grid_.origin();
  const int m = grid_.leaves_per_axis();
  double u[2][2] = {{0.0, 1.0}, {0.0, 1.0}};  // index-space lo/hi per axis
  bool clip = false;
  for (int k = 0; k < grid_.dim(); ++k) {
    u[k][0] = (b.lo[k] - o[k]) / h;
    u[k][1] = (b.hi[k] - o[k]) / h;
    if (u[k][0] < -1e-12 || u[k][1] > m + 1e-12) clip = true;
    if (u[k][1] < u[k][0]) u[k][1] = u[k][0];
  }
  if (clipped) *clipped = clip;
  if (grid_.dim() == 1) return prefix_at(u[0][1], 0) - prefix_at(u[0][0], 0);
  return prefix_at(u[0][1], u[1][1]) - prefix_at(u[0][0], u[1][1]) -
         prefix_at(u[0][1], u[1][0]) + prefix_at(u[0][0], u[1][0]);
}

double Measure::mass_aligned(const Box& b) const {
  const double h = grid_.leaf_side();
  const Point& o = grid_.origin();
  for (int k = 0; k < grid_.dim(); ++k) {
    for (double v : {b.lo[k], b.hi[k]}) {
      const double u = (v - o[k]) / h;
      if (std::abs(u - std::round(u)) > 1e-9)
        throw config_error("measure: off-lattice cube");
    }
  }
  return mass_box(b);
}

double Measure::mass_naive(const Cube& c) const {
  double s = 0.0;
  grid_.for_each_leaf(c, [&](std::int64_t id) { s += density_[id] * leaf_volume_; });
  return s;
}

std::string Measure::to_json(int indent) const {
  nlohmann::json j;
  j["dimension"] = grid_.dim();
  j["depth"] = grid_.depth();
  j["origin"] = std::vector<double>(grid_.origin().begin(), grid_.origin().begin() + grid_.dim());
  j["side"] = grid_.root_side();
  j["densities"] = density_;
  return j.dump(indent);
}

Measure Measure::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const int n = j.at("dimension").get<int>();
  const int depth = j.at("depth").get<int>();
  auto orig = j.at("origin").get<std::vector<double>>();
  if (static_cast<int>(orig.size()) != n)
    throw config_error("measure: origin length must equal dimension");
  Point o{0.0, 0.0};
  std::copy(orig.begin(), orig.end(), o.begin());
  Grid g(n, depth, o, j.at("side").get<double>());
  auto dens = j.at("densities").get<std::vector<double>>();
  if (static_cast<std::int64_t>(dens.size()) != g.leaf_count())
    throw config_error("measure: densities length must be 2^(n*depth)");
  return Measure(g, std::move(dens));
}

MeasureStats doubling_stats(const Measure& mu) {
  const Grid& g = mu.grid();
  const int n = g.dim();
  const int m = g.leaves_per_axis();
  const double h = g.leaf_side();
  const Point& o = g.origin();
  if (!(mu.total_mass() > 0.0)) throw config_error("doubling_stats: measure has zero mass");

  MeasureStats st;
  st.c_doub = 0.0;
  const auto consider = [&](const Box& q) {
    const Box q2 = q.dilated(2.0, n);
    const Box rb = g.root_box();
    for (int k = 0; k < n; ++k)
      if (q2.lo[k] < rb.lo[k] - 1e-12 || q2.hi[k] > rb.hi[k] + 1e-12) return;
    const double mq = mu.mass_box(q);
    const double mq2 = mu.mass_box(q2);
    if (mq <= 0.0) {
      if (mq2 > 0.0) {
        st.doubling = false;
        st.c_doub = std::numeric_limits<double>::infinity();
        st.argmax = q;
      }
      return;
    }
    const double ratio = mq2 / mq;
    if (ratio > st.c_doub) {
      st.c_doub = ratio;
      st.argmax = q;
    }
  };

  if (n == 1) {
    for (int size = 1; size <= m; ++size)
      for (int pos = 0; pos + size <= m; ++pos) {
        Box q;
        q.lo = {o[0] + pos * h, 0.0};
        q.hi = {o[0] + (pos + size) * h, 0.0};
        consider(q);
      }
  } else {
    for (int size = 1; size <= m; ++size)
      for (int p0 = 0; p0 + size <= m; ++p0)
        for (int p1 = 0; p1 + size <= m; ++p1) {
          Box q;
          q.lo = {o[0] + p0 * h, o[1] + p1 * h};
          q.hi = {o[0] + (p0 + size) * h, o[1] + (p1 + size) * h};
          consider(q);
        }
  }

  // Reverse doubling exponent fitted over dyadic shrink factors on all tree
  // cubes: the smallest log-ratio slope makes mass(sQ) <= s^theta mass(Q)
  // hold at every sampled pair.
  double theta = std::numeric_limits<double>::infinity();
  std::int64_t samples = 0;
  for (const Cube& c : g.all_cubes()) {
    const double mq = mu.mass(c);
    if (mq <= 0.0) continue;
    const Box q = g.box(c);
    for (int k = 1; k <= std::min(g.depth(), 6); ++k) {
      const double s = std::ldexp(1.0, -k);
      const double ms = mu.mass_box(q.dilated(s, n));
      ++samples;
      if (ms <= 0.0) continue;  // ratio 0 constrains nothing
      theta = std::min(theta, std::log(ms / mq) / std::log(s));
    }
  }
  st.theta_rev = std::isfinite(theta) ? std::max(theta, 0.0) : 0.0;
  st.samples = samples;
  return st;
}

Measure random_doubling(const Grid& grid, double beta, std::uint64_t seed) {
  const int n = grid.dim();
  const int nc = 1 << n;
  const double flat = 1.0 / nc;
  if (!(beta > 0.0) || beta > flat + 1e-15)
    throw config_error("random_doubling: beta must lie in (0, 2^-n]");

  // Masses by level; level l holds 2^(n l) entries in cube-id order.
  std::vector<double> cur{1.0};
  SplitMix64 root_rng(seed);
  for (int l = 0; l < grid.depth(); ++l) {
    const auto cubes = grid.level_cubes(l);
    std::vector<double> next(cubes.size() * nc, 0.0);
    for (std::size_t c = 0; c < cubes.size(); ++c) {
      SplitMix64 rng = root_rng.split(static_cast<std::uint64_t>(grid.cube_id(cubes[c])));
      double u[4], usum = 0.0;
      for (int t = 0; t < nc; ++t) {
        u[t] = rng.next_unit();
        usum += u[t];
      }
      const double spread = 1.0 - nc * beta;
      for (int t = 0; t < nc; ++t) {
        const double frac = beta + spread * (u[t] / usum);
        const Cube ch = grid.child(cubes[c], t);
        const std::int64_t local =
            grid.cube_id(ch) - grid.cube_id(Cube{l + 1, {0, 0}});
        next[local] = cur[c] * frac;
      }
    }
    cur = std::move(next);
  }

  // Leaf-level masses are in cube-id (row-major) order already.
  const double vol = std::pow(grid.leaf_side(), n);
  std::vector<double> dens(grid.leaf_count());
  for (std::int64_t i = 0; i < grid.leaf_count(); ++i) dens[i] = cur[i] / vol;
  return Measure(grid, std::move(dens));
}

}  // namespace twlab
