#include "twlab/grid.hpp"

#include <functional>

namespace twlab {

Grid::Grid(int n, int depth, Point origin, double side)
    : n_(n), depth_(depth), origin_(origin), side_(side) {
  if (n != 1 && n != 2) throw config_error("grid: dimension must be 1 or 2");
  if (depth < 1 || depth > 16) throw config_error("grid: depth out of range");
  if (!(side > 0.0)) throw config_error("grid: root side must be positive");
  leaf_count_ = std::int64_t{1} << (n_ * depth_);
  level_offset_.resize(depth_ + 2, 0);
  for (int l = 0; l <= depth_; ++l)
    level_offset_[l + 1] = level_offset_[l] + (std::int64_t{1} << (n_ * l));
  cube_count_ = level_offset_[depth_ + 1];
}

bool Grid::valid(const Cube& c) const {
  if (c.level < 0 || c.level > depth_) return false;
  const int m = cells_per_axis(c.level);
  for (int k = 0; k < n_; ++k)
    if (c.idx[k] < 0 || c.idx[k] >= m) return false;
  for (int k = n_; k < 2; ++k)
    if (c.idx[k] != 0) return false;
  return true;
}

Box Grid::box(const Cube& c) const {
  const double h = side_of(c.level);
  Box b;
  for (int k = 0; k < n_; ++k) {
    b.lo[k] = origin_[k] + h * c.idx[k];
    b.hi[k] = origin_[k] + h * (c.idx[k] + 1);
  }
  return b;
}

std::vector<Cube> Grid::children(const Cube& c) const {
  if (is_leaf(c)) throw config_error("grid: leaf cube has no children");
  std::vector<Cube> out;
  out.reserve(std::size_t{1} << n_);
  for (int which = 0; which < (1 << n_); ++which) out.push_back(child(c, which));
  return out;
}

Cube Grid::child(const Cube& c, int which) const {
  Cube ch;
  ch.level = c.level + 1;
  if (n_ == 1) {
    ch.idx = {2 * c.idx[0] + which, 0};
  } else {
    ch.idx = {2 * c.idx[0] + ((which >> 1) & 1), 2 * c.idx[1] + (which & 1)};
  }
  return ch;
}

Cube Grid::parent(const Cube& c) const {
  if (c.level == 0) throw config_error("grid: root has no parent");
  return Cube{c.level - 1, {c.idx[0] >> 1, c.idx[1] >> 1}};
}

Cube Grid::ancestor(const Cube& c, int level) const {
  if (level > c.level || level < 0) throw config_error("grid: bad ancestor level");
  const int shift = c.level - level;
  return Cube{level, {c.idx[0] >> shift, c.idx[1] >> shift}};
}

bool Grid::contains(const Cube& outer, const Cube& inner) const {
  if (outer.level > inner.level) return false;
  return ancestor(inner, outer.level) == outer;
}

int Grid::child_slot(const Cube& outer, const Cube& inner) const {
  const Cube ch = ancestor(inner, outer.level + 1);
  if (n_ == 1) return ch.idx[0] & 1;
  return ((ch.idx[0] & 1) << 1) | (ch.idx[1] & 1);
}

std::int64_t Grid::leaf_id(const Cube& leaf) const {
  if (n_ == 1) return leaf.idx[0];
  return static_cast<std::int64_t>(leaf.idx[0]) * leaves_per_axis() + leaf.idx[1];
}

Cube Grid::leaf_from_id(std::int64_t id) const {
  Cube c;
  c.level = depth_;
  if (n_ == 1) {
    c.idx = {static_cast<std::int32_t>(id), 0};
  } else {
    c.idx = {static_cast<std::int32_t>(id / leaves_per_axis()),
             static_cast<std::int32_t>(id % leaves_per_axis())};
  }
  return c;
}

Grid::LeafRange Grid::leaf_span(const Cube& c) const {
  const int shift = depth_ - c.level;
  LeafRange r{};
  for (int k = 0; k < n_; ++k) {
    r.lo[k] = c.idx[k] << shift;
    r.hi[k] = (c.idx[k] + 1) << shift;
  }
  for (int k = n_; k < 2; ++k) {
    r.lo[k] = 0;
    r.hi[k] = 1;
  }
  return r;
}

void Grid::for_each_leaf(const Cube& c, const std::function<void(std::int64_t)>& fn) const {
  const LeafRange r = leaf_span(c);
  if (n_ == 1) {
    for (std::int32_t i = r.lo[0]; i < r.hi[0]; ++i) fn(i);
    return;
  }
  const std::int64_t m = leaves_per_axis();
  for (std::int32_t i = r.lo[0]; i < r.hi[0]; ++i)
    for (std::int32_t j = r.lo[1]; j < r.hi[1]; ++j) fn(i * m + j);
}

std::int64_t Grid::cube_id(const Cube& c) const {
  const std::int64_t m = cells_per_axis(c.level);
  std::int64_t local = c.idx[0];
  if (n_ == 2) local = local * m + c.idx[1];
  return level_offset_[c.level] + local;
}

Cube Grid::cube_from_id(std::int64_t id) const {
  int level = 0;
  while (id >= level_offset_[level + 1]) ++level;
  std::int64_t local = id - level_offset_[level];
  Cube c;
  c.level = level;
  if (n_ == 1) {
    c.idx = {static_cast<std::int32_t>(local), 0};
  } else {
    const std::int64_t m = cells_per_axis(level);
    c.idx = {static_cast<std::int32_t>(local / m), static_cast<std::int32_t>(local % m)};
  }
  return c;
}

std::vector<Cube> Grid::level_cubes(int level) const {
  std::vector<Cube> out;
  const std::int64_t m = cells_per_axis(level);
  if (n_ == 1) {
    for (std::int64_t i = 0; i < m; ++i)
      out.push_back(Cube{level, {static_cast<std::int32_t>(i), 0}});
  } else {
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j)
        out.push_back(Cube{level, {static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)}});
  }
  return out;
}

std::vector<Cube> Grid::all_cubes() const {
  std::vector<Cube> out;
  out.reserve(cube_count_);
  for (int l = 0; l <= depth_; ++l) {
    auto lv = level_cubes(l);
    out.insert(out.end(), lv.begin(), lv.end());
  }
  return out;
}

void GoodnessConfig::validate() const {
  if (r < 1) throw config_error("goodness: r must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw config_error("goodness: eps must be in (0,1)");
  if (!(tau > r)) throw config_error("goodness: tau must exceed r");
  if (!(rho > r + tau)) throw config_error("goodness: rho must exceed r + tau");
}

void GoodnessConfig::validate_for(int n, int kappa, double alpha) const {
  validate();
  const double bound = kappa / (n + kappa - alpha);
  if (!(eps < bound))
    throw config_error("goodness: eps must be below kappa/(n+kappa-alpha)");
}

bool is_deeply_embedded(const Grid& g, const Cube& J, const Cube& I, int r, double eps) {
  if (!g.contains(I, J) || J == I) return false;
  if (J.level - I.level < r) return false;  // ell(J) <= 2^-r ell(I)
  const Box bj = g.box(J);
  double d = std::numeric_limits<double>::infinity();
  for (const Cube& ch : g.children(I))
    d = std::min(d, dist_sup_to_boundary(bj, g.box(ch), g.dim()));
  const double need =
      2.0 * std::pow(g.side_of(J.level), eps) * std::pow(g.side_of(I.level), 1.0 - eps);
  return d >= need;
}

bool is_good(const Grid& g, const Cube& J, const GoodnessConfig& cfg) {
  for (int level = J.level - 1; level >= 0; --level) {
    const Cube L = g.ancestor(J, level);
    if (J.level - L.level <= cfg.r - 1) continue;  // ell(J) >= 2^(1-r) ell(L)
    if (!is_deeply_embedded(g, J, L, cfg.r, cfg.eps)) return false;
  }
  return true;
}

}  // namespace twlab
