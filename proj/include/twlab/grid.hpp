#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "twlab/common.hpp"

namespace twlab {

// Node of the finite dyadic tree: (level, integer index per axis).  All
// geometry is derived from the owning Grid; nothing is stored redundantly.
struct Cube {
  int level = 0;
  std::array<std::int32_t, 2> idx{0, 0};

  friend bool operator==(const Cube&, const Cube&) = default;
  friend auto operator<=>(const Cube&, const Cube&) = default;
};

// Finite dyadic tree over a half-open root cube [origin, origin + side)^n,
// n in {1,2}, subdivided to `depth` levels.  Cubes are half-open so the 2^n
// children of every non-leaf cube partition it exactly.
class Grid {
 public:
  Grid(int n, int depth, Point origin, double side);

  int dim() const { return n_; }
  int depth() const { return depth_; }
  const Point& origin() const { return origin_; }
  double root_side() const { return side_; }

  int cells_per_axis(int level) const { return 1 << level; }
  int leaves_per_axis() const { return 1 << depth_; }
  std::int64_t leaf_count() const { return leaf_count_; }
  std::int64_t cube_count() const { return cube_count_; }  // all levels 0..depth

  double side_of(int level) const { return std::ldexp(side_, -level); }
  double leaf_side() const { return side_of(depth_); }
  // Diameter in the Euclidean norm (used by quadrature safety margins).
  double leaf_diameter() const {
    return leaf_side() * (n_ == 2 ? std::sqrt(2.0) : 1.0);
  }
  double root_diameter() const {
    return side_ * (n_ == 2 ? std::sqrt(2.0) : 1.0);
  }

  Cube root() const { return Cube{0, {0, 0}}; }
  bool is_leaf(const Cube& c) const { return c.level == depth_; }
  bool valid(const Cube& c) const;

  Box box(const Cube& c) const;
  Box root_box() const { return box(root()); }
  Point center(const Cube& c) const { return box(c).center(); }

  // The 2^n children in lexicographic order over the per-axis offset tuple
  // (axis 0 most significant), matching the row-major leaf order.
  std::vector<Cube> children(const Cube& c) const;
  Cube child(const Cube& c, int which) const;
  Cube parent(const Cube& c) const;
  Cube ancestor(const Cube& c, int level) const;
  bool contains(const Cube& outer, const Cube& inner) const;
  // Index of the child of `outer` whose subtree holds `inner` (strictly).
  int child_slot(const Cube& outer, const Cube& inner) const;

  // Row-major leaf numbering: id = idx[0]*2^depth + idx[1] when n == 2.
  std::int64_t leaf_id(const Cube& leaf) const;
  Cube leaf_from_id(std::int64_t id) const;
  // Half-open leaf-id range covered by a cube: [first, last).
  // Contiguous only when n == 1; see leaf_span for the general case.
  struct LeafRange {
    std::int32_t lo[2];
    std::int32_t hi[2];
  };
  LeafRange leaf_span(const Cube& c) const;
  void for_each_leaf(const Cube& c, const std::function<void(std::int64_t)>& fn) const;

  // Stable dense numbering of all tree cubes (level-major, row-major inside
  // a level); used as array keys by measures, bases and corona maps.
  std::int64_t cube_id(const Cube& c) const;
  Cube cube_from_id(std::int64_t id) const;

  // All cubes of one level / all cubes of the tree, in id order.
  std::vector<Cube> level_cubes(int level) const;
  std::vector<Cube> all_cubes() const;

 private:
  int n_;
  int depth_;
  Point origin_;
  double side_;
  std::int64_t leaf_count_;
  std::int64_t cube_count_;
  std::vector<std::int64_t> level_offset_;
};

// Goodness parameters: r (side-length gap), eps (embedding exponent),
// tau (corona shift depth), rho (size-splitting gap).
struct GoodnessConfig {
  int r = 2;
  double eps = 0.25;
  int tau = 3;
  int rho = 6;

  // tau > r and rho > r + tau; eps < kappa / (n + kappa - alpha) when the
  // operator context (kappa, alpha) is known.
  void validate() const;
  void validate_for(int n, int kappa, double alpha) const;
};

// J is (r,eps)-deeply embedded in I:  J zubset of I, ell(J) <= 2^-r ell(I),
// and dist(J, union of child boundaries of I) >= 2 ell(J)^eps ell(I)^(1-eps).
// Distances in the sup norm on closed boxes.
bool is_deeply_embedded(const Grid& g, const Cube& J, const Cube& I, int r, double eps);

// J is good when every strict supercube L in the grid satisfies either
// ell(J) >= 2^(1-r) ell(L) or the deep embedding above.
bool is_good(const Grid& g, const Cube& J, const GoodnessConfig& cfg);

}  // namespace twlab
