#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace twlab {

// Thrown on malformed inputs (bad parameters, shape mismatches, off-lattice
// cubes).  The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an iterative numerical routine fails to converge.  The CLI
// maps this to exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Point = std::array<double, 2>;  // coordinate 1 unused when n == 1

// Axis-parallel box [lo, hi), possibly degenerate.  Used for dilates,
// annuli and distance computations; grid cubes convert to Box on demand.
struct Box {
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};

  double side(int axis) const { return hi[axis] - lo[axis]; }
  Point center() const {
    return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
  }
  double volume(int n) const {
    double v = 1.0;
    for (int k = 0; k < n; ++k) v *= side(k);
    return v;
  }
  bool contains(const Box& other, int n) const {
    for (int k = 0; k < n; ++k)
      if (other.lo[k] < lo[k] - 1e-12 || other.hi[k] > hi[k] + 1e-12) return false;
    return true;
  }
  bool disjoint(const Box& other, int n) const {
    for (int k = 0; k < n; ++k)
      if (other.hi[k] <= lo[k] || other.lo[k] >= hi[k]) return true;
    return false;
  }
  // Concentric dilate sQ: same center, side scaled by s.
  Box dilated(double s, int n) const {
    Box out = *this;
    for (int k = 0; k < n; ++k) {
      const double c = 0.5 * (lo[k] + hi[k]);
      const double h = 0.5 * s * side(k);
      out.lo[k] = c - h;
      out.hi[k] = c + h;
    }
    return out;
  }
};

// Sup-norm distance between closed boxes: coordinates decouple, so the
// minimum over point pairs of max_k |x_k - y_k| is max_k of the per-axis gaps.
inline double dist_sup(const Box& a, const Box& b, int n) {
  double d = 0.0;
  for (int k = 0; k < n; ++k) {
    const double gap = std::max({0.0, b.lo[k] - a.hi[k], a.lo[k] - b.hi[k]});
    d = std::max(d, gap);
  }
  return d;
}

// Sup-norm distance from box a (assumed a subset of b) to the boundary of b.
inline double dist_sup_to_boundary_from_inside(const Box& a, const Box& b, int n) {
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    d = std::min(d, a.lo[k] - b.lo[k]);
    d = std::min(d, b.hi[k] - a.hi[k]);
  }
  return std::max(d, 0.0);
}

// Sup-norm distance from box a to the boundary of box b (general position).
inline double dist_sup_to_boundary(const Box& a, const Box& b, int n) {
  if (b.contains(a, n)) return dist_sup_to_boundary_from_inside(a, b, n);
  if (a.disjoint(b, n)) return dist_sup(a, b, n);
  // Overlapping without containment: some point of the shared region is on
  // or past the boundary of b, so the distance is zero for our purposes.
  return 0.0;
}

inline double norm_sup(const Point& p, int n) {
  double v = 0.0;
  for (int k = 0; k < n; ++k) v = std::max(v, std::abs(p[k]));
  return v;
}

inline double norm_euclid(const Point& p, int n) {
  double v = 0.0;
  for (int k = 0; k < n; ++k) v += p[k] * p[k];
  return std::sqrt(v);
}

inline double sqr(double x) { return x * x; }

}  // namespace twlab
