#pragma once

#include <optional>
#include <string>

#include "twlab/grid.hpp"

namespace twlab {

// Positive measure with density constant on each grid leaf (times Lebesgue).
// Prefix tables give O(1) exact masses of arbitrary axis-parallel boxes:
// the integral of a cell-constant density over [0,x) x [0,y) is the bilinear
// interpolation of the summed-area table, so fractional (dilate) faces are
// exact, not approximate.  Immutable after construction.
class Measure {
 public:
  Measure(Grid grid, std::vector<double> leaf_densities);

  const Grid& grid() const { return grid_; }
  double total_mass() const { return total_; }
  double density(std::int64_t leaf_id) const { return density_[leaf_id]; }
  const std::vector<double>& densities() const { return density_; }
  double leaf_mass(std::int64_t leaf_id) const {
    return density_[leaf_id] * leaf_volume_;
  }
  double leaf_volume() const { return leaf_volume_; }

  double mass(const Cube& c) const;
  // Mass of an arbitrary box, clipped to the root cube.  `clipped`, when
  // given, records whether any part of the box fell outside the root.
  double mass_box(const Box& b, bool* clipped = nullptr) const;
  // Mass of a lattice-aligned box given in leaf-index coordinates; faces off
  // the leaf lattice raise config_error ("off-lattice cube").
  double mass_aligned(const Box& b) const;

  // sum over leaves under `c` of density * leaf_volume, by direct summation
  // (the oracle for the prefix-table path).
  double mass_naive(const Cube& c) const;

  std::string to_json(int indent = -1) const;
  static Measure from_json(const std::string& text);

 private:
  double prefix_at(double u0, double u1) const;  // integral over [0,u) in index coords

  Grid grid_;
  std::vector<double> density_;
  std::vector<double> sat_;  // summed-area table of cell masses, (M+1)^n entries
  double leaf_volume_;
  double total_;
};

struct MeasureStats {
  double c_doub = 0.0;   // sup mass(2Q)/mass(Q) over lattice cubes with 2Q inside root
  bool doubling = true;  // false when some Q has mass 0 but 2Q has mass > 0
  Box argmax{};          // witness cube for c_doub
  double theta_rev = 0.0;  // empirical reverse doubling exponent
  std::int64_t samples = 0;
};

// Exhaustive scan over lattice-aligned cubes Q with 2Q inside the root.
// theta_rev is fitted so mass(sQ)/mass(Q) <= s^theta holds on every sampled
// (Q, s) pair used in the fit.
MeasureStats doubling_stats(const Measure& mu);

// Top-down martingale generator: the root carries mass 1 and every cube
// splits its mass into child fractions >= beta summing to 1, drawn from
// SplitMix64 streams keyed by (seed, cube id).  beta = 2^-n forces the
// Lebesgue-proportional split.
Measure random_doubling(const Grid& grid, double beta, std::uint64_t seed);

}  // namespace twlab
