#pragma once

#include "twlab/poly.hpp"
#include "twlab/rng.hpp"

namespace twlab {

// Wavelet space of one cube: orthonormal piecewise polynomials on the 2^n
// children with vanishing mu-moments of all orders below kappa.  Coefficient
// rows live in the child frame, indexed (child, beta) child-major with beta
// over monomials_below(n, kappa).
struct CubeWaveletBasis {
  int dim = 0;    // generically (2^n - 1) * B; smaller when mu degenerates
  int frame = 0;  // 2^n * B
  std::vector<double> rows;
  const double* row(int a) const { return rows.data() + static_cast<std::size_t>(a) * frame; }
};

// Weighted Alpert multiresolution system on the finite tree of one measure:
// per-cube wavelet bases, per-cube orthonormal polynomial (coarse) bases,
// forward transform, reconstruction, and the coarse/detail projections.
class AlpertSystem {
 public:
  AlpertSystem(const Measure& mu, int kappa, double tol = 1e-10);

  const Measure& measure() const { return mu_; }
  const Grid& grid() const { return mu_.grid(); }
  int kappa() const { return kappa_; }
  int B() const { return B_; }
  const MomentTree& moments() const { return mom_; }

  const CubeWaveletBasis& wavelets(const Cube& c) const {
    return wav_[grid().cube_id(c)];
  }
  const CubePolyBasis& coarse(const Cube& c) const { return coarse_[grid().cube_id(c)]; }

  // Total number of wavelet coefficients and the slice of cube c inside it.
  int total_wavelet_dim() const { return total_dim_; }
  int wavelet_offset(const Cube& c) const { return offset_[grid().cube_id(c)]; }

  struct Coeffs {
    std::vector<double> wav;   // concatenated per-cube detail coefficients
    std::vector<double> root;  // coarse coefficients at the root
  };

  Coeffs transform(const LeafPoly& f) const;
  Coeffs transform_values(const std::vector<double>& leaf_values) const;
  LeafPoly reconstruct(const Coeffs& c) const;

  // Detail projection of f on cube I, as child-frame coefficients / LeafPoly.
  std::vector<double> delta_frame(const Coeffs& c, const Cube& I) const;
  void add_delta(LeafPoly& acc, const Coeffs& c, const Cube& I, double scale = 1.0) const;

  // Coarse projection E_{Q;kappa} f, as coefficients over m_Q monomials;
  // needs the weighted moment tree of f.
  std::vector<double> coarse_poly(const Cube& Q, const WeightedMomentTree& N) const;

  double coeff_norm2(const Coeffs& c) const;

  // Test hook: perturbs one stored wavelet coefficient so that invariant
  // suites can demonstrate failure detection.
  void corrupt_for_testing(double amount);

 private:
  void build_cube(const Cube& c);

  Measure mu_;  // owned copy: the system stays valid independently of callers
  int kappa_;
  int B_;
  double tol_;
  MomentTree mom_;
  std::vector<CubeWaveletBasis> wav_;
  std::vector<CubePolyBasis> coarse_;
  std::vector<int> offset_;
  int total_dim_ = 0;
};

// Gram matrix of the child-supported monomial frame of Q in L^2(mu):
// indices (child, beta) child-major, beta below kappa; block diagonal across
// children because their supports are disjoint.  Entries come from the moment
// tree in closed form (mom must hold order >= 2 kappa - 1).
std::vector<double> frame_gram(const Grid& g, const MomentTree& mom, const Cube& Q, int kappa);

struct SupBoundReport {
  double max_ratio = 0.0;
  Cube argmax{};
  int samples = 0;
};

// max over cubes and sampled f of ||E_{I;kappa} f||_Linf(mu) over the cube,
// divided by sqrt of the mu-average of |f|^2 on it.  The sup is taken over a
// fixed per-leaf sample grid.
SupBoundReport sup_bound_check(const AlpertSystem& sys, int nsamples, std::uint64_t seed);

}  // namespace twlab
