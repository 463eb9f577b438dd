#pragma once

#include "twlab/grid.hpp"

namespace twlab {

enum class KernelFamily { zero, hilbert, riesz, fractional };

const char* family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& s);

// Fractional-order singular kernel of one of the shipped families.
//   hilbert     n=1, alpha=0:      K(x,y) = 1/(y - x)
//   riesz_j     0<=alpha<n:        K(x,y) = (y_j - x_j)/|y - x|^(n+1-alpha)
//   fractional  0<=alpha<n:        K(x,y) = |x - y|^(alpha-n)
//   zero                            K = 0
// c_cz records an upper bound for |grad_1^j K| |x-y|^(n+j-alpha) over
// j <= smoothness, from the closed-form derivatives of each family.
struct KernelSpec {
  KernelFamily family = KernelFamily::hilbert;
  int dim = 1;
  double alpha = 0.0;
  int riesz_component = 0;
  int smoothness = 4;   // orders of size/smoothness tracked
  double holder = 1.0;  // Hoelder exponent at the top order
  double c_cz = 1.0;
  Point u0{1.0, 0.0};  // ellipticity direction
  bool elliptic = true;
  bool transposed = false;  // evaluate K(y,x) instead of K(x,y)

  static KernelSpec make(KernelFamily f, int n, double alpha = 0.0, int component = 0);
  KernelSpec adjoint() const;

  double eval(const Point& x, const Point& y) const;  // raw kernel, x != y
};

// Smooth radial truncation eta_{delta,R}: 0 on [0,delta], 1 on [2 delta, R],
// 0 on [2R, inf), built from the unique degree-(2k+1) polynomial smoothstep
// with k flat derivatives at both ends.
struct TruncationSpec {
  double delta = 0.0;
  double R = 1.0;
  int smooth_order = 3;  // k above; C^k truncation

  double eta(double t) const;
  static TruncationSpec for_grid(const Grid& g, int kappa, double delta_factor = 2.0,
                                 double R_factor = 2.0);
};

// s(0)=0, s(1)=1, vanishing derivatives up to `order` at both ends; clamped.
double smoothstep(int order, double u);

double eval_truncated(const KernelSpec& k, const TruncationSpec& t, const Point& x,
                      const Point& y);

// Finite-difference verification of the size/smoothness bounds on sampled
// pairs: for each order j <= j_max, the max over pairs (with |x-y| >= 2 delta)
// of |FD gradient of order j| * |x-y|^(n+j-alpha).  Pairs landing inside the
// cutoff are skipped and counted.
struct CzReport {
  std::vector<double> max_ratio;  // index j
  int skipped = 0;
  int used = 0;
};
CzReport verify_cz(const KernelSpec& k, const TruncationSpec& t,
                   const std::vector<std::pair<Point, Point>>& pairs, int j_max);

// min over sampled plateau offsets t of |K(x, x + t u0)| * |t|^(n-alpha).
double ellipticity_constant(const KernelSpec& k, const TruncationSpec& t, double t_lo,
                            double t_hi, int samples);

}  // namespace twlab
