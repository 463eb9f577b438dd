#pragma once

#include "twlab/measure.hpp"

namespace twlab {

// Multi-index with |beta| bounded; beta[1] is unused when n == 1.
struct MIndex {
  int b[2] = {0, 0};
  int total() const { return b[0] + b[1]; }
};

// Monomials of total degree < kap in graded-lex order (grade, then b[0]).
const std::vector<MIndex>& monomials_below(int n, int kap);
int mcount(int n, int kap);  // C(kap-1+n, n)
// Position of a multi-index inside monomials_below(n, *): closed form.
inline int mpos(int n, int b0, int b1) {
  if (n == 1) return b0;
  const int g = b0 + b1;
  return g * (g + 1) / 2 + b0;
}

// integral of t^p over [-1/2, 1/2]; zero for odd p.
double unit_moment_1d(int p);
double unit_moment(int n, const MIndex& p);

// Matrix R with m_src^gamma(x) = sum_beta R[gamma][beta] m_dst^beta(x) for
// x in dst, dst a subcube of src; both monomial families cube-normalized
// ((x - center)/side)^beta.  Row-major over monomials_below(n, kap).
std::vector<double> reexpand_matrix(const Grid& g, const Cube& src, const Cube& dst, int kap);
// Same, but between arbitrary boxes (used for polynomials given on dilates).
std::vector<double> reexpand_matrix_boxes(int n, const Box& src, const Box& dst, int kap);

// Piecewise polynomial at leaf resolution: one coefficient block per leaf in
// the leaf-normalized monomial basis of total degree < kap.
class LeafPoly {
 public:
  LeafPoly(const Grid& g, int kap);

  const Grid& grid() const { return *grid_; }
  int kap() const { return kap_; }
  int block() const { return block_; }
  double* leaf(std::int64_t id) { return coef_.data() + id * block_; }
  const double* leaf(std::int64_t id) const { return coef_.data() + id * block_; }
  const std::vector<double>& raw() const { return coef_; }

  static LeafPoly from_leaf_values(const Grid& g, const std::vector<double>& v, int kap = 1);

  // Adds p (coefficients over monomials_below(n, pk) on cube Q) to *this.
  void add_on_cube(const Cube& Q, const double* p, int pk, double scale = 1.0);
  void add_scaled(const LeafPoly& other, double scale);
  void restrict_to(const Cube& Q);  // zero outside Q
  LeafPoly restricted(const Cube& Q) const;

  LeafPoly multiplied(const LeafPoly& other) const;  // degree bounds add
  double value_at(const Point& x) const;
  double value_on_leaf(std::int64_t id, const Point& x) const;
  // max |p| over a sample grid on the leaf (17^n points incl. corners).
  double sampled_sup_on_leaf(std::int64_t id) const;

  double inner(const LeafPoly& other, const Measure& mu) const;
  double norm2(const Measure& mu) const { return inner(*this, mu); }

 private:
  const Grid* grid_;
  int kap_;
  int block_;
  std::vector<double> coef_;
};

// Moments M_Q[gamma] = integral over Q of m_Q^gamma dmu for every tree cube,
// gamma of total degree < kap; built leaf-up with the two (or four) fixed
// child-to-parent reexpansion matrices.
class MomentTree {
 public:
  MomentTree(const Measure& mu, int kap);
  int kap() const { return kap_; }
  int block() const { return block_; }
  const double* at(const Grid& g, const Cube& c) const {
    return m_.data() + g.cube_id(c) * block_;
  }

 private:
  int kap_;
  int block_;
  std::vector<double> m_;
};

// Weighted moments N_Q[gamma] = integral over Q of f m_Q^gamma dmu.
class WeightedMomentTree {
 public:
  WeightedMomentTree(const Measure& mu, const LeafPoly& f, int kap);
  int kap() const { return kap_; }
  int block() const { return block_; }
  const double* at(const Grid& g, const Cube& c) const {
    return m_.data() + g.cube_id(c) * block_;
  }

 private:
  int kap_;
  int block_;
  std::vector<double> m_;
};

// Orthonormal basis of span{ m_Q^gamma : |gamma| < kap } in L^2(mu),
// represented by rank x block coefficient rows over m_Q monomials.
// Directions whose Gram-Schmidt residual drops below tol * (initial norm)
// are treated as mu-degenerate and dropped.
struct CubePolyBasis {
  int rank = 0;
  int block = 0;
  std::vector<double> rows;
  const double* row(int j) const { return rows.data() + static_cast<std::size_t>(j) * block; }
};
CubePolyBasis orthonormal_polys(const Grid& g, const MomentTree& mom, const Cube& Q,
                                int kap, double tol = 1e-10);

}  // namespace twlab
