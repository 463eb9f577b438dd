#pragma once

#include <iosfwd>

#include "twlab/kernel.hpp"
#include "twlab/measure.hpp"
#include "twlab/poly.hpp"

namespace twlab {

// Gauss-Legendre rule on [-1/2, 1/2], weights summing to 1.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  static const QuadRule& get(int order);
};

// Raw pairing matrix of the truncated operator between the leaf piecewise
// polynomial spaces:
//   raw[(i,b'),(j,b)] = iint K_{delta,R}(x,y) m_i^{b'}(x) m_j^b(y) dsigma(y) domega(x)
// over the leaf pair (L_i, L_j), by tensor Gauss quadrature per pair.  Row
// monomials run below row_kap, column monomials below col_kap.  Every bilinear
// identity of the lab is a bucketing of this one matrix, so the identities are
// exact regardless of quadrature order; quadrature only sets fidelity to the
// continuum operator.
class PolyOperator {
 public:
  PolyOperator(const KernelSpec& k, const TruncationSpec& t, const Measure& sigma,
               const Measure& omega, int row_kap, int col_kap, int quad_order,
               int threads = 0);

  const KernelSpec& kernel() const { return k_; }
  const TruncationSpec& trunc() const { return t_; }
  const Measure& sigma() const { return sigma_; }
  const Measure& omega() const { return omega_; }
  const Grid& grid() const { return sigma_.grid(); }
  int row_kap() const { return row_kap_; }
  int col_kap() const { return col_kap_; }
  int rowB() const { return rowB_; }
  int colB() const { return colB_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  int quad_order() const { return quad_order_; }

  double raw_at(std::int64_t r, std::int64_t c) const { return raw_[r * cols_ + c]; }
  const double* row_ptr(std::int64_t r) const { return raw_.data() + r * cols_; }

  // y += raw * u with columns restricted to [c0, c1); y has length rows().
  void apply_cols(const double* u, std::int64_t c0, std::int64_t c1, double* y) const;
  // v^T raw u with rows restricted to [r0, r1) and columns to [c0, c1).
  double pair_ranges(const double* v, std::int64_t r0, std::int64_t r1, const double* u,
                     std::int64_t c0, std::int64_t c1) const;

  // Column/row coefficient layout of LeafPoly objects (degree bounds must fit).
  std::vector<double> col_coeffs(const LeafPoly& u) const;
  std::vector<double> row_coeffs(const LeafPoly& v) const;

 private:
  KernelSpec k_;
  TruncationSpec t_;
  Measure sigma_;
  Measure omega_;
  int row_kap_, col_kap_, rowB_, colB_, quad_order_;
  std::int64_t rows_, cols_;
  std::vector<double> raw_;
};

// Leaf-constant realization: acts on leaf-averaged functions.  raw(i,j) is
// the plain double integral of the truncated kernel over the leaf pair;
// a(i,j) = raw(i,j) / (|L_i|_omega |L_j|_sigma) with zero-mass conventions.
class DiscreteOperator {
 public:
  static DiscreteOperator assemble(const KernelSpec& k, const TruncationSpec& t,
                                   const Measure& sigma, const Measure& omega,
                                   int quad_order, int threads = 0);
  static DiscreteOperator from_poly(const PolyOperator& p);
  static DiscreteOperator from_raw(const KernelSpec& k, const TruncationSpec& t,
                                   const Measure& sigma, const Measure& omega,
                                   std::vector<double> raw);

  const KernelSpec& kernel() const { return k_; }
  const TruncationSpec& trunc() const { return t_; }
  const Measure& sigma() const { return sigma_; }
  const Measure& omega() const { return omega_; }
  const Grid& grid() const { return sigma_.grid(); }
  std::int64_t leaves() const { return n_; }
  int quad_order() const { return quad_order_; }

  double raw(std::int64_t i, std::int64_t j) const { return raw_[i * n_ + j]; }
  double a(std::int64_t i, std::int64_t j) const;

  // Leaf omega-averages of T_sigma f for leaf-averaged f (zero rows on
  // omega-null leaves).
  std::vector<double> apply(const std::vector<double>& f) const;
  // <T_sigma f, g>_omega = g^T raw f, exact at matrix level.
  double pairing(const std::vector<double>& f, const std::vector<double>& g) const;

  DiscreteOperator adjoint() const;

  // Largest singular value of the weighted map L^2(sigma) -> L^2(omega).
  double norm_svd() const;
  double norm_power(double tol = 1e-10, int max_iter = 20000) const;
  // Full SVD below 4096 leaves, power iteration beyond.
  double operator_norm() const;

  // Little-endian dump: uint64 rows, uint64 cols, then row-major float64 of
  // the normalized matrix a(i,j).
  void dump_binary(std::ostream& os) const;

 private:
  KernelSpec k_;
  TruncationSpec t_;
  Measure sigma_;
  Measure omega_;
  std::int64_t n_;
  int quad_order_ = 0;
  std::vector<double> raw_;

  DiscreteOperator(KernelSpec k, TruncationSpec t, Measure s, Measure o, std::int64_t n)
      : k_(k), t_(t), sigma_(std::move(s)), omega_(std::move(o)), n_(n) {}
};

}  // namespace twlab
