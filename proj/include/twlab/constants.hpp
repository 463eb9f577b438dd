#pragma once

#include <optional>

#include "twlab/alpert.hpp"
#include "twlab/op.hpp"

namespace twlab {

// Argmax provenance of a computed supremum.
struct Witness {
  std::string kind;         // "cube", "box", "pair", "antichain", "shell"
  std::vector<Cube> cubes;  // primary cube(s), when dyadic
  Box box{};                // lattice cube or ball, when applicable
  double a = 0.0;           // aux (eps / beta index / profile radius ...)
  double b = 0.0;           // aux (N / second parameter)
  double c = 0.0;           // aux
  bool clipped = false;     // some region was clipped to the root
};

struct ConstantValue {
  double value = 0.0;
  Witness witness;
};

// Classical fractional Muckenhoupt constant: exhaustive sup over lattice
// cubes (every integer position and size) of the normalized mass product,
// or over dyadic tree cubes only when dyadic_only is set.
ConstantValue muckenhoupt_a2(const Measure& sigma, const Measure& omega, double alpha,
                             bool dyadic_only = false);

// Fractional tail integral of order m over the cube Q (given as a box):
//   integral of side(Q)^m / (side(Q) + |y - c_Q|)^(n+m-alpha) dmu(y),
// restricted to the leaves of `support` (default root), each further scaled
// by leaf_weights when given.  Closed form per leaf in 1D, fixed 6-point
// tensor Gauss per leaf in 2D.
double poisson_tail(const Measure& mu, int m, double alpha, const Box& Q,
                    const std::optional<Cube>& support = std::nullopt,
                    const double* leaf_weights = nullptr);

// Plain cube testing: sup over dyadic cubes Q of
//   sqrt( integral over Q of |T_sigma 1_Q|^2 domega / |Q|_sigma ).
ConstantValue cube_testing(const DiscreteOperator& op);

// Polynomial cube testing at order kappa: the test functions are 1_Q m_Q^beta
// for |beta| < kappa; with `triple` the image is integrated over 3Q clipped
// to the root.  Images live in the operator's row space (per-leaf projection).
ConstantValue cube_testing_poly(const PolyOperator& op, int kappa, bool triple);

// Order-kappa pivotal constant: for each ambient dyadic cube Q the exact
// optimum over subdecompositions of Q into disjoint dyadic subcubes (tree
// antichains) of sum of P_kappa(R, 1_Q sigma)^2 |R|_omega, normalized by
// |Q|_sigma; maximized over Q.  Returns the square root.
struct PivotalResult {
  double value = 0.0;
  Cube ambient{};
  std::vector<Cube> antichain;
};
PivotalResult pivotal_constant(const Measure& sigma, const Measure& omega, double alpha,
                               int kappa);

// Oracles for the DP (exposed so the acceptance suite can run them):
// plain recursion over the subtree of `ambient` (no tables), and full
// enumeration of materialized antichains (subtree height at most 4).
double pivotal_plain_recursion(const Measure& sigma, const Measure& omega, double alpha,
                               int kappa, const Cube& ambient);
double pivotal_enumerate_antichains(const Measure& sigma, const Measure& omega, double alpha,
                                    int kappa, const Cube& ambient);
// Best over `count` random antichains of the ambient subtree (lower bound).
double pivotal_random_antichains(const Measure& sigma, const Measure& omega, double alpha,
                                 int kappa, const Cube& ambient, int count,
                                 std::uint64_t seed);

// Weak boundedness constant over adjacent dyadic pairs (Q inside 3Q' minus Q'
// or vice versa): largest singular value of the bilinear block of T between
// the L2-orthonormalized polynomial spaces of degree < kappa1 on Q (sigma)
// and < kappa2 on Q' (omega).
ConstantValue wbp_constant(const PolyOperator& op, int kappa1, int kappa2);

enum class AnnulusNorm { cube, euclid };

// Shell integral of the raw kernel against sigma at the point x:
//   integral over { eps < ||x-y|| < N } of K(x,y) dsigma(y),
// by per-leaf quadrature with the indicator resolved at the nodes.
double shell_integral(const KernelSpec& k, const Measure& sigma, const Point& x, double eps,
                      double N, AnnulusNorm norm, int quad_order);

// Cancellation constant: sup over leaf centers x0 and dyadic 0 < eps < N <=
// root side of the omega-integral of the squared shell integrals over the
// ball ||x - x0|| < N, divided by the sigma-mass of the same ball (clipped to
// the root, recorded).
ConstantValue cancellation_constant(const KernelSpec& k, const Measure& sigma,
                                    const Measure& omega, AnnulusNorm norm, int quad_order);

// Localized testing over translated profiles.  The profile family B_t:
//   cube      indicator of Q_t (reduces to plain cube testing),
//   ball      indicator of the inscribed ball of Q_t (cube again when n = 1),
//   halfwidth indicator of the half-size concentric cube.
// All are bounded by C/|Q_t|, supported in Q_t, with unit integral; the test
// function is b_Q(x) = |Q| B_{side(Q)}(x - c_Q) at leaf resolution.
enum class TestProfile { cube, ball, halfwidth };
const char* profile_name(TestProfile p);

// sqrt( integral over region |T_sigma b_Q|^2 domega ) / sqrt( integral over Q
// |b_Q|^2 dsigma ), sup over dyadic cubes Q; region is Q itself, or
// (2/delta_full) Q clipped to the root when delta_full > 0.
ConstantValue b_testing(const DiscreteOperator& op, TestProfile profile,
                        double delta_full = 0.0);

// --- inequality-ratio samplers -------------------------------------------

struct RatioReport {
  double max_ratio = 0.0;
  long samples = 0;   // configurations satisfying the hypotheses
  long rejected = 0;  // sampled but ineligible
  Witness witness;
};

// Tail-decay inequality on nested triples J inside I inside K with J away
// from the boundary of I:
//   P_m(J, sigma 1_{K minus I}) <= C (l(J)/l(I))^(m - eps(n+m-alpha))
//                                  * P_m(I, sigma 1_{K minus I});
// reports the max of lhs/rhs-without-C over sampled eligible triples.
RatioReport poisson_decay_check(const Measure& sigma, int m, double alpha, double eps,
                                int count, std::uint64_t seed);

// Localization bound for detail projections: for Psi_J in the wavelet space
// of J, polynomials R with sup_J |R| <= 1, and nu = 1_{root minus gammaJ}
// sigma,
//   |<R T(nu), Psi_J>_omega| <= C P_kappa(J, nu) sqrt(|J|_omega) ||Psi_J||;
// reports the max ratio over sampled (J, R, Psi_J).
RatioReport pivotal_bound_check(const DiscreteOperator& op, const AlpertSystem& omega_sys,
                                int kappa, double gamma, int count, std::uint64_t seed);

}  // namespace twlab
