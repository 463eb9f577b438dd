#pragma once

#include <string>

#include "twlab/forms.hpp"

namespace twlab {

// One (sigma, omega, T) instance at leaf resolution, plus the settings every
// experiment shares.  Built from an ExperimentConfig per seed.
struct Instance {
  Measure sigma;
  Measure omega;
  KernelSpec kernel;
  TruncationSpec trunc;
  int kappa = 2;
  int quad_order = 5;
  GoodnessConfig goodness;
  double gamma = 4.0;
  std::uint64_t seed = 0;
  double beta = 0.3;
};

struct ExperimentConfig {
  int dim = 1;
  int depth = 7;
  Point origin{0.0, 0.0};
  double side = 1.0;
  // measures: generated per seed unless files are given
  double beta_sigma = 0.3;
  double beta_omega = 0.3;
  std::vector<std::uint64_t> seeds{1};
  std::string sigma_file;  // overrides the generator when nonempty
  std::string omega_file;
  // operator
  std::string family = "hilbert";
  double alpha = 0.0;
  int riesz_component = 0;
  int kappa = 2;
  int quad_order = 5;
  double trunc_delta_factor = 2.0;  // times leaf diameter
  double trunc_radius_factor = 2.0; // times root diameter
  // corona / goodness
  double gamma = 4.0;
  GoodnessConfig goodness{1, 0.6, 2, 4};
  // report switches
  bool with_poly_testing = true;
  bool with_wbp = true;
  bool with_cancellation = true;
  bool with_profiles = true;
  std::vector<int> pivotal_kappas{1, 2, 3, 4};
  double profile_delta_full = 0.5;
  int threads = 0;

  static ExperimentConfig from_json(const std::string& text);
  std::string to_json() const;
  void validate() const;
  Grid grid() const { return Grid(dim, depth, origin, side); }
  Instance instance(std::uint64_t seed) const;
};

// Every extremal constant of one instance, with witnesses.
struct ConstantsReport {
  std::uint64_t seed = 0;
  double beta = 0.0;
  ConstantValue a2;
  ConstantValue a2_dyadic;
  ConstantValue testing;        // plain, sigma -> omega
  ConstantValue testing_dual;   // plain, omega -> sigma
  ConstantValue testing_kappa;  // order-kappa
  ConstantValue testing_kappa_dual;
  ConstantValue testing_triple;
  ConstantValue testing_triple_dual;
  PivotalResult pivotal;
  PivotalResult pivotal_dual;
  ConstantValue wbp;
  ConstantValue cancel_cube;
  ConstantValue cancel_euclid;
  ConstantValue cancel_cube_dual;
  ConstantValue profile_ball;
  ConstantValue profile_halfwidth;
  ConstantValue profile_ball_full;  // delta-full variant
  double norm = 0.0;                // operator norm at leaf resolution
  double ellipticity = 0.0;
  double doubling_sigma = 0.0;
  double doubling_omega = 0.0;
  double theta_sigma = 0.0;
  double theta_omega = 0.0;

  std::string to_json(bool with_timestamp) const;
  static void write_csv_header(std::ostream& os);
  void write_csv_row(std::ostream& os) const;
};

ConstantsReport compute_constants(const Instance& in);

// Identity / invariant verification of one instance; `fail` lists the names
// of exact identities whose residuals exceeded their tolerances.
struct VerificationRow {
  std::string name;
  double value = 0.0;
  double tol = 0.0;  // 0 means recorded only, never asserted
  bool pass = true;
};
struct VerificationReport {
  std::vector<VerificationRow> rows;
  bool ok = true;
  void add(const std::string& name, double value, double tol = 0.0);
  std::string to_json(bool with_timestamp) const;
};

// wavelet + operator + splitting identity suites at the instance's kappa;
// corrupt_basis flips one stored coefficient first (failure-path hook).
VerificationReport run_verification(const Instance& in, bool corrupt_basis = false);

// Corona trace and form ledger of one (f, g) pair, serialized.
struct DecompositionTrace {
  CoronaTree tree;
  ShiftedCorona shift;
  FormLedger ledger;
  std::string to_json(bool with_timestamp) const;
};
DecompositionTrace run_decomposition(const Instance& in, const std::vector<double>& f,
                                     const std::vector<double>& g);

std::vector<double> load_function_json(const std::string& text, const Grid& g);

}  // namespace twlab
