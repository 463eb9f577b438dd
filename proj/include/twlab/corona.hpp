#pragma once

#include "twlab/poly.hpp"

namespace twlab {

struct CoronaConfig {
  double gamma = 4.0;  // stopping threshold, > 1
  int kappa = 2;       // tail order of the pivotal trigger
  double alpha = 0.0;  // fractional order
};

// Stopping-time decomposition of the tree driven by two triggers on strict
// subcubes I of the current stopping cube F:
//   average:  E_I|f| >= gamma E_F|f|      (sigma averages of |f|)
//   pivotal:  P_kappa(I, 1_F sigma)^2 |I|_omega >= gamma |I|_sigma
// Generations are the maximal triggering cubes; every tree cube belongs to
// exactly one corona (its lowest stopping ancestor).
class CoronaTree {
 public:
  enum class Trigger { root, average, pivotal };

  struct Stop {
    Cube cube;
    int generation = 0;
    int parent = -1;       // index into stops()
    double alpha_f = 0.0;  // sup of E|f| over stopping ancestors (incl. self)
    double avg = 0.0;      // E_F |f|
    Trigger trigger = Trigger::root;
  };

  const std::vector<Stop>& stops() const { return stops_; }
  int corona_of(const Cube& c) const { return corona_[grid_.cube_id(c)]; }
  int stop_index(const Cube& c) const { return stop_index_[grid_.cube_id(c)]; }
  const Grid& grid() const { return grid_; }
  const CoronaConfig& config() const { return cfg_; }
  int generations() const { return generations_; }
  // stopping children of stop s, as indices
  std::vector<int> children_of(int s) const;
  long skipped_zero_mass() const { return skipped_; }

  CoronaTree() : grid_(1, 1, {0.0, 0.0}, 1.0) {}  // empty placeholder tree

 private:
  friend CoronaTree build_corona(const std::vector<double>& f, const Measure& sigma,
                                 const Measure& omega, const CoronaConfig& cfg);
  Grid grid_;  // owned copy
  CoronaConfig cfg_;
  std::vector<Stop> stops_;
  std::vector<int> corona_;      // by cube id
  std::vector<int> stop_index_;  // by cube id, -1 when not stopping
  int generations_ = 0;
  long skipped_ = 0;
};

CoronaTree build_corona(const std::vector<double>& f, const Measure& sigma,
                        const Measure& omega, const CoronaConfig& cfg);

// tau-shifted coronas: the top tau levels of each corona are removed and the
// top tau levels of its stopping children adjoined (minus what was removed).
// Membership is evaluated literally from the definition; each cube lands in
// at most one shifted corona and the overlap bound is asserted.
struct ShiftedCorona {
  int tau = 0;
  std::vector<int> home;                  // by cube id; -1 when uncovered
  std::vector<std::vector<Cube>> members;  // per stop index
  int max_overlap = 0;
};
ShiftedCorona shifted_corona(const CoronaTree& tree, int tau);

struct CoronaDiagnostics {
  double carleson_max = 0.0;     // max_F sum_{F' below F} |F'|_s / |F|_s
  double first_step_max = 0.0;   // max_F lhs/rhs of the one-step mass bound
  double quasi_ratio = 0.0;      // sum alpha^2 |F|_s / ||f||^2_s
  double avg_control_max = 0.0;  // max over corona cubes of E_I|f| / (gamma alpha_F)
  double piv_control_max = 0.0;  // max over non-top corona cubes of the trigger ratio
  double piv_top_max = 0.0;      // same ratio at corona tops (reported only)
  long checked = 0;
  long skipped_zero_mass = 0;
};

// pivotal_sq is the squared order-kappa pivotal constant of (sigma, omega),
// used in the one-step Carleson bound.
CoronaDiagnostics verify_corona(const CoronaTree& tree, const std::vector<double>& f,
                                const Measure& sigma, const Measure& omega, double pivotal_sq);

}  // namespace twlab
